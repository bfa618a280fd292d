#![allow(dead_code)]

pub mod oracle;

use nalgebra::{DMatrix, DVector};
use nsfp_core::grid::{build_config_grid, BoundaryCondition, OmegaGrid};
use nsfp_core::linalg::CsrMatrix;
use nsfp_core::model::{ChainParams, ModelParams};
use nsfp_core::ops::{assemble_operators, DiscreteOperators};
use nsfp_core::scheme::{PicardControls, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dumbbell() -> ChainParams {
    ChainParams::dumbbell(4.0, 2.0).unwrap()
}

pub fn ops(nx: usize, ny: usize, nr: usize, nt: usize, bc: BoundaryCondition) -> DiscreteOperators {
    let chain = dumbbell();
    let omega = OmegaGrid::new(nx, ny, 1.0, 1.0, bc).unwrap();
    let cfg = build_config_grid(&chain, nr, nt).unwrap();
    assemble_operators(&omega, &cfg, &chain, &ModelParams::default()).unwrap()
}

pub fn relaxation_params() -> ModelParams {
    ModelParams {
        dt: 0.01,
        lambda: 0.25,
        z_int: 0.1,
        ..ModelParams::default()
    }
}

pub fn problem(
    nx: usize,
    nr: usize,
    bc: BoundaryCondition,
    params: ModelParams,
    controls: PicardControls,
) -> Problem {
    let chain = dumbbell();
    let omega = OmegaGrid::new(nx, nx, 1.0, 1.0, bc).unwrap();
    let cfg = build_config_grid(&chain, nr, nr).unwrap();
    let ops = assemble_operators(&omega, &cfg, &chain, &params).unwrap();
    Problem::new(ops, chain, params, controls).unwrap()
}

pub fn random_vec(r: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(lo..hi)).collect()
}

pub fn dense(n: usize) -> DMatrix<f64> {
    DMatrix::zeros(n, n)
}

pub fn csr_to_dense(a: &CsrMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.n, a.n, &a.to_dense())
}

pub fn lu_solve(a: DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let x = a.lu().solve(&DVector::from_column_slice(b)).expect("singular oracle matrix");
    x.iter().copied().collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
