mod common;

use common::*;
use nsfp_core::grid::{build_config_grid, BoundaryCondition, ConfigGrid};
use nsfp_core::model::{linear_chain_rouse, ChainParams, ModelParams};
use nsfp_core::stress::*;
use proptest::prelude::*;
use rand::Rng;

/// A smooth random test function on D: a cubic in (q_x, q_y).
fn cubic(coef: &[f64; 10], q: [f64; 2]) -> f64 {
    let (x, y) = (q[0], q[1]);
    let m = [1.0, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y];
    coef.iter().zip(&m).map(|(c, m)| c * m).sum()
}

/// Both sides of the integration-by-parts identity
/// ∫ M (Bq)·∇φ = ∫ M φ (U' q qᵀ − I) : B on one grid.
fn intbyparts_sides(coef: &[f64; 10], b: &[f64; 4], nr: usize) -> (f64, f64) {
    let o = ops(4, 4, nr, nr, BoundaryCondition::Periodic);
    let nq = o.nq();
    let phi: Vec<f64> = (0..nq).map(|j| cubic(coef, o.cfg.connector(j, 0))).collect();
    let psi = PsiField::new(phi.repeat(o.cells()), o.cells(), nq).unwrap();
    let flux = kramers_tensor_flux(&psi, &o).unwrap()[0];
    let moment = kramers_tensor(&psi, &o.cfg, 0).unwrap()[0];
    let rho = number_density(&psi, &o.cfg).unwrap()[0];
    let lhs: f64 = (0..4).map(|k| (flux[k] - if k % 3 == 0 { rho } else { 0.0 }) * b[k]).sum();
    let rhs: f64 = (0..4).map(|k| (moment[k] - if k % 3 == 0 { rho } else { 0.0 }) * b[k]).sum();
    (lhs, rhs)
}

#[test]
fn number_density_examples() {
    let o = ops(4, 4, 8, 8, BoundaryCondition::Periodic);
    let (n, nq) = (o.cells(), o.nq());
    for (c, expect) in [(1.0, 1.0), (0.0, 0.0), (2.0, 2.0)] {
        let r = number_density(&PsiField::constant(n, nq, c), &o.cfg).unwrap();
        assert!(r.iter().all(|x| (x - expect).abs() < 1e-13), "{c}");
    }
    assert!(number_density(&PsiField::constant(n, nq + 1, 1.0), &o.cfg).is_err());
    assert!(PsiField::new(vec![0.0; 3], 2, 2).is_err());
}

#[test]
fn kramers_equilibrium_and_zero() {
    let chain = dumbbell();
    let cfg = build_config_grid(&chain, 32, 32).unwrap();
    let nq = cfg.nodes();
    let c = kramers_tensor(&PsiField::constant(2, nq, 1.0), &cfg, 0).unwrap();
    let err = c[0].iter().zip([1.0, 0.0, 0.0, 1.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err <= 5e-4, "{err}");
    let z = kramers_tensor(&PsiField::constant(2, nq, 0.0), &cfg, 0).unwrap();
    assert!(z.iter().all(|t| t.iter().all(|x| *x == 0.0)));
    assert!(kramers_tensor(&PsiField::constant(2, nq, 1.0), &cfg, 1).is_err());
}

#[test]
fn kramers_even_field_is_symmetric() {
    let chain = dumbbell();
    let cfg = build_config_grid(&chain, 16, 16).unwrap();
    let g = &cfg.springs[0];
    let nt = g.n_theta;
    let mut r = rng(7);
    // even in q: the node opposite (a, c) is (a, c + nθ/2)
    let mut psi = vec![0.0; cfg.nodes()];
    for a in 0..g.n_r {
        for c in 0..nt / 2 {
            let v = r.gen_range(0.0..2.0);
            psi[a * nt + c] = v;
            psi[a * nt + c + nt / 2] = v;
        }
    }
    let field = PsiField::new(psi.clone(), 1, cfg.nodes()).unwrap();
    let c = kramers_tensor(&field, &cfg, 0).unwrap()[0];
    // brute-force oracle on the same nodes
    let mut o = [0.0; 4];
    for j in 0..cfg.nodes() {
        let q = g.node(j);
        let s = cfg.weights[j] * g.du_shell[j / nt] * psi[j];
        o[0] += s * q[0] * q[0];
        o[1] += s * q[0] * q[1];
        o[2] += s * q[1] * q[0];
        o[3] += s * q[1] * q[1];
    }
    assert_eq!(c[1], c[2]);
    assert!(max_abs_diff(&c, &o) < 1e-14);
    // positive semidefinite
    assert!(c[0] >= 0.0 && c[3] >= 0.0 && c[0] * c[3] - c[1] * c[2] >= -1e-14);
}

#[test]
fn extra_stress_examples() {
    let params = ModelParams {
        k_temp: 1.5,
        z_int: 0.3,
        ..ModelParams::default()
    };
    let chain = dumbbell();
    let cfg = build_config_grid(&chain, 32, 32).unwrap();
    let nq = cfg.nodes();
    let s = extra_stress(&PsiField::constant(3, nq, 1.0), &params, &chain, &cfg).unwrap();
    let e = -(1.5 + 0.3);
    for t in &s.tau {
        assert!(max_abs_diff(t, &[e, 0.0, 0.0, e]) <= 5e-4 * 1.5);
        assert_eq!(t[1], t[2]);
    }
    let s = extra_stress(&PsiField::constant(3, nq, 0.0), &params, &chain, &cfg).unwrap();
    assert!(s.tau.iter().all(|t| t.iter().all(|x| *x == 0.0)));

    // K = 2, 𝔷 → 0 limit: τ = k(2I − 3I)
    let chain2 = ChainParams::new(2, vec![4.0, 5.0], linear_chain_rouse(2)).unwrap();
    let cfg2 = build_config_grid(&chain2, 8, 8).unwrap();
    let p2 = ModelParams {
        z_int: 1e-300,
        ..ModelParams::default()
    };
    let s = extra_stress(&PsiField::constant(1, cfg2.nodes(), 1.0), &p2, &chain2, &cfg2).unwrap();
    assert!(max_abs_diff(&s.tau[0], &[-1.0, 0.0, 0.0, -1.0]) < 1e-10, "{:?}", s.tau[0]);
    assert_eq!(s.kramers.len(), 2);
}

#[test]
fn extra_stress_linear_part_superposes() {
    let params = ModelParams::default();
    let chain = dumbbell();
    let cfg = build_config_grid(&chain, 8, 8).unwrap();
    let nq = cfg.nodes();
    let mut r = rng(11);
    let a = random_vec(&mut r, 2 * nq, 0.0, 2.0);
    let b = random_vec(&mut r, 2 * nq, 0.0, 2.0);
    let (x, y) = (0.7, -1.3);
    let ab: Vec<f64> = a.iter().zip(&b).map(|(p, q)| x * p + y * q).collect();
    let lin = |v: &Vec<f64>| {
        let s = extra_stress(&PsiField::new(v.clone(), 2, nq).unwrap(), &params, &chain, &cfg).unwrap();
        s.tau
            .iter()
            .zip(&s.varrho)
            .map(|(t, r)| {
                let z = params.z_int * r * r;
                [t[0] + z, t[1], t[2], t[3] + z]
            })
            .collect::<Vec<_>>()
    };
    let (ta, tb, tab) = (lin(&a), lin(&b), lin(&ab));
    for c in 0..2 {
        for k in 0..4 {
            assert!((tab[c][k] - x * ta[c][k] - y * tb[c][k]).abs() < 1e-13);
        }
    }
}

#[test]
fn integration_by_parts_converges() {
    let mut r = rng(3);
    for _ in 0..5 {
        let coef: [f64; 10] = core::array::from_fn(|_| r.gen_range(-1.0..1.0));
        let b: [f64; 4] = core::array::from_fn(|_| r.gen_range(-1.0..1.0));
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let (l, rr) = intbyparts_sides(&coef, &b, n);
                (l - rr).abs()
            })
            .collect();
        println!("{errs:?}");
        assert!(errs[2] <= 1e-8 + errs[1] / 3.0, "{errs:?}");
    }
}

#[test]
fn flux_and_moment_kramers_agree_at_equilibrium() {
    let o = ops(4, 4, 32, 32, BoundaryCondition::Periodic);
    let psi = PsiField::constant(o.cells(), o.nq(), 1.0);
    let f = kramers_tensor_flux(&psi, &o).unwrap();
    let m = kramers_tensor(&psi, &o.cfg, 0).unwrap();
    assert!(max_abs_diff(&f[0], &m[0]) < 1e-12);
    assert!(max_abs_diff(&f[0], &[1.0, 0.0, 0.0, 1.0]) < 1e-12);
}

fn dense_weak_divergence(tau: &[Tensor], wx: &[f64], wy: &[f64], nx: usize, periodic: bool) -> f64 {
    // central differences with odd reflection at walls, assembled cell by cell
    let h = 1.0 / nx as f64;
    let at = |w: &[f64], ix: isize, iy: isize| -> f64 {
        let n = nx as isize;
        if periodic {
            w[(ix.rem_euclid(n) * n + iy.rem_euclid(n)) as usize]
        } else if ix < 0 || ix >= n || iy < 0 || iy >= n {
            let (cx, cy) = (ix.clamp(0, n - 1), iy.clamp(0, n - 1));
            -w[(cx * n + cy) as usize]
        } else {
            w[(ix * n + iy) as usize]
        }
    };
    let mut s = 0.0;
    for ix in 0..nx as isize {
        for iy in 0..nx as isize {
            let c = (ix * nx as isize + iy) as usize;
            let g = [
                (at(wx, ix + 1, iy) - at(wx, ix - 1, iy)) / (2.0 * h),
                (at(wx, ix, iy + 1) - at(wx, ix, iy - 1)) / (2.0 * h),
                (at(wy, ix + 1, iy) - at(wy, ix - 1, iy)) / (2.0 * h),
                (at(wy, ix, iy + 1) - at(wy, ix, iy - 1)) / (2.0 * h),
            ];
            s -= h * h * (0..4).map(|k| tau[c][k] * g[k]).sum::<f64>();
        }
    }
    s
}

#[test]
fn weak_divergence_examples() {
    for bc in [BoundaryCondition::Periodic, BoundaryCondition::NoSlipNeumann] {
        let o = ops(4, 4, 4, 8, bc);
        let n = o.cells();
        let mut r = rng(5);
        let wx = random_vec(&mut r, n, -1.0, 1.0);
        let wy = random_vec(&mut r, n, -1.0, 1.0);
        assert_eq!(stress_divergence_weak(&vec![[0.0; 4]; n], &wx, &wy, &o).unwrap(), 0.0);
        if bc == BoundaryCondition::Periodic {
            let d = stress_divergence_weak(&vec![[2.0, 0.0, 0.0, 2.0]; n], &wx, &wy, &o).unwrap();
            assert!(d.abs() < 1e-12);
        }
        for _ in 0..10 {
            let tau: Vec<Tensor> = (0..n).map(|_| core::array::from_fn(|_| r.gen_range(-1.0..1.0))).collect();
            let got = stress_divergence_weak(&tau, &wx, &wy, &o).unwrap();
            let want = dense_weak_divergence(&tau, &wx, &wy, 4, bc == BoundaryCondition::Periodic);
            assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()), "{bc:?} {got} {want}");
            let load = stress_load(&tau, &o).unwrap();
            let dot: f64 = load.iter().zip(wx.iter().chain(&wy)).map(|(a, b)| a * b).sum();
            assert!((dot - got).abs() <= 1e-12 * (1.0 + got.abs()));
        }
        assert!(stress_divergence_weak(&vec![[0.0; 4]; n - 1], &wx, &wy, &o).is_err());
    }
}

fn cfg16() -> ConfigGrid {
    build_config_grid(&dumbbell(), 16, 16).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kramers_is_linear(a in prop::collection::vec(0.0f64..3.0, 256), s in -2.0f64..2.0) {
        let cfg = cfg16();
        let p = PsiField::new(a.clone(), 1, 256).unwrap();
        let ps = PsiField::new(a.iter().map(|x| s * x).collect(), 1, 256).unwrap();
        let c = kramers_tensor(&p, &cfg, 0).unwrap()[0];
        let cs = kramers_tensor(&ps, &cfg, 0).unwrap()[0];
        for k in 0..4 {
            prop_assert!((cs[k] - s * c[k]).abs() <= 1e-13 * (1.0 + c[k].abs()));
        }
        prop_assert!((c[1] - c[2]).abs() <= 1e-15);
    }
}
