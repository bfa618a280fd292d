//! Moments of ψ̂: number density ϱ, Kramers tensors and the extra stress.
//!
//! Tensors are 2×2, stored row-major as `[xx, xy, yx, yy]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::ConfigGrid;
use crate::model::{ChainParams, ModelParams};
use crate::ops::DiscreteOperators;

pub type Tensor = [f64; 4];

/// ψ̂ on Ω × D, laid out [cell][node].
#[derive(Debug, Clone, PartialEq)]
pub struct PsiField {
    pub values: Vec<f64>,
    pub cells: usize,
    pub nq: usize,
}

impl PsiField {
    pub fn new(values: Vec<f64>, cells: usize, nq: usize) -> Result<Self> {
        if values.len() != cells * nq {
            return Err(Error::ShapeMismatch {
                expected: cells * nq,
                found: values.len(),
            });
        }
        Ok(PsiField { values, cells, nq })
    }

    pub fn constant(cells: usize, nq: usize, c: f64) -> Self {
        PsiField {
            values: vec![c; cells * nq],
            cells,
            nq,
        }
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        &self.values[c * self.nq..(c + 1) * self.nq]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressField {
    pub tau: Vec<Tensor>,
    pub varrho: Vec<f64>,
    /// One tensor field per spring.
    pub kramers: Vec<Vec<Tensor>>,
}

fn check(psi: &PsiField, cfg: &ConfigGrid) -> Result<()> {
    if psi.nq != cfg.nodes() {
        return Err(Error::ShapeMismatch {
            expected: cfg.nodes(),
            found: psi.nq,
        });
    }
    Ok(())
}

/// ϱ = Σ_j W_j ψ̂(·, q_j).
pub fn number_density(psi: &PsiField, cfg: &ConfigGrid) -> Result<Vec<f64>> {
    check(psi, cfg)?;
    Ok((0..psi.cells)
        .map(|c| psi.cell(c).iter().zip(&cfg.weights).map(|(p, w)| p * w).sum())
        .collect())
}

/// Kramers tensor C_i = ∫ M ψ̂ U_i' q_i q_iᵀ dq by the moment formula.
pub fn kramers_tensor(psi: &PsiField, cfg: &ConfigGrid, i: usize) -> Result<Vec<Tensor>> {
    check(psi, cfg)?;
    if i >= cfg.springs.len() {
        return Err(Error::invalid("spring", "spring index out of range"));
    }
    let g = &cfg.springs[i];
    // per-node factor W_j U'_i q_i q_iᵀ
    let node_terms: Vec<Tensor> = (0..cfg.nodes())
        .map(|j| {
            let ji = if cfg.springs.len() == 1 { j } else { cfg.split(j)[i] };
            let q = g.node(ji);
            let s = cfg.weights[j] * g.du_shell[ji / g.n_theta];
            let xy = s * q[0] * q[1];
            [s * q[0] * q[0], xy, xy, s * q[1] * q[1]]
        })
        .collect();
    Ok((0..psi.cells)
        .map(|c| {
            let mut t = [0.0; 4];
            for (p, n) in psi.cell(c).iter().zip(&node_terms) {
                for k in 0..4 {
                    t[k] += p * n[k];
                }
            }
            t
        })
        .collect())
}

/// Flux form of the Kramers tensor for one spring,
/// C = ϱ I + Σ_f w_f (ψ̂_b − ψ̂_a)/dist n_f ⊗ q_f.
/// This is the tensor paired with ∇u by the discrete drag term.
pub fn kramers_tensor_flux(psi: &PsiField, ops: &DiscreteOperators) -> Result<Vec<Tensor>> {
    check(psi, &ops.cfg)?;
    let rho = number_density(psi, &ops.cfg)?;
    Ok((0..psi.cells)
        .map(|c| {
            let p = psi.cell(c);
            let mut t = [rho[c], 0.0, 0.0, rho[c]];
            for f in &ops.q_faces {
                let g = f.flux_coeff() * (p[f.b] - p[f.a]);
                for k in 0..4 {
                    t[k] += g * f.nq[k];
                }
            }
            t
        })
        .collect())
}

/// τ = k[Σ_i C_i − (K+1)ϱ I] − 𝔷ϱ² I, with the moment-formula C_i.
pub fn extra_stress(
    psi: &PsiField,
    params: &ModelParams,
    chain: &ChainParams,
    cfg: &ConfigGrid,
) -> Result<StressField> {
    let varrho = number_density(psi, cfg)?;
    let mut kramers = Vec::with_capacity(chain.springs());
    for i in 0..chain.springs() {
        kramers.push(kramers_tensor(psi, cfg, i)?);
    }
    let kk = chain.bead_count_coeff() as f64;
    let tau = (0..psi.cells)
        .map(|c| {
            let mut t = [0.0; 4];
            for ci in &kramers {
                for k in 0..4 {
                    t[k] += ci[c][k];
                }
            }
            let iso = kk * varrho[c];
            let mut out = [
                params.k_temp * (t[0] - iso),
                params.k_temp * t[1],
                params.k_temp * t[2],
                params.k_temp * (t[3] - iso),
            ];
            let z = params.z_int * varrho[c] * varrho[c];
            out[0] -= z;
            out[3] -= z;
            out
        })
        .collect();
    Ok(StressField {
        tau,
        varrho,
        kramers,
    })
}

/// The polymer stress the momentum equation is tested against,
/// τ₁ = k(C − 2ϱI) with the flux-form C (K = 1).
pub fn polymer_stress(psi: &PsiField, params: &ModelParams, ops: &DiscreteOperators) -> Result<Vec<Tensor>> {
    let c = kramers_tensor_flux(psi, ops)?;
    let rho = number_density(psi, &ops.cfg)?;
    Ok(c
        .iter()
        .zip(&rho)
        .map(|(t, r)| {
            let k = params.k_temp;
            [k * (t[0] - 2.0 * r), k * t[1], k * t[2], k * (t[3] - 2.0 * r)]
        })
        .collect())
}

/// Load vector ℓ with ℓ·w = −Σ_c v τ_c : ∇_h w_c, ordered [w_x; w_y].
pub fn stress_load(tau: &[Tensor], ops: &DiscreteOperators) -> Result<Vec<f64>> {
    let n = ops.cells();
    if tau.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            found: tau.len(),
        });
    }
    let v = ops.omega.volume();
    let mut out = vec![0.0; 2 * n];
    for c in 0..n {
        for dir in 0..2 {
            for (m, s) in ops.vel_stencil(c, dir) {
                out[m] -= v * tau[c][dir] * s;
                out[n + m] -= v * tau[c][2 + dir] * s;
            }
        }
    }
    Ok(out)
}

/// −Σ_c v τ_c : ∇_h w_c, the weak divergence of τ tested with w.
pub fn stress_divergence_weak(tau: &[Tensor], wx: &[f64], wy: &[f64], ops: &DiscreteOperators) -> Result<f64> {
    let n = ops.cells();
    for len in [wx.len(), wy.len()] {
        if len != n {
            return Err(Error::ShapeMismatch { expected: n, found: len });
        }
    }
    if tau.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            found: tau.len(),
        });
    }
    let g = ops.velocity_gradient(wx, wy);
    let v = ops.omega.volume();
    Ok(-v * tau
        .iter()
        .zip(&g)
        .map(|(t, g)| t.iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
        .sum::<f64>())
}
