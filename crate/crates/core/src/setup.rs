//! Initial profiles sampled on the grids.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{ConfigGrid, OmegaGrid};
use crate::math::{cos, sin, PI};

#[derive(Debug, Clone, PartialEq)]
pub enum DensityProfile {
    Constant(f64),
    /// mean + amplitude·cos(2πk x/l_x)·cos(2πk y/l_y).
    Cosine { mean: f64, amplitude: f64, wavenumber: u32 },
    Table(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum VelocityProfile {
    Zero,
    Constant([f64; 2]),
    /// u = (A sin(2πk y/l_y), 0).
    Shear { amplitude: f64, wavenumber: u32 },
    Table(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PsiProfile {
    Equilibrium,
    Constant(f64),
    /// 1 + amplitude·(q_x² − q_y²)/b · h(x), h(x) = cos(2πk x/l_x), or 1
    /// when k = 0. The perturbation is even in q.
    Perturbation { amplitude: f64, wavenumber: u32 },
    /// Values laid out [cell][node].
    Table(Vec<f64>),
}

fn table_len(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::ShapeMismatch { expected, found });
    }
    Ok(())
}

impl DensityProfile {
    pub fn sample(&self, omega: &OmegaGrid) -> Result<Vec<f64>> {
        let n = omega.cells();
        Ok(match self {
            DensityProfile::Constant(c) => vec![*c; n],
            DensityProfile::Cosine {
                mean,
                amplitude,
                wavenumber,
            } => (0..n)
                .map(|c| {
                    let (x, y) = omega.center(c);
                    let k = 2.0 * PI * *wavenumber as f64;
                    mean + amplitude * cos(k * x / omega.lx) * cos(k * y / omega.ly)
                })
                .collect(),
            DensityProfile::Table(v) => {
                table_len(v.len(), n)?;
                v.clone()
            }
        })
    }
}

impl VelocityProfile {
    /// Returns (u_x, u_y).
    pub fn sample(&self, omega: &OmegaGrid) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = omega.cells();
        Ok(match self {
            VelocityProfile::Zero => (vec![0.0; n], vec![0.0; n]),
            VelocityProfile::Constant(u) => (vec![u[0]; n], vec![u[1]; n]),
            VelocityProfile::Shear {
                amplitude,
                wavenumber,
            } => (
                (0..n)
                    .map(|c| {
                        let (_, y) = omega.center(c);
                        amplitude * sin(2.0 * PI * *wavenumber as f64 * y / omega.ly)
                    })
                    .collect(),
                vec![0.0; n],
            ),
            VelocityProfile::Table(v) => {
                table_len(v.len(), n)?;
                (v.iter().map(|u| u[0]).collect(), v.iter().map(|u| u[1]).collect())
            }
        })
    }
}

impl PsiProfile {
    pub fn sample(&self, omega: &OmegaGrid, cfg: &ConfigGrid) -> Result<Vec<f64>> {
        let nq = cfg.nodes();
        let n = omega.cells();
        Ok(match self {
            PsiProfile::Equilibrium => vec![1.0; n * nq],
            PsiProfile::Constant(c) => vec![*c; n * nq],
            PsiProfile::Perturbation {
                amplitude,
                wavenumber,
            } => {
                let b = cfg.springs[0].b;
                let shape: Vec<f64> = (0..nq)
                    .map(|j| {
                        let q = cfg.connector(j, 0);
                        (q[0] * q[0] - q[1] * q[1]) / b
                    })
                    .collect();
                let mut out = Vec::with_capacity(n * nq);
                for c in 0..n {
                    let (x, _) = omega.center(c);
                    let h = if *wavenumber == 0 {
                        1.0
                    } else {
                        cos(2.0 * PI * *wavenumber as f64 * x / omega.lx)
                    };
                    out.extend(shape.iter().map(|s| 1.0 + amplitude * s * h));
                }
                out
            }
            PsiProfile::Table(v) => {
                table_len(v.len(), n * nq)?;
                v.clone()
            }
        })
    }
}
