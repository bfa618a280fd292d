//! Body force f(x, t).

use alloc::vec::Vec;

use crate::grid::OmegaGrid;
use crate::math::{sin, PI};

#[allow(unpredictable_function_pointer_comparisons)]
#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    None,
    Constant([f64; 2]),
    /// f = (A sin(2π k y / l_y), 0).
    Shear { amplitude: f64, wavenumber: u32 },
    /// One value per cell, row-major (x, y); constant in time.
    Table(Vec<[f64; 2]>),
    Function(fn(f64, f64, f64) -> [f64; 2]),
}

impl Forcing {
    /// Samples f at cell centers and time t.
    pub fn sample(&self, omega: &OmegaGrid, t: f64) -> Vec<[f64; 2]> {
        let n = omega.cells();
        match self {
            Forcing::None => alloc::vec![[0.0; 2]; n],
            Forcing::Constant(f) => alloc::vec![*f; n],
            Forcing::Shear {
                amplitude,
                wavenumber,
            } => (0..n)
                .map(|c| {
                    let (_, y) = omega.center(c);
                    [amplitude * sin(2.0 * PI * (*wavenumber as f64) * y / omega.ly), 0.0]
                })
                .collect(),
            Forcing::Table(v) => v.clone(),
            Forcing::Function(f) => (0..n)
                .map(|c| {
                    let (x, y) = omega.center(c);
                    f(x, y, t)
                })
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Forcing::None => true,
            Forcing::Constant(f) => f[0] == 0.0 && f[1] == 0.0,
            Forcing::Shear { amplitude, .. } => *amplitude == 0.0,
            Forcing::Table(v) => v.iter().all(|f| f[0] == 0.0 && f[1] == 0.0),
            Forcing::Function(_) => false,
        }
    }
}
