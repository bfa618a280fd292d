//! Pointwise model: Warner FENE springs, Maxwellians, equations of state and
//! the chain structure.
//!
//! ## Formulas
//!
//! ```text
//! U(s)  = -(b/2) log(1 - 2s/b),   U'(s) = 1/(1 - 2s/b),   0 <= s < b/2
//! F(q)  = U'(|q|²/2) q
//! M(q)  = Π_i Z_i⁻¹ exp(-U_i(|q_i|²/2))
//! p_κ   = c_p ρ^γ + κ(ρ⁴ + ρ^Γ),            Γ = max(γ, 8)
//! P_κ   = c_p ρ^γ/(γ-1) + κ(ρ⁴/3 + ρ^Γ/(Γ-1))
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::eigen::SymmetricEigen;
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::math::{exp, ln, ln_1p, powf, sqrt, PI};
use crate::quadrature::adaptive_gauss_legendre;

/// Relative tolerance of the radial quadrature for the partition functions.
pub const PARTITION_REL_TOL: f64 = 1e-12;

/// Bead-spring chain structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    k: usize,
    d: usize,
    b: Vec<f64>,
    theta: Vec<f64>,
    rouse: Vec<f64>,
    a0: f64,
    partition: Vec<f64>,
}

impl ChainParams {
    /// Builds a chain of `b.len()` Warner springs in dimension `d` with the
    /// given row-major Rouse matrix.
    pub fn new(d: usize, b: Vec<f64>, rouse: Vec<f64>) -> Result<Self> {
        let k = b.len();
        if k == 0 {
            return Err(Error::invalid("K", "requires at least one spring"));
        }
        if d != 2 && d != 3 {
            return Err(Error::invalid("d", "requires d = 2 or d = 3"));
        }
        for &bi in &b {
            if !(bi > 2.0) || !bi.is_finite() {
                return Err(Error::invalid("b", "requires b_i > 2"));
            }
        }
        if rouse.len() != k * k {
            return Err(Error::ShapeMismatch {
                expected: k * k,
                found: rouse.len(),
            });
        }
        let a0 = rouse_min_eigenvalue(&rouse, k)?;
        let theta = b.iter().map(|&bi| bi / 2.0).collect();
        let mut partition = Vec::with_capacity(k);
        for &bi in &b {
            partition.push(partition_function(bi, d)?);
        }
        Ok(ChainParams {
            k,
            d,
            b,
            theta,
            rouse,
            a0,
            partition,
        })
    }

    /// A single dumbbell (K = 1) with Rouse matrix [a].
    pub fn dumbbell(b: f64, a: f64) -> Result<Self> {
        ChainParams::new(2, vec![b], vec![a])
    }

    pub fn springs(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn b(&self, i: usize) -> f64 {
        self.b[i]
    }

    pub fn b_all(&self) -> &[f64] {
        &self.b
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.theta[i]
    }

    /// Row-major K×K Rouse matrix.
    pub fn rouse(&self) -> &[f64] {
        &self.rouse
    }

    pub fn rouse_entry(&self, i: usize, j: usize) -> f64 {
        self.rouse[i * self.k + j]
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// Number of beads, K + 1.
    pub fn bead_count_coeff(&self) -> usize {
        self.k + 1
    }

    /// Z_i from the adaptive radial quadrature.
    pub fn partition(&self, i: usize) -> f64 {
        self.partition[i]
    }
}

/// tridiag[-1, 2, -1] of size k, row-major.
pub fn linear_chain_rouse(k: usize) -> Vec<f64> {
    let mut a = vec![0.0; k * k];
    for i in 0..k {
        a[i * k + i] = 2.0;
        if i + 1 < k {
            a[i * k + i + 1] = -1.0;
            a[(i + 1) * k + i] = -1.0;
        }
    }
    a
}

fn sphere_measure(d: usize) -> f64 {
    match d {
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// exp(-U(r²/2)) = (1 - r²/b)^{b/2}, evaluated through log1p.
pub fn boltzmann_factor(r2: f64, b: f64) -> f64 {
    if r2 >= b {
        return 0.0;
    }
    exp(0.5 * b * ln_1p(-r2 / b))
}

fn partition_function(b: f64, d: usize) -> Result<f64> {
    let rb = sqrt(b);
    let radial = adaptive_gauss_legendre(
        |r| boltzmann_factor(r * r, b) * powf(r, (d - 1) as f64),
        0.0,
        rb,
        PARTITION_REL_TOL,
    )?;
    Ok(sphere_measure(d) * radial)
}

/// Returns (U_i(s), U_i'(s)).
pub fn spring_potential(s: f64, i: usize, chain: &ChainParams) -> Result<(f64, f64)> {
    let b = chain.b(i);
    if !(s >= 0.0) || s >= 0.5 * b {
        return Err(Error::Domain {
            what: "spring_potential",
            value: s,
        });
    }
    let x = 2.0 * s / b;
    Ok((-0.5 * b * ln_1p(-x), 1.0 / (1.0 - x)))
}

/// F_i(q) = U_i'(|q|²/2) q.
pub fn spring_force(q: &[f64], i: usize, chain: &ChainParams) -> Result<Vec<f64>> {
    let r2: f64 = q.iter().map(|x| x * x).sum();
    if r2 >= chain.b(i) {
        return Err(Error::Domain {
            what: "spring_force",
            value: r2,
        });
    }
    let (_, du) = spring_potential(0.5 * r2, i, chain)?;
    Ok(q.iter().map(|x| du * x).collect())
}

/// Returns (M(q), log M(q)) for the full connector vector q = (q_1, …, q_K).
/// On ∂D the value is exactly 0 with log M = -∞.
pub fn maxwellian(q: &[f64], chain: &ChainParams) -> Result<(f64, f64)> {
    let d = chain.dim();
    if q.len() != d * chain.springs() {
        return Err(Error::ShapeMismatch {
            expected: d * chain.springs(),
            found: q.len(),
        });
    }
    let mut log_m = 0.0;
    let mut on_boundary = false;
    for i in 0..chain.springs() {
        let qi = &q[i * d..(i + 1) * d];
        let r2: f64 = qi.iter().map(|x| x * x).sum();
        let b = chain.b(i);
        if r2 > b || !r2.is_finite() {
            return Err(Error::Domain {
                what: "maxwellian",
                value: r2,
            });
        }
        if r2 == b {
            on_boundary = true;
            continue;
        }
        let (u, _) = spring_potential(0.5 * r2, i, chain)?;
        log_m += -u - ln(chain.partition(i));
    }
    if on_boundary {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    Ok((exp(log_m), log_m))
}

/// Smallest eigenvalue a₀ of the symmetric Rouse matrix.
pub fn rouse_min_eigenvalue(a: &[f64], k: usize) -> Result<f64> {
    if a.len() != k * k {
        return Err(Error::ShapeMismatch {
            expected: k * k,
            found: a.len(),
        });
    }
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    for i in 0..k {
        for j in 0..i {
            if (a[i * k + j] - a[j * k + i]).abs() > 1e-12 * scale {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let e = SymmetricEigen::new(a, k);
    let a0 = e.values[0];
    if !(a0 > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: a0 });
    }
    Ok(a0)
}

/// Equation of state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eos {
    /// p = c_p ρ^γ.
    Isentropic,
    /// p = A0 (ρ/ρ*)^γ − A1.
    Tait { a0: f64, a1: f64, rho_ref: f64 },
}

/// Physical and regularization scalars of the scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub c_p: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub l_cut: f64,
    pub delta: f64,
    pub dt: f64,
    pub eps: f64,
    pub lambda: f64,
    pub k_temp: f64,
    pub z_int: f64,
    pub mu_s: f64,
    pub mu_b: f64,
    pub eos: Eos,
    pub forcing: Forcing,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            c_p: 1.0,
            gamma: 2.0,
            kappa: 0.0,
            alpha: 0.0,
            l_cut: 10.0,
            delta: 0.0,
            dt: 1e-2,
            eps: 1e-2,
            lambda: 1.0,
            k_temp: 1.0,
            z_int: 0.1,
            mu_s: 1.0,
            mu_b: 0.0,
            eos: Eos::Isentropic,
            forcing: Forcing::None,
        }
    }
}

impl ModelParams {
    /// Γ = max(γ, 8).
    pub fn big_gamma(&self) -> f64 {
        self.gamma.max(8.0)
    }

    /// Checks every admissibility rule and returns all violations.
    pub fn violations(&self) -> Vec<(&'static str, &'static str)> {
        let mut v = Vec::new();
        if !(self.gamma > 1.5) {
            v.push(("gamma", "requires γ > 3/2"));
        }
        if !(self.c_p > 0.0) {
            v.push(("c_p", "requires c_p > 0"));
        }
        if !(self.kappa >= 0.0) {
            v.push(("kappa", "requires κ ≥ 0"));
        }
        if !(self.alpha >= 0.0) {
            v.push(("alpha", "requires α ≥ 0"));
        }
        if !(self.l_cut > 1.0) {
            v.push(("L", "requires L > 1"));
        }
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            v.push(("delta", "requires δ ∈ [0, 1)"));
        }
        if !(self.dt > 0.0) {
            v.push(("dt", "requires Δt > 0"));
        }
        if !(self.eps > 0.0) {
            v.push(("eps", "requires ε > 0"));
        }
        if !(self.lambda > 0.0) {
            v.push(("lambda", "requires λ > 0"));
        }
        if !(self.k_temp > 0.0) {
            v.push(("k", "requires k > 0"));
        }
        if !(self.z_int > 0.0) {
            v.push(("z", "𝔷 > 0 required"));
        }
        if !(self.mu_s > 0.0) {
            v.push(("mu_s", "requires μ^S > 0"));
        }
        if !(self.mu_b >= 0.0) {
            v.push(("mu_b", "requires μ^B ≥ 0"));
        }
        if let Eos::Tait { a0, rho_ref, .. } = self.eos {
            if !(a0 > 0.0) || !(rho_ref > 0.0) {
                v.push(("tait", "requires A0 > 0 and ρ* > 0"));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().first() {
            None => Ok(()),
            Some(&(field, rule)) => Err(Error::invalid(field, rule)),
        }
    }
}

fn check_rho(rho: f64, what: &'static str) -> Result<()> {
    if !(rho >= 0.0) {
        return Err(Error::Domain { what, value: rho });
    }
    Ok(())
}

/// p_κ(ρ).
pub fn eos_pressure(rho: f64, params: &ModelParams) -> Result<f64> {
    check_rho(rho, "eos_pressure")?;
    Ok(pressure_unchecked(rho, params))
}

/// p_κ'(ρ).
pub fn eos_pressure_deriv(rho: f64, params: &ModelParams) -> Result<f64> {
    check_rho(rho, "eos_pressure_deriv")?;
    Ok(pressure_deriv_unchecked(rho, params))
}

/// P_κ(ρ), the primitive with ρP' − P = p.
pub fn pressure_primitive(rho: f64, params: &ModelParams) -> Result<f64> {
    check_rho(rho, "pressure_primitive")?;
    Ok(primitive_unchecked(rho, params))
}

/// P_κ'(ρ).
pub fn pressure_primitive_deriv(rho: f64, params: &ModelParams) -> Result<f64> {
    check_rho(rho, "pressure_primitive_deriv")?;
    Ok(primitive_deriv_unchecked(rho, params))
}

fn kappa_terms(rho: f64, params: &ModelParams) -> (f64, f64, f64) {
    // (pressure, primitive, primitive derivative) of κ(ρ⁴ + ρ^Γ)
    if params.kappa == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let g = params.big_gamma();
    let r4 = rho * rho * rho * rho;
    let rg = powf(rho, g);
    let rg1 = powf(rho, g - 1.0);
    let k = params.kappa;
    (
        k * (r4 + rg),
        k * (r4 / 3.0 + rg / (g - 1.0)),
        k * (4.0 * rho * rho * rho / 3.0 + g * rg1 / (g - 1.0)),
    )
}

pub(crate) fn pressure_deriv_unchecked(rho: f64, params: &ModelParams) -> f64 {
    let rho = rho.max(0.0);
    let g = params.gamma;
    let base = match params.eos {
        Eos::Isentropic => params.c_p * g * powf(rho, g - 1.0),
        Eos::Tait { a0, rho_ref, .. } => a0 * g / rho_ref * powf(rho / rho_ref, g - 1.0),
    };
    let kappa = if params.kappa == 0.0 {
        0.0
    } else {
        let gg = params.big_gamma();
        params.kappa * (4.0 * rho * rho * rho + gg * powf(rho, gg - 1.0))
    };
    base + kappa
}

pub(crate) fn pressure_unchecked(rho: f64, params: &ModelParams) -> f64 {
    let rho = rho.max(0.0);
    let base = match params.eos {
        Eos::Isentropic => params.c_p * powf(rho, params.gamma),
        Eos::Tait { a0, a1, rho_ref } => a0 * powf(rho / rho_ref, params.gamma) - a1,
    };
    base + kappa_terms(rho, params).0
}

pub(crate) fn primitive_unchecked(rho: f64, params: &ModelParams) -> f64 {
    let rho = rho.max(0.0);
    let g = params.gamma;
    let base = match params.eos {
        Eos::Isentropic => params.c_p * powf(rho, g) / (g - 1.0),
        // ρP' − P = p is solved by a ρ^γ/(γ−1) + A1; the constant keeps P ≥ 0
        Eos::Tait { a0, a1, rho_ref } => a0 * powf(rho / rho_ref, g) / (g - 1.0) + a1,
    };
    base + kappa_terms(rho, params).1
}

pub(crate) fn primitive_deriv_unchecked(rho: f64, params: &ModelParams) -> f64 {
    let rho = rho.max(0.0);
    let g = params.gamma;
    let base = match params.eos {
        Eos::Isentropic => params.c_p * g * powf(rho, g - 1.0) / (g - 1.0),
        Eos::Tait { a0, rho_ref, .. } => {
            a0 * g * powf(rho / rho_ref, g - 1.0) / ((g - 1.0) * rho_ref)
        }
    };
    base + kappa_terms(rho, params).2
}
