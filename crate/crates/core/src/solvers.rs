//! The sub-solves of one time step and the initial-data regularizations.
//!
//! * continuity: implicit Euler substeps of ∂ρ/∂t + div(uρ) − αΔρ = 0 with
//!   upwind fluxes, followed by a conservative update from the computed
//!   fluxes so mass is exact independently of the Krylov tolerance;
//! * momentum: the linear system of the skew-symmetrized momentum balance;
//! * Fokker-Planck: implicit diffusion in x and q, explicit transport and
//!   drag evaluated from the lagged Picard iterate, tested with the mean
//!   Λ(a, b) of the cut-off. The implicit operator is inverted exactly by
//!   [`DiscreteOperators::spectral_solve`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{bicgstab, cg, CsrMatrix, SolveStats, SolverSettings};
use crate::model::{primitive_deriv_unchecked, primitive_unchecked, pressure_unchecked, ModelParams};
use crate::ops::DiscreteOperators;
use crate::regularization::{cutoff_beta, CutoffParams};
use crate::stress::{stress_load, PsiField, Tensor};

/// Solves (v I + α S) ρ⁰ = v ρ₀ with the Neumann stiffness S.
pub fn project_initial_density(
    rho0: &[f64],
    alpha: f64,
    ops: &DiscreteOperators,
    settings: &SolverSettings,
) -> Result<Vec<f64>> {
    let n = ops.cells();
    if rho0.len() != n {
        return Err(Error::ShapeMismatch { expected: n, found: rho0.len() });
    }
    if alpha == 0.0 {
        return Ok(rho0.to_vec());
    }
    let v = ops.omega.volume();
    let mut t: Vec<(usize, usize, f64)> = (0..n).map(|c| (c, c, v)).collect();
    ops.scalar_stiffness(alpha, 0, &mut t);
    let a = CsrMatrix::from_triplets(n, t);
    let b: Vec<f64> = rho0.iter().map(|r| v * r).collect();
    let mut x = rho0.to_vec();
    cg(&a, &b, &mut x, settings)?;
    // conservative form: ρ⁰ = ρ₀ − (α/v) S ρ̃
    let s = ops.laplace_neumann(&x);
    Ok(rho0.iter().zip(&s).map(|(r, l)| r + alpha * l).collect())
}

/// Solves v ρ⁰ u⁰ + Δt S u⁰ = v ρ⁰ u₀ per component (S the velocity
/// stiffness with no-slip walls).
pub fn project_initial_velocity(
    ux0: &[f64],
    uy0: &[f64],
    rho0: &[f64],
    dt: f64,
    ops: &DiscreteOperators,
    settings: &SolverSettings,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = ops.cells();
    for len in [ux0.len(), uy0.len(), rho0.len()] {
        if len != n {
            return Err(Error::ShapeMismatch { expected: n, found: len });
        }
    }
    let v = ops.omega.volume();
    let mut t: Vec<(usize, usize, f64)> = (0..n).map(|c| (c, c, v * rho0[c])).collect();
    ops.velocity_stiffness(dt, 0, &mut t);
    let a = CsrMatrix::from_triplets(n, t);
    if a.diagonal().iter().any(|d| *d <= 0.0) {
        return Err(Error::Singular("initial velocity projection needs ρ⁰ > 0 or walls"));
    }
    let mut out = Vec::with_capacity(2);
    for u0 in [ux0, uy0] {
        let b: Vec<f64> = (0..n).map(|c| v * rho0[c] * u0[c]).collect();
        let mut x = u0.to_vec();
        cg(&a, &b, &mut x, settings)?;
        out.push(x);
    }
    let uy = out.pop().unwrap();
    let ux = out.pop().unwrap();
    Ok((ux, uy))
}

/// Solves the M-weighted Helmholtz problem
/// (ψ⁰, φ) + Δt(∇ₓψ⁰, ∇ₓφ) + Δt(∇_qψ⁰, ∇_qφ) = (β^L(ψ̂₀), φ).
pub fn smooth_initial_psi(psi0: &PsiField, l_cut: f64, dt: f64, ops: &DiscreteOperators) -> Result<PsiField> {
    if psi0.cells != ops.cells() || psi0.nq != ops.nq() {
        return Err(Error::ShapeMismatch {
            expected: ops.cells() * ops.nq(),
            found: psi0.values.len(),
        });
    }
    let v = ops.omega.volume();
    let w = &ops.cfg.weights;
    let nq = ops.nq();
    let rhs: Vec<f64> = psi0
        .values
        .iter()
        .enumerate()
        .map(|(i, p)| v * w[i % nq] * cutoff_beta(*p, l_cut))
        .collect();
    let x = ops.spectral_solve(&rhs, dt, dt * v);
    PsiField::new(x, psi0.cells, nq)
}

/// Dissipation produced by the continuity substeps over one slab (already
/// multiplied by the substep length where applicable).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ContinuityDissipation {
    /// Σ v [P'(ρ_s)(ρ_s − ρ_{s−1}) − P(ρ_s) + P(ρ_{s−1})].
    pub convexity: f64,
    /// Numerical dissipation of the upwind fluxes.
    pub upwind: f64,
    /// α-diffusion, τ α Σ_f (a_f/h)(ρ_r − ρ_l)(P'_r − P'_l).
    pub alpha: f64,
}

impl ContinuityDissipation {
    pub fn total(&self) -> f64 {
        self.convexity + self.upwind + self.alpha
    }
}

/// Densities ρ₀ = ρ^{n−1}, …, ρ_m = ρⁿ of one slab and the slab pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabDensity {
    pub levels: Vec<Vec<f64>>,
    /// p̄ = (1/m) Σ_{s=1..m} p_κ(ρ_s).
    pub p_bar: Vec<f64>,
    pub dissipation: ContinuityDissipation,
    pub iterations: usize,
}

impl SlabDensity {
    pub fn rho_n(&self) -> &[f64] {
        self.levels.last().unwrap()
    }

    /// A slab whose density does not move (used for the initial state).
    pub fn frozen(rho: &[f64], params: &ModelParams) -> Self {
        SlabDensity {
            levels: vec![rho.to_vec(), rho.to_vec()],
            p_bar: rho.iter().map(|r| pressure_unchecked(r.max(0.0), params)).collect(),
            dissipation: ContinuityDissipation::default(),
            iterations: 0,
        }
    }
}

/// Upwind advection plus α-diffusion, B ρ with B ρ summing to zero.
pub fn continuity_operator(u_face: &[f64], alpha: f64, ops: &DiscreteOperators) -> CsrMatrix {
    let n = ops.cells();
    let mut t = Vec::with_capacity(8 * n);
    for (f, &u) in ops.faces.iter().zip(u_face) {
        let a = ops.omega.face_area(f.dir);
        let (up, um) = (u.max(0.0) * a, u.min(0.0) * a);
        t.push((f.l, f.l, up));
        t.push((f.l, f.r, um));
        t.push((f.r, f.l, -up));
        t.push((f.r, f.r, -um));
    }
    ops.scalar_stiffness(alpha, 0, &mut t);
    CsrMatrix::from_triplets(n, t)
}

/// The implicit-Euler matrix v I + τ B of one substep.
pub fn continuity_matrix(u_face: &[f64], alpha: f64, tau: f64, ops: &DiscreteOperators) -> CsrMatrix {
    let b = continuity_operator(u_face, alpha, ops);
    let v = ops.omega.volume();
    let mut t = Vec::with_capacity(b.val.len() + b.n);
    for i in 0..b.n {
        t.push((i, i, v));
        for k in b.row_ptr[i]..b.row_ptr[i + 1] {
            t.push((i, b.col[k], tau * b.val[k]));
        }
    }
    CsrMatrix::from_triplets(b.n, t)
}

/// Runs `m_sub` implicit substeps over one slab of length Δt.
pub fn continuity_substep(
    rho_prev: &[f64],
    ux: &[f64],
    uy: &[f64],
    params: &ModelParams,
    m_sub: usize,
    ops: &DiscreteOperators,
    settings: &SolverSettings,
) -> Result<SlabDensity> {
    let n = ops.cells();
    for len in [rho_prev.len(), ux.len(), uy.len()] {
        if len != n {
            return Err(Error::ShapeMismatch { expected: n, found: len });
        }
    }
    if m_sub == 0 {
        return Err(Error::invalid("m_sub", "requires m_sub ≥ 1"));
    }
    let tau = params.dt / m_sub as f64;
    let v = ops.omega.volume();
    let u_face = ops.face_normal_velocity(ux, uy);
    let b = continuity_operator(&u_face, params.alpha, ops);
    let a = continuity_matrix(&u_face, params.alpha, tau, ops);
    let mut levels = Vec::with_capacity(m_sub + 1);
    levels.push(rho_prev.to_vec());
    let mut p_bar = vec![0.0; n];
    let mut diss = ContinuityDissipation::default();
    let mut iterations = 0;
    let trivial = params.alpha == 0.0 && u_face.iter().all(|u| *u == 0.0);
    for _ in 0..m_sub {
        let prev = levels.last().unwrap().clone();
        let next = if trivial {
            prev.clone()
        } else {
            let rhs: Vec<f64> = prev.iter().map(|r| v * r).collect();
            let mut x = prev.clone();
            let stats: SolveStats = bicgstab(&a, &rhs, &mut x, settings)?;
            iterations += stats.iterations;
            let flux = b.mul_vec(&x);
            prev.iter().zip(&flux).map(|(r, f)| r - tau / v * f).collect()
        };
        let pp: Vec<f64> = next.iter().map(|r| primitive_deriv_unchecked(r.max(0.0), params)).collect();
        let pr: Vec<f64> = next.iter().map(|r| pressure_unchecked(r.max(0.0), params)).collect();
        for c in 0..n {
            diss.convexity += v
                * (pp[c] * (next[c] - prev[c]) - primitive_unchecked(next[c].max(0.0), params)
                    + primitive_unchecked(prev[c].max(0.0), params));
            p_bar[c] += pr[c] / m_sub as f64;
        }
        for (f, &u) in ops.faces.iter().zip(&u_face) {
            let a_f = ops.omega.face_area(f.dir);
            let up = if u >= 0.0 { next[f.l] } else { next[f.r] };
            diss.upwind += tau * a_f * u * ((pr[f.r] - pr[f.l]) - up * (pp[f.r] - pp[f.l]));
            diss.alpha +=
                tau * params.alpha * ops.face_stiffness(f) * (next[f.r] - next[f.l]) * (pp[f.r] - pp[f.l]);
        }
        levels.push(next);
    }
    Ok(SlabDensity {
        levels,
        p_bar,
        dissipation: diss,
        iterations,
    })
}

/// Data of one momentum solve.
#[derive(Debug, Clone, Copy)]
pub struct MomentumData<'a> {
    pub rho_n: &'a [f64],
    pub rho_prev: &'a [f64],
    pub ux_prev: &'a [f64],
    pub uy_prev: &'a [f64],
    /// Slab-averaged pressure p̄.
    pub p_bar: &'a [f64],
    /// Polymer stress τ₁ = k(C − (K+1)ϱI).
    pub tau1: &'a [Tensor],
    /// Number density ϱⁿ.
    pub varrho: &'a [f64],
    /// Σ_j W_j Λ(ψ̃) on each face.
    pub varrho_beta: &'a [f64],
    /// f at the slab midpoint, per cell.
    pub force: &'a [[f64; 2]],
    /// Linearized pressure response used inside the Picard loop.
    pub pressure_lag: Option<PressureLag<'a>>,
}

/// Adds Σ v a_c div(u − ũ) div w to the momentum form. The term vanishes
/// at a Picard fixed point u = ũ; with a_c ≈ Δt² ρ p'(ρ) it makes the
/// first iterate implicit in the acoustic coupling.
#[derive(Debug, Clone, Copy)]
pub struct PressureLag<'a> {
    pub coeff: &'a [f64],
    pub ux: &'a [f64],
    pub uy: &'a [f64],
}

/// Stencil of div_h w at cell c over the stacked unknowns [w_x; w_y].
fn div_stencil(ops: &DiscreteOperators, c: usize) -> [(usize, f64); 4] {
    let n = ops.cells();
    let sx = ops.vel_stencil(c, 0);
    let sy = ops.vel_stencil(c, 1);
    [sx[0], sx[1], (n + sy[0].0, sy[0].1), (n + sy[1].0, sy[1].1)]
}

/// The viscous form a(u, w) = (μ^S/2) Σ ∇u:∇w + μ^B Σ div u div w.
pub fn viscous_form(ux: &[f64], uy: &[f64], wx: &[f64], wy: &[f64], params: &ModelParams, ops: &DiscreteOperators) -> f64 {
    let v = ops.omega.volume();
    let du = ops.velocity_divergence(ux, uy);
    let dw = ops.velocity_divergence(wx, wy);
    0.5 * params.mu_s * (ops.stiffness_form(ux, wx, true) + ops.stiffness_form(uy, wy, true))
        + params.mu_b * v * du.iter().zip(&dw).map(|(a, b)| a * b).sum::<f64>()
}

/// Assembles the momentum matrix over [u_x; u_y].
pub fn momentum_matrix(data: &MomentumData, params: &ModelParams, ops: &DiscreteOperators) -> CsrMatrix {
    let n = ops.cells();
    let v = ops.omega.volume();
    let dt = params.dt;
    let mut t = Vec::with_capacity(40 * n);
    for c in 0..n {
        let m = v * 0.5 * (data.rho_n[c] + data.rho_prev[c]);
        t.push((c, c, m));
        t.push((n + c, n + c, m));
    }
    ops.velocity_stiffness(0.5 * dt * params.mu_s, 0, &mut t);
    ops.velocity_stiffness(0.5 * dt * params.mu_s, n, &mut t);
    let lag = data.pressure_lag.map(|l| l.coeff);
    if params.mu_b != 0.0 || lag.is_some() {
        for c in 0..n {
            let k = dt * params.mu_b + lag.map_or(0.0, |a| a[c]);
            let s = div_stencil(ops, c);
            for &(i, a) in &s {
                for &(j, b) in &s {
                    t.push((i, j, k * v * a * b));
                }
            }
        }
    }
    // skew convection ½Δt(N − Nᵀ), N(w1, w2) = Σ v ρⁿ⁻¹ (uⁿ⁻¹·∇_h w1)·w2
    for c in 0..n {
        let adv = [v * data.rho_prev[c] * data.ux_prev[c], v * data.rho_prev[c] * data.uy_prev[c]];
        for dir in 0..2 {
            if adv[dir] == 0.0 {
                continue;
            }
            for (m, s) in ops.vel_stencil(c, dir) {
                let val = 0.5 * dt * adv[dir] * s;
                for k in 0..2 {
                    let (row, col) = (k * n + c, k * n + m);
                    t.push((row, col, val));
                    t.push((col, row, -val));
                }
            }
        }
    }
    CsrMatrix::from_triplets(2 * n, t)
}

/// Right-hand side of the momentum system over [w_x; w_y].
pub fn momentum_rhs(data: &MomentumData, params: &ModelParams, ops: &DiscreteOperators) -> Result<Vec<f64>> {
    let n = ops.cells();
    let v = ops.omega.volume();
    let dt = params.dt;
    let stress: Vec<Tensor> = data
        .tau1
        .iter()
        .zip(data.p_bar)
        .map(|(t, p)| [t[0] - p, t[1], t[2], t[3] - p])
        .collect();
    let mut rhs = stress_load(&stress, ops)?;
    for x in rhs.iter_mut() {
        *x *= dt;
    }
    for c in 0..n {
        rhs[c] += v * data.rho_prev[c] * data.ux_prev[c] + dt * v * data.rho_n[c] * data.force[c][0];
        rhs[n + c] += v * data.rho_prev[c] * data.uy_prev[c] + dt * v * data.rho_n[c] * data.force[c][1];
    }
    if let Some(l) = data.pressure_lag {
        let div = ops.velocity_divergence(l.ux, l.uy);
        for c in 0..n {
            for (i, a) in div_stencil(ops, c) {
                rhs[i] += l.coeff[c] * v * div[c] * a;
            }
        }
    }
    if params.z_int != 0.0 {
        for (f, rb) in ops.faces.iter().zip(data.varrho_beta) {
            let a = ops.omega.face_area(f.dir);
            let g = -params.z_int * dt * a * rb * (data.varrho[f.r] - data.varrho[f.l]);
            let off = f.dir * n;
            rhs[off + f.l] += g;
            rhs[off + f.r] += g;
        }
    }
    Ok(rhs)
}

/// Solves the momentum system; returns (u_x, u_y).
pub fn momentum_solve(
    data: &MomentumData,
    params: &ModelParams,
    ops: &DiscreteOperators,
    settings: &SolverSettings,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = ops.cells();
    for len in [
        data.rho_n.len(),
        data.rho_prev.len(),
        data.ux_prev.len(),
        data.uy_prev.len(),
        data.p_bar.len(),
        data.tau1.len(),
        data.varrho.len(),
        data.force.len(),
    ] {
        if len != n {
            return Err(Error::ShapeMismatch { expected: n, found: len });
        }
    }
    if let Some(l) = data.pressure_lag {
        for len in [l.coeff.len(), l.ux.len(), l.uy.len()] {
            if len != n {
                return Err(Error::ShapeMismatch { expected: n, found: len });
            }
        }
    }
    if data.varrho_beta.len() != ops.faces.len() {
        return Err(Error::ShapeMismatch {
            expected: ops.faces.len(),
            found: data.varrho_beta.len(),
        });
    }
    if data.rho_n.iter().zip(data.rho_prev).all(|(a, b)| a + b <= 0.0) {
        return Err(Error::Singular("ρⁿ + ρⁿ⁻¹ vanishes identically"));
    }
    let a = momentum_matrix(data, params, ops);
    let b = momentum_rhs(data, params, ops)?;
    let mut x: Vec<f64> = data.ux_prev.iter().chain(data.uy_prev).copied().collect();
    bicgstab(&a, &b, &mut x, settings)?;
    let uy = x.split_off(n);
    Ok((x, uy))
}

/// Σ_j W_j Λ(ψ̃_l, ψ̃_r) on every face of Ω.
pub fn varrho_beta_faces(psi_lag: &PsiField, cutoff: &CutoffParams, ops: &DiscreteOperators) -> Vec<f64> {
    let w = &ops.cfg.weights;
    ops.faces
        .iter()
        .map(|f| {
            let (pl, pr) = (psi_lag.cell(f.l), psi_lag.cell(f.r));
            (0..w.len()).map(|j| w[j] * cutoff.entropy_mean(pl[j], pr[j])).sum()
        })
        .collect()
}

/// Implicit coefficients (c_x, c_q) of the Fokker-Planck matrix.
pub fn fp_coefficients(params: &ModelParams, ops: &DiscreteOperators) -> (f64, f64) {
    (params.dt * params.eps, params.dt * ops.omega.volume() * ops.q_diffusion)
}

/// Right-hand side of the Fokker-Planck system: carried-over mass plus
/// x-transport and q-drag evaluated from the lagged iterate ψ̃ and ũ.
pub fn fokker_planck_rhs(
    psi_prev: &PsiField,
    psi_lag: &PsiField,
    ux: &[f64],
    uy: &[f64],
    params: &ModelParams,
    cutoff: &CutoffParams,
    ops: &DiscreteOperators,
) -> Result<Vec<f64>> {
    let n = ops.cells();
    let nq = ops.nq();
    for p in [psi_prev, psi_lag] {
        if p.cells != n || p.nq != nq {
            return Err(Error::ShapeMismatch {
                expected: n * nq,
                found: p.values.len(),
            });
        }
    }
    let v = ops.omega.volume();
    let w = &ops.cfg.weights;
    let dt = params.dt;
    let mut rhs: Vec<f64> = psi_prev
        .values
        .iter()
        .enumerate()
        .map(|(i, p)| v * w[i % nq] * p)
        .collect();
    let u_face = ops.face_normal_velocity(ux, uy);
    for (f, &u) in ops.faces.iter().zip(&u_face) {
        if u == 0.0 {
            continue;
        }
        let a = dt * ops.omega.face_area(f.dir) * u;
        let (pl, pr) = (psi_lag.cell(f.l), psi_lag.cell(f.r));
        for j in 0..nq {
            let t = a * w[j] * cutoff.entropy_mean(pl[j], pr[j]);
            rhs[f.r * nq + j] += t;
            rhs[f.l * nq + j] -= t;
        }
    }
    let grad = ops.velocity_gradient(ux, uy);
    for c in 0..n {
        let g = grad[c];
        if g.iter().all(|x| *x == 0.0) {
            continue;
        }
        let p = psi_lag.cell(c);
        let out = &mut rhs[c * nq..(c + 1) * nq];
        for f in &ops.q_faces {
            let gn: f64 = g.iter().zip(&f.nq).map(|(a, b)| a * b).sum();
            let t = dt * v * f.flux_coeff() * gn * cutoff.entropy_mean(p[f.a], p[f.b]);
            out[f.b] += t;
            out[f.a] -= t;
        }
    }
    Ok(rhs)
}

/// One linear Fokker-Planck solve with the transport and drag lagged at ψ̃.
pub fn fokker_planck_solve(
    psi_prev: &PsiField,
    psi_lag: &PsiField,
    ux: &[f64],
    uy: &[f64],
    params: &ModelParams,
    cutoff: &CutoffParams,
    ops: &DiscreteOperators,
) -> Result<PsiField> {
    let rhs = fokker_planck_rhs(psi_prev, psi_lag, ux, uy, params, cutoff, ops)?;
    let (cx, cq) = fp_coefficients(params, ops);
    let x = ops.spectral_solve(&rhs, cx, cq);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverDiverged {
            solver: "Fokker-Planck",
            iterations: 1,
            residual: f64::NAN,
        });
    }
    PsiField::new(x, psi_prev.cells, psi_prev.nq)
}
