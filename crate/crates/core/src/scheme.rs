//! Picard-coupled time stepping and the discrete energy ledger.
//!
//! One step maps (ρⁿ⁻¹, uⁿ⁻¹, ψ̂ⁿ⁻¹) to (ρⁿ, uⁿ, ψ̂ⁿ). Inside a step the
//! Picard map takes a lagged pair (ũ, ψ̃) to
//! ρ* (continuity with ũ), ψ* (Fokker-Planck with ũ and Λ(ψ̃)) and
//! u* (momentum with ρ*, ψ*), and repeats until (u*, ψ*) stops moving.
//! The momentum solve carries the linearized pressure response
//! Δt²ρp'(ρ) div(u* − ũ), which is zero at the fixed point but keeps
//! sub-tolerance iterates from feeding an explicit acoustic coupling.
//!
//! At a fixed point the discrete energy balance holds as an identity:
//!
//! ```text
//! Eⁿ − Eⁿ⁻¹ + Σ(dissipation) = Δt ∫ ρⁿ fⁿ·uⁿ,
//! E = ½∫ρ|u|² + ∫P_κ(ρ) + k∫∫M F^L(ψ̂) + 𝔷‖ϱ‖².
//! ```
//!
//! Every dissipation term, including the numerical ones, is computed and
//! reported, so the residual only measures the Picard and Krylov tolerances.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::SolverSettings;
use crate::math::{ln, sqrt};
use crate::model::{pressure_deriv_unchecked, primitive_unchecked, ChainParams, ModelParams};
use crate::ops::DiscreteOperators;
use crate::regularization::CutoffParams;
use crate::solvers::{
    continuity_substep, fokker_planck_solve, momentum_solve, project_initial_density, project_initial_velocity,
    smooth_initial_psi, varrho_beta_faces, viscous_form, ContinuityDissipation, MomentumData, PressureLag,
};
use crate::stress::{number_density, polymer_stress, PsiField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardControls {
    pub max_iter: usize,
    pub tol: f64,
    /// Initial damping θ; halved whenever the residual grows.
    pub damping: f64,
    /// Continuity substeps per slab.
    pub m_sub: usize,
    pub linear: SolverSettings,
    /// C₀ of the warning Δt ≤ C₀/(L log L).
    pub c0_lt: f64,
}

impl Default for PicardControls {
    fn default() -> Self {
        PicardControls {
            max_iter: 50,
            tol: 1e-10,
            damping: 1.0,
            m_sub: 4,
            linear: SolverSettings {
                rel_tol: 1e-12,
                max_iter: None,
            },
            c0_lt: 1.0,
        }
    }
}

/// Discrete fields at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub step: usize,
    pub rho: Vec<f64>,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    pub psi: PsiField,
    pub varrho: Vec<f64>,
    /// Slab pressure p̄ of the step that produced this state.
    pub p_slab: Vec<f64>,
    /// Continuity dissipation of the step that produced this state.
    pub continuity: ContinuityDissipation,
    /// Σ_j W_j Λ(ψ̃) per face, as used by that step.
    pub varrho_beta: Vec<f64>,
    pub picard_iters: usize,
    /// Damping in effect when the step converged.
    pub damping: f64,
}

/// Everything a step needs besides the state.
#[derive(Debug, Clone)]
pub struct Problem {
    pub ops: DiscreteOperators,
    pub chain: ChainParams,
    pub params: ModelParams,
    pub cutoff: CutoffParams,
    pub controls: PicardControls,
}

/// True when Δt exceeds C₀/(L log L).
pub fn lt_violated(dt: f64, l: f64, c0: f64) -> bool {
    dt * l * ln(l) > c0
}

impl Problem {
    pub fn new(
        ops: DiscreteOperators,
        chain: ChainParams,
        params: ModelParams,
        controls: PicardControls,
    ) -> Result<Self> {
        params.validate()?;
        if chain.springs() != 1 {
            return Err(Error::invalid("K", "time stepping supports K = 1"));
        }
        if !(controls.tol > 0.0) || controls.max_iter == 0 {
            return Err(Error::invalid("picard", "requires picard_tol > 0 and picard_max ≥ 1"));
        }
        if !(controls.damping > 0.0 && controls.damping <= 1.0) {
            return Err(Error::invalid("picard_damping", "requires damping in (0, 1]"));
        }
        if controls.m_sub == 0 {
            return Err(Error::invalid("m_sub", "requires m_sub ≥ 1"));
        }
        let cutoff = CutoffParams::new(params.l_cut, params.delta)?;
        if lt_violated(params.dt, params.l_cut, controls.c0_lt) {
            log::warn!(
                "Δt = {} exceeds C0/(L log L) = {}; the cut-off may act",
                params.dt,
                controls.c0_lt / (params.l_cut * ln(params.l_cut))
            );
        }
        Ok(Problem {
            ops,
            chain,
            params,
            cutoff,
            controls,
        })
    }

    /// Regularizes raw initial samples and builds the state at t = 0.
    pub fn initial_state(&self, rho0: &[f64], ux0: &[f64], uy0: &[f64], psi0: &PsiField) -> Result<State> {
        let lin = &self.controls.linear;
        let rho = project_initial_density(rho0, self.params.alpha, &self.ops, lin)?;
        let (ux, uy) = project_initial_velocity(ux0, uy0, &rho, self.params.dt, &self.ops, lin)?;
        let psi = smooth_initial_psi(psi0, self.params.l_cut, self.params.dt, &self.ops)?;
        Ok(self.state_from_fields(rho, ux, uy, psi))
    }

    /// A state from fields taken as given (no regularization).
    pub fn state_from_fields(&self, rho: Vec<f64>, ux: Vec<f64>, uy: Vec<f64>, psi: PsiField) -> State {
        let varrho = number_density(&psi, &self.ops.cfg).unwrap_or_default();
        let p_slab = crate::solvers::SlabDensity::frozen(&rho, &self.params).p_bar;
        let varrho_beta = varrho_beta_faces(&psi, &self.cutoff, &self.ops);
        State {
            t: 0.0,
            step: 0,
            rho,
            ux,
            uy,
            psi,
            varrho,
            p_slab,
            continuity: ContinuityDissipation::default(),
            varrho_beta,
            picard_iters: 0,
            damping: self.controls.damping,
        }
    }

    /// (ρ ≡ c, u ≡ 0, ψ̂ ≡ 1).
    pub fn equilibrium_state(&self, rho: f64) -> State {
        let n = self.ops.cells();
        self.state_from_fields(
            vec![rho; n],
            vec![0.0; n],
            vec![0.0; n],
            PsiField::constant(n, self.ops.nq(), 1.0),
        )
    }
}

fn picard_residual(
    ux: &[f64],
    uy: &[f64],
    psi: &[f64],
    ux_l: &[f64],
    uy_l: &[f64],
    psi_l: &[f64],
    rho: &[f64],
    ops: &DiscreteOperators,
) -> f64 {
    let nq = ops.nq();
    let w = &ops.cfg.weights;
    let (mut num, mut den) = (0.0, 0.0);
    for c in 0..rho.len() {
        let r = rho[c].max(0.0);
        let (dx, dy) = (ux[c] - ux_l[c], uy[c] - uy_l[c]);
        num += r * (dx * dx + dy * dy);
        den += r * (ux[c] * ux[c] + uy[c] * uy[c]);
    }
    for (i, (a, b)) in psi.iter().zip(psi_l).enumerate() {
        num += w[i % nq] * (a - b) * (a - b);
        den += w[i % nq] * a * a;
    }
    if den > 0.0 {
        sqrt(num / den)
    } else {
        sqrt(num)
    }
}

/// One time step by damped Picard iteration. Returns the new state and the
/// number of iterations.
pub fn picard_step(prev: &State, problem: &Problem) -> Result<(State, usize)> {
    let ops = &problem.ops;
    let params = &problem.params;
    let ctl = &problem.controls;
    let dt = params.dt;
    let force = params.forcing.sample(&ops.omega, prev.t + 0.5 * dt);
    let mut ux_l = prev.ux.clone();
    let mut uy_l = prev.uy.clone();
    let mut psi_l = prev.psi.clone();
    let mut theta = ctl.damping;
    let mut history = Vec::new();
    for it in 1..=ctl.max_iter {
        let slab = continuity_substep(&prev.rho, &ux_l, &uy_l, params, ctl.m_sub, ops, &ctl.linear)?;
        let psi = fokker_planck_solve(&prev.psi, &psi_l, &ux_l, &uy_l, params, &problem.cutoff, ops)?;
        let varrho = number_density(&psi, &ops.cfg)?;
        let vb = varrho_beta_faces(&psi_l, &problem.cutoff, ops);
        let tau1 = polymer_stress(&psi, params, ops)?;
        // p̄ responds to div u through every substep level s/m, on average (m + 1)/2m
        let m = ctl.m_sub as f64;
        let lag_coeff: Vec<f64> = slab
            .rho_n()
            .iter()
            .map(|&r| dt * dt * (m + 1.0) / (2.0 * m) * r.max(0.0) * pressure_deriv_unchecked(r, params))
            .collect();
        let data = MomentumData {
            rho_n: slab.rho_n(),
            rho_prev: &prev.rho,
            ux_prev: &prev.ux,
            uy_prev: &prev.uy,
            p_bar: &slab.p_bar,
            tau1: &tau1,
            varrho: &varrho,
            varrho_beta: &vb,
            force: &force,
            pressure_lag: Some(PressureLag {
                coeff: &lag_coeff,
                ux: &ux_l,
                uy: &uy_l,
            }),
        };
        let (ux, uy) = momentum_solve(&data, params, ops, &ctl.linear)?;
        let res = picard_residual(
            &ux,
            &uy,
            &psi.values,
            &ux_l,
            &uy_l,
            &psi_l.values,
            slab.rho_n(),
            ops,
        );
        if !res.is_finite() {
            history.push(res);
            return Err(Error::PicardDiverged {
                residual_history: history,
            });
        }
        history.push(res);
        if res <= ctl.tol {
            let rho = slab.rho_n().to_vec();
            return Ok((
                State {
                    t: prev.t + dt,
                    step: prev.step + 1,
                    rho,
                    ux,
                    uy,
                    psi,
                    varrho,
                    p_slab: slab.p_bar,
                    continuity: slab.dissipation,
                    varrho_beta: vb,
                    picard_iters: it,
                    damping: theta,
                },
                it,
            ));
        }
        if history.len() > 1 && res > history[history.len() - 2] {
            theta *= 0.5;
        }
        for c in 0..ux.len() {
            ux_l[c] += theta * (ux[c] - ux_l[c]);
            uy_l[c] += theta * (uy[c] - uy_l[c]);
        }
        for (l, p) in psi_l.values.iter_mut().zip(&psi.values) {
            *l += theta * (p - *l);
        }
    }
    Err(Error::PicardDiverged {
        residual_history: history,
    })
}

/// Stored energies of one state.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyTerms {
    pub kinetic: f64,
    pub internal: f64,
    pub entropy: f64,
    pub interaction: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.kinetic + self.internal + self.entropy + self.interaction
    }
}

/// ½∫ρ|u|², ∫P_κ(ρ), k∫∫M F^L(ψ̂) (F^L_δ on the δ-path), 𝔷‖ϱ‖².
pub fn energy_terms(
    rho: &[f64],
    ux: &[f64],
    uy: &[f64],
    psi: &PsiField,
    varrho: &[f64],
    params: &ModelParams,
    cutoff: &CutoffParams,
    ops: &DiscreteOperators,
) -> EnergyTerms {
    let v = ops.omega.volume();
    let w = &ops.cfg.weights;
    let mut e = EnergyTerms::default();
    for c in 0..rho.len() {
        e.kinetic += 0.5 * v * rho[c] * (ux[c] * ux[c] + uy[c] * uy[c]);
        e.internal += v * primitive_unchecked(rho[c].max(0.0), params);
        e.interaction += params.z_int * v * varrho[c] * varrho[c];
        let s: f64 = psi.cell(c).iter().zip(w).map(|(p, w)| w * cutoff.entropy(*p).0).sum();
        e.entropy += params.k_temp * v * s;
    }
    e
}

pub fn state_energy(state: &State, problem: &Problem) -> EnergyTerms {
    energy_terms(
        &state.rho,
        &state.ux,
        &state.uy,
        &state.psi,
        &state.varrho,
        &problem.params,
        &problem.cutoff,
        &problem.ops,
    )
}

/// Dissipation over one step (each term integrated over the step).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dissipation {
    /// ½ ∫ ρⁿ⁻¹ |uⁿ − uⁿ⁻¹|².
    pub kinetic_jump: f64,
    /// Δt a(uⁿ, uⁿ).
    pub viscous: f64,
    pub continuity: ContinuityDissipation,
    /// k ∫∫ M [F'(ψ̂ⁿ)(ψ̂ⁿ − ψ̂ⁿ⁻¹) − F(ψ̂ⁿ) + F(ψ̂ⁿ⁻¹)].
    pub psi_convexity: f64,
    /// k Δt ε Σ (a/h) Σ W Δψ̂ ΔF'.
    pub fisher_x: f64,
    /// k Δt (A₁₁/4λ) Σ v Σ_f (w/dist²) Δψ̂ ΔF'.
    pub fisher_q: f64,
    /// 𝔷 ‖ϱⁿ − ϱⁿ⁻¹‖².
    pub varrho_jump: f64,
    /// 2𝔷εΔt ‖∇ϱⁿ‖².
    pub varrho_diffusion: f64,
}

impl Dissipation {
    pub fn total(&self) -> f64 {
        self.kinetic_jump
            + self.viscous
            + self.continuity.total()
            + self.psi_convexity
            + self.fisher_x
            + self.fisher_q
            + self.varrho_jump
            + self.varrho_diffusion
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub kinetic: f64,
    pub internal: f64,
    pub entropy: f64,
    pub interaction: f64,
    pub total: f64,
    /// Dissipation rate (step total / Δt).
    pub dissipation: f64,
    /// Forcing work rate ∫ ρⁿ fⁿ·uⁿ.
    pub work: f64,
    /// Eⁿ + Δt·dissipation − Eⁿ⁻¹ − Δt·work.
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub breakdown: Dissipation,
}

/// The report of the initial state: no step, residual 0.
pub fn initial_report(state: &State, problem: &Problem) -> EnergyReport {
    let e = state_energy(state, problem);
    EnergyReport {
        kinetic: e.kinetic,
        internal: e.internal,
        entropy: e.entropy,
        interaction: e.interaction,
        total: e.total(),
        dissipation: 0.0,
        work: 0.0,
        residual: 0.0,
        tol: 0.0,
        pass: true,
        breakdown: Dissipation::default(),
    }
}

/// Term-by-term energy balance between two consecutive states.
pub fn energy_ledger(next: &State, prev: &State, problem: &Problem) -> EnergyReport {
    let ops = &problem.ops;
    let params = &problem.params;
    let cutoff = &problem.cutoff;
    let v = ops.omega.volume();
    let w = &ops.cfg.weights;
    let nq = ops.nq();
    let dt = params.dt;
    let k = params.k_temp;
    let e1 = state_energy(next, problem);
    let e0 = state_energy(prev, problem);

    let mut d = Dissipation {
        continuity: next.continuity,
        ..Default::default()
    };
    for c in 0..ops.cells() {
        let (dx, dy) = (next.ux[c] - prev.ux[c], next.uy[c] - prev.uy[c]);
        d.kinetic_jump += 0.5 * v * prev.rho[c] * (dx * dx + dy * dy);
        let dv = next.varrho[c] - prev.varrho[c];
        d.varrho_jump += params.z_int * v * dv * dv;
    }
    d.viscous = dt * viscous_form(&next.ux, &next.uy, &next.ux, &next.uy, params, ops);

    let fp: Vec<(f64, f64)> = next
        .psi
        .values
        .iter()
        .map(|s| {
            let (f, d1, _) = cutoff.entropy(*s);
            (f, d1)
        })
        .collect();
    let mut conv = 0.0;
    for (i, (p1, p0)) in next.psi.values.iter().zip(&prev.psi.values).enumerate() {
        let f0 = cutoff.entropy(*p0).0;
        conv += w[i % nq] * (fp[i].1 * (p1 - p0) - fp[i].0 + f0);
    }
    d.psi_convexity = k * v * conv;

    let mut fx = 0.0;
    let mut rx = 0.0;
    for f in &ops.faces {
        let s = ops.face_stiffness(f);
        let mut acc = 0.0;
        for j in 0..nq {
            let (a, b) = (f.l * nq + j, f.r * nq + j);
            acc += w[j] * (next.psi.values[b] - next.psi.values[a]) * (fp[b].1 - fp[a].1);
        }
        fx += s * acc;
        let dr = next.varrho[f.r] - next.varrho[f.l];
        rx += s * dr * dr;
    }
    d.fisher_x = k * dt * params.eps * fx;
    d.varrho_diffusion = 2.0 * params.z_int * params.eps * dt * rx;

    let mut fq = 0.0;
    for c in 0..ops.cells() {
        let p = next.psi.cell(c);
        let g = &fp[c * nq..(c + 1) * nq];
        for f in &ops.q_faces {
            fq += f.stiffness() * (p[f.b] - p[f.a]) * (g[f.b].1 - g[f.a].1);
        }
    }
    d.fisher_q = k * dt * ops.q_diffusion * v * fq;

    let force = params.forcing.sample(&ops.omega, prev.t + 0.5 * dt);
    let work: f64 = (0..ops.cells())
        .map(|c| v * next.rho[c] * (force[c][0] * next.ux[c] + force[c][1] * next.uy[c]))
        .sum();

    let diss = d.total();
    let residual = e1.total() + diss - e0.total() - dt * work;
    let scale = e0.total().abs() + e1.total().abs() + diss.abs() + (dt * work).abs();
    let tol = 10.0 * (problem.controls.tol + problem.controls.linear.rel_tol) * scale.max(f64::MIN_POSITIVE);
    EnergyReport {
        kinetic: e1.kinetic,
        internal: e1.internal,
        entropy: e1.entropy,
        interaction: e1.interaction,
        total: e1.total(),
        dissipation: diss / dt,
        work,
        residual,
        tol,
        pass: residual.is_finite() && residual <= tol,
        breakdown: d,
    }
}

/// Residual of the discrete drift-diffusion equation for ϱ obtained by
/// testing the Fokker-Planck step with q-independent functions, relative
/// to ∫ϱⁿ⁻¹.
pub fn varrho_residual(next: &State, prev: &State, problem: &Problem) -> f64 {
    let ops = &problem.ops;
    let v = ops.omega.volume();
    let dt = problem.params.dt;
    let mut r: Vec<f64> = (0..ops.cells()).map(|c| v * (next.varrho[c] - prev.varrho[c])).collect();
    let uf = ops.face_normal_velocity(&next.ux, &next.uy);
    for (i, f) in ops.faces.iter().enumerate() {
        let a = ops.omega.face_area(f.dir);
        let flux = dt * a * uf[i] * next.varrho_beta[i];
        r[f.l] += flux;
        r[f.r] -= flux;
        let diff = dt * problem.params.eps * ops.face_stiffness(f) * (next.varrho[f.r] - next.varrho[f.l]);
        r[f.l] -= diff;
        r[f.r] += diff;
    }
    let mass: f64 = prev.varrho.iter().map(|x| v * x.abs()).sum();
    r.iter().map(|x| x.abs()).fold(0.0, f64::max) / mass.max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationReport {
    pub mass_rho_err: f64,
    pub mass_psi_err: f64,
    pub min_rho: f64,
    pub min_psi: f64,
    pub varrho_l2: f64,
}

pub fn mass_rho(state: &State, ops: &DiscreteOperators) -> f64 {
    ops.omega.volume() * state.rho.iter().sum::<f64>()
}

pub fn mass_psi(state: &State, ops: &DiscreteOperators) -> f64 {
    ops.omega.volume() * state.varrho.iter().sum::<f64>()
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

pub fn conservation_report(state: &State, state0: &State, ops: &DiscreteOperators) -> ConservationReport {
    ConservationReport {
        mass_rho_err: rel(mass_rho(state, ops), mass_rho(state0, ops)),
        mass_psi_err: rel(mass_psi(state, ops), mass_psi(state0, ops)),
        min_rho: state.rho.iter().copied().fold(f64::INFINITY, f64::min),
        min_psi: state.psi.min(),
        varrho_l2: sqrt(ops.omega.volume() * state.varrho.iter().map(|x| x * x).sum::<f64>()),
    }
}

/// Diagnostics of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub energy: EnergyReport,
    pub conservation: ConservationReport,
    pub picard_iters: usize,
}

/// A running simulation.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub problem: Problem,
    pub initial: State,
    pub state: State,
}

impl Simulation {
    pub fn new(problem: Problem, initial: State) -> Self {
        Simulation {
            state: initial.clone(),
            initial,
            problem,
        }
    }

    /// Record of the initial state (step 0).
    pub fn initial_record(&self) -> StepRecord {
        StepRecord {
            step: 0,
            t: self.initial.t,
            energy: initial_report(&self.initial, &self.problem),
            conservation: conservation_report(&self.initial, &self.initial, &self.problem.ops),
            picard_iters: 0,
        }
    }

    pub fn advance(&mut self) -> Result<StepRecord> {
        let (next, iters) = picard_step(&self.state, &self.problem)?;
        let energy = energy_ledger(&next, &self.state, &self.problem);
        let conservation = conservation_report(&next, &self.initial, &self.problem.ops);
        self.state = next;
        Ok(StepRecord {
            step: self.state.step,
            t: self.state.t,
            energy,
            conservation,
            picard_iters: iters,
        })
    }
}
