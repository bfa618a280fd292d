//! TOML run configuration.
//!
//! Every section has defaults, so a file only needs the keys it changes.
//! Validation collects every violated rule instead of stopping at the first.

use std::fmt;

use nsfp_core::forcing::Forcing;
use nsfp_core::grid::{build_config_grid, BoundaryCondition, OmegaGrid};
use nsfp_core::linalg::SolverSettings;
use nsfp_core::model::{linear_chain_rouse, ChainParams, Eos, ModelParams};
use nsfp_core::ops::assemble_operators;
use nsfp_core::scheme::{lt_violated, PicardControls, Problem, State};
use nsfp_core::setup::{DensityProfile, PsiProfile, VelocityProfile};
use nsfp_core::stress::PsiField;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub model: ModelSection,
    pub chain: ChainSection,
    pub regularization: RegularizationSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub init: InitSection,
    pub forcing: ForcingSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EosKind {
    Isentropic,
    Tait,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaitSection {
    pub a0: f64,
    pub a1: f64,
    pub rho_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub gamma: f64,
    pub c_p: f64,
    pub mu_s: f64,
    pub mu_b: f64,
    pub k: f64,
    pub z: f64,
    pub eps: f64,
    pub lambda: f64,
    pub eos: EosKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tait: Option<TaitSection>,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::default();
        ModelSection {
            gamma: p.gamma,
            c_p: p.c_p,
            mu_s: p.mu_s,
            mu_b: p.mu_b,
            k: p.k_temp,
            z: p.z_int,
            eps: p.eps,
            lambda: p.lambda,
            eos: EosKind::Isentropic,
            tait: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouseName {
    LinearChain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rouse {
    Named(RouseName),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSection {
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    pub b: Vec<f64>,
    pub rouse: Rouse,
}

impl Default for ChainSection {
    fn default() -> Self {
        ChainSection {
            k: 1,
            d: 2,
            b: vec![4.0],
            rouse: Rouse::Named(RouseName::LinearChain),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegularizationSection {
    pub kappa: f64,
    pub alpha: f64,
    #[serde(rename = "L")]
    pub l_cut: f64,
    pub delta: f64,
    #[serde(rename = "C0_LT")]
    pub c0_lt: f64,
}

impl Default for RegularizationSection {
    fn default() -> Self {
        RegularizationSection {
            kappa: 0.0,
            alpha: 0.0,
            l_cut: 10.0,
            delta: 0.0,
            c0_lt: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcName {
    Periodic,
    NoSlip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub bc: BcName,
    pub nq_r: usize,
    pub nq_theta: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            nx: 8,
            ny: 8,
            lx: 1.0,
            ly: 1.0,
            bc: BcName::Periodic,
            nq_r: 16,
            nq_theta: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(rename = "N")]
    pub steps: usize,
    pub m_sub: usize,
    pub picard_max: usize,
    pub picard_tol: f64,
    pub picard_damping: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        let c = PicardControls::default();
        TimeSection {
            t_end: 1.0,
            steps: 100,
            m_sub: c.m_sub,
            picard_max: c.max_iter,
            picard_tol: c.tol,
            picard_damping: c.damping,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoInit {
    Constant(f64),
    Table { table: Vec<f64> },
    Cosine { mean: f64, amplitude: f64, wavenumber: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum VelocityInit {
    Zero,
    Const { value: [f64; 2] },
    Shear { amplitude: f64, wavenumber: u32 },
    Table { table: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsiName {
    Equilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub amplitude: f64,
    pub wavenumber: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PsiInit {
    Named(PsiName),
    Perturbation { perturbation: Perturbation },
    Constant { constant: f64 },
    Table { table: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    pub rho0: RhoInit,
    pub u0: VelocityInit,
    pub psi0: PsiInit,
}

impl Default for InitSection {
    fn default() -> Self {
        InitSection {
            rho0: RhoInit::Constant(1.0),
            u0: VelocityInit::Zero,
            psi0: PsiInit::Named(PsiName::Equilibrium),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ForcingSection {
    #[default]
    None,
    Const {
        value: [f64; 2],
    },
    Shear {
        amplitude: f64,
        wavenumber: u32,
    },
    Table {
        table: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Dump fields every this many steps (the initial and final states are
    /// always dumped).
    pub every: usize,
    pub prefix: String,
    pub dump_fields: bool,
    /// Fraction of steps whose energy check must pass for a zero exit code.
    pub pass_threshold: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            every: 1,
            prefix: "run".into(),
            dump_fields: true,
            pass_threshold: 0.99,
        }
    }
}

/// One violated admissibility rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration:\n{}", list(.0))]
    Invalid(Vec<ValidationError>),
}

fn list(v: &[ValidationError]) -> String {
    v.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

/// Parses and validates a configuration document. Logs a warning when the
/// step violates Δt ≤ C₀/(L log L).
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let cfg: Config = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        ConfigError::Parse {
            line,
            message: e.message().to_string(),
        }
    })?;
    let errors = cfg.validate();
    if !errors.is_empty() {
        return Err(ConfigError::Invalid(errors));
    }
    if let Some(w) = cfg.lt_warning() {
        log::warn!("{w}");
    }
    Ok(cfg)
}

impl Config {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn dt(&self) -> f64 {
        self.time.t_end / self.time.steps as f64
    }

    pub fn model_params(&self) -> ModelParams {
        let m = &self.model;
        let r = &self.regularization;
        let eos = match (m.eos, m.tait) {
            (EosKind::Tait, Some(t)) => Eos::Tait {
                a0: t.a0,
                a1: t.a1,
                rho_ref: t.rho_ref,
            },
            _ => Eos::Isentropic,
        };
        let forcing = match &self.forcing {
            ForcingSection::None => Forcing::None,
            ForcingSection::Const { value } => Forcing::Constant(*value),
            ForcingSection::Shear { amplitude, wavenumber } => Forcing::Shear {
                amplitude: *amplitude,
                wavenumber: *wavenumber,
            },
            ForcingSection::Table { table } => Forcing::Table(table.clone()),
        };
        ModelParams {
            c_p: m.c_p,
            gamma: m.gamma,
            kappa: r.kappa,
            alpha: r.alpha,
            l_cut: r.l_cut,
            delta: r.delta,
            dt: self.dt(),
            eps: m.eps,
            lambda: m.lambda,
            k_temp: m.k,
            z_int: m.z,
            mu_s: m.mu_s,
            mu_b: m.mu_b,
            eos,
            forcing,
        }
    }

    pub fn controls(&self) -> PicardControls {
        PicardControls {
            max_iter: self.time.picard_max,
            tol: self.time.picard_tol,
            damping: self.time.picard_damping,
            m_sub: self.time.m_sub,
            c0_lt: self.regularization.c0_lt,
            linear: SolverSettings {
                rel_tol: 1e-12,
                max_iter: None,
            },
        }
    }

    /// The Rouse matrix, row-major.
    pub fn rouse_matrix(&self) -> Vec<f64> {
        match &self.chain.rouse {
            Rouse::Named(RouseName::LinearChain) => linear_chain_rouse(self.chain.k),
            Rouse::Matrix(rows) => rows.iter().flatten().copied().collect(),
        }
    }

    pub fn chain_params(&self) -> nsfp_core::Result<ChainParams> {
        ChainParams::new(self.chain.d, self.chain.b.clone(), self.rouse_matrix())
    }

    pub fn omega(&self) -> nsfp_core::Result<OmegaGrid> {
        let g = &self.grid;
        let bc = match g.bc {
            BcName::Periodic => BoundaryCondition::Periodic,
            BcName::NoSlip => BoundaryCondition::NoSlipNeumann,
        };
        OmegaGrid::new(g.nx, g.ny, g.lx, g.ly, bc)
    }

    pub fn lt_warning(&self) -> Option<String> {
        let (dt, l, c0) = (self.dt(), self.regularization.l_cut, self.regularization.c0_lt);
        lt_violated(dt, l, c0).then(|| {
            format!(
                "Δt = {dt} exceeds C0/(L log L) = {}; the time step should be o(1/L)",
                c0 / (l * l.ln())
            )
        })
    }

    /// Every violated rule; empty when the configuration is admissible.
    pub fn validate(&self) -> Vec<ValidationError> {
        let mut out = Vec::new();
        let mut push = |field: &str, rule: &str| {
            out.push(ValidationError {
                field: field.into(),
                rule: rule.into(),
            })
        };
        let t = &self.time;
        if !(t.t_end > 0.0) {
            push("T", "requires T > 0");
        }
        if t.steps == 0 {
            push("N", "requires N ≥ 1");
        }
        if t.m_sub == 0 {
            push("m_sub", "requires m_sub ≥ 1");
        }
        if t.picard_max == 0 {
            push("picard_max", "requires picard_max ≥ 1");
        }
        if !(t.picard_tol > 0.0) {
            push("picard_tol", "requires picard_tol > 0");
        }
        if !(t.picard_damping > 0.0 && t.picard_damping <= 1.0) {
            push("picard_damping", "requires damping in (0, 1]");
        }
        let p = self.model_params();
        for (field, rule) in p.violations() {
            // Δt comes from T and N, reported there
            if field != "dt" {
                push(field, rule);
            }
        }
        if self.model.eos == EosKind::Tait && self.model.tait.is_none() {
            push("tait", "eos = \"tait\" requires a [model.tait] table with a0, a1, rho_ref");
        }
        if !(self.regularization.c0_lt > 0.0) {
            push("C0_LT", "requires C0 > 0");
        }

        let c = &self.chain;
        let chain_shape_ok = c.k == c.b.len()
            && c.k == 1
            && c.d == 2
            && c.b.iter().all(|b| *b > 2.0 && b.is_finite())
            && match &c.rouse {
                Rouse::Matrix(rows) => rows.len() == c.k && rows.iter().all(|r| r.len() == c.k),
                Rouse::Named(_) => true,
            };
        if c.k != c.b.len() {
            push("K", "requires K equal to the number of entries of b");
        }
        if c.k != 1 {
            push("K", "time stepping supports K = 1");
        }
        if c.d != 2 {
            push("d", "requires d = 2 (planar flow and configuration grids)");
        }
        if c.b.iter().any(|b| !(*b > 2.0 && b.is_finite())) {
            push("b", "requires b_i > 2");
        }
        if let Rouse::Matrix(rows) = &c.rouse {
            if rows.len() != c.k || rows.iter().any(|r| r.len() != c.k) {
                push("rouse", "requires a K × K matrix");
            }
        }
        if chain_shape_ok {
            if let Err(e) = self.chain_params() {
                push("rouse", &format!("requires a symmetric positive-definite Rouse matrix ({e})"));
            }
        }

        let g = &self.grid;
        if g.nx < 3 || g.ny < 3 {
            push("grid", "requires nx, ny ≥ 3");
        }
        if !(g.lx > 0.0 && g.ly > 0.0) {
            push("grid", "requires lx, ly > 0");
        }
        if g.nq_r < 4 {
            push("nq_r", "requires nq_r ≥ 4");
        }
        if g.nq_theta < 8 || g.nq_theta % 2 != 0 {
            push("nq_theta", "requires an even nq_theta ≥ 8");
        }

        let cells = g.nx * g.ny;
        let nq = g.nq_r * g.nq_theta;
        let i = &self.init;
        match &i.rho0 {
            RhoInit::Constant(r) if !(*r >= 0.0) => push("rho0", "requires ρ₀ ≥ 0"),
            RhoInit::Table { table } if table.len() != cells => push("rho0", "table needs nx·ny values"),
            RhoInit::Table { table } if table.iter().any(|r| !(*r >= 0.0)) => push("rho0", "requires ρ₀ ≥ 0"),
            RhoInit::Cosine { mean, amplitude, .. } if !(mean - amplitude.abs() >= 0.0) => {
                push("rho0", "requires ρ₀ ≥ 0 (mean ≥ |amplitude|)")
            }
            _ => {}
        }
        if let VelocityInit::Table { table } = &i.u0 {
            if table.len() != cells {
                push("u0", "table needs nx·ny entries");
            }
        }
        match &i.psi0 {
            PsiInit::Constant { constant } if !(*constant >= 0.0) => push("psi0", "requires ψ̂₀ ≥ 0"),
            PsiInit::Perturbation { perturbation } if !(perturbation.amplitude.abs() <= 1.0) => {
                push("psi0", "requires |amplitude| ≤ 1 so that ψ̂₀ ≥ 0")
            }
            PsiInit::Table { table } if table.len() != cells * nq => {
                push("psi0", "table needs nx·ny·nq_r·nq_theta values")
            }
            PsiInit::Table { table } if table.iter().any(|x| !(*x >= 0.0)) => push("psi0", "requires ψ̂₀ ≥ 0"),
            _ => {}
        }
        if let ForcingSection::Table { table } = &self.forcing {
            if table.len() != cells {
                push("forcing", "table needs nx·ny entries");
            }
        }
        let o = &self.output;
        if o.every == 0 {
            push("every", "requires every ≥ 1");
        }
        if !(0.0..=1.0).contains(&o.pass_threshold) {
            push("pass_threshold", "requires a fraction in [0, 1]");
        }
        out
    }

    /// Assembles the problem and the regularized initial state.
    pub fn build(&self) -> nsfp_core::Result<(Problem, State)> {
        let chain = self.chain_params()?;
        let params = self.model_params();
        let omega = self.omega()?;
        let cfg = build_config_grid(&chain, self.grid.nq_r, self.grid.nq_theta)?;
        let ops = assemble_operators(&omega, &cfg, &chain, &params)?;
        let problem = Problem::new(ops, chain, params, self.controls())?;
        let rho0 = match &self.init.rho0 {
            RhoInit::Constant(c) => DensityProfile::Constant(*c),
            RhoInit::Table { table } => DensityProfile::Table(table.clone()),
            RhoInit::Cosine {
                mean,
                amplitude,
                wavenumber,
            } => DensityProfile::Cosine {
                mean: *mean,
                amplitude: *amplitude,
                wavenumber: *wavenumber,
            },
        }
        .sample(&omega)?;
        let (ux0, uy0) = match &self.init.u0 {
            VelocityInit::Zero => VelocityProfile::Zero,
            VelocityInit::Const { value } => VelocityProfile::Constant(*value),
            VelocityInit::Shear { amplitude, wavenumber } => VelocityProfile::Shear {
                amplitude: *amplitude,
                wavenumber: *wavenumber,
            },
            VelocityInit::Table { table } => VelocityProfile::Table(table.clone()),
        }
        .sample(&omega)?;
        let psi0 = match &self.init.psi0 {
            PsiInit::Named(PsiName::Equilibrium) => PsiProfile::Equilibrium,
            PsiInit::Perturbation { perturbation } => PsiProfile::Perturbation {
                amplitude: perturbation.amplitude,
                wavenumber: perturbation.wavenumber,
            },
            PsiInit::Constant { constant } => PsiProfile::Constant(*constant),
            PsiInit::Table { table } => PsiProfile::Table(table.clone()),
        }
        .sample(&omega, &problem.ops.cfg)?;
        let psi0 = PsiField::new(psi0, omega.cells(), problem.ops.nq())?;
        let state = problem.initial_state(&rho0, &ux0, &uy0, &psi0)?;
        Ok((problem, state))
    }
}
