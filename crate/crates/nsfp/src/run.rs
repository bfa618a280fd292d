//! The `simulate` and `check-energy` drivers.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nsfp_core::grid::build_config_grid;
use nsfp_core::model::{pressure_primitive, ModelParams};
use nsfp_core::ops::{assemble_operators, DiscreteOperators};
use nsfp_core::regularization::CutoffParams;
use nsfp_core::scheme::Simulation;

use crate::config::{parse_config, Config};
use crate::diagnostics::{read_diagnostics, DiagnosticsWriter, Row};
use crate::dump::{read_state, write_state, DumpedState};

pub const CONFIG_FILE: &str = "config.toml";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub passed: usize,
    /// Fraction of steps whose energy check passed (1 for a run without steps).
    pub pass_fraction: f64,
}

/// Runs the configured simulation, writing the configuration, diagnostics
/// and dumps into `out_dir`. A Picard failure aborts the run after the rows
/// computed so far have been flushed.
pub fn run_simulation(cfg: &Config, out_dir: &Path) -> Result<RunSummary> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    fs::write(out_dir.join(CONFIG_FILE), cfg.to_toml())?;
    let (problem, init) = cfg.build().context("building the problem")?;
    let mut sim = Simulation::new(problem, init);
    let file = File::create(out_dir.join(DIAGNOSTICS_FILE))?;
    let mut diag = DiagnosticsWriter::new(BufWriter::new(file))?;
    let out = &cfg.output;
    let dump = |sim: &Simulation| -> Result<()> {
        if out.dump_fields {
            write_state(out_dir, &out.prefix, &sim.state, &sim.problem)
                .with_context(|| format!("dumping step {}", sim.state.step))?;
        }
        Ok(())
    };

    diag.write(&Row::from(&sim.initial_record()))?;
    dump(&sim)?;
    let mut passed = 0;
    for n in 1..=cfg.time.steps {
        let rec = match sim.advance() {
            Ok(r) => r,
            Err(e) => {
                diag.flush()?;
                return Err(e).with_context(|| format!("step {n}"));
            }
        };
        passed += usize::from(rec.energy.pass);
        if !rec.energy.pass {
            log::warn!("step {n}: energy residual {:e} exceeds {:e}", rec.energy.residual, rec.energy.tol);
        }
        diag.write(&Row::from(&rec))?;
        if n % out.every == 0 || n == cfg.time.steps {
            dump(&sim)?;
        }
        log::debug!("step {n}: E = {:e}, {} Picard iterations", rec.energy.total, rec.picard_iters);
    }
    diag.flush()?;
    let steps = cfg.time.steps;
    Ok(RunSummary {
        steps,
        passed,
        pass_fraction: if steps == 0 { 1.0 } else { passed as f64 / steps as f64 },
    })
}

impl RunSummary {
    /// Whether enough steps passed for a successful exit.
    pub fn meets(&self, threshold: f64) -> bool {
        self.pass_fraction >= threshold
    }
}

/// One disagreement found by [`check_energy`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub step: usize,
    pub what: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub rows: usize,
    /// Rows whose stored fields were recomputed from dumps.
    pub dumped_rows: usize,
    pub mismatches: Vec<Mismatch>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Stored energies of a dumped state, summed directly from the fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    pub kinetic: f64,
    pub internal: f64,
    pub entropy: f64,
    pub interaction: f64,
}

impl Energies {
    pub fn total(&self) -> f64 {
        self.kinetic + self.internal + self.entropy + self.interaction
    }
}

pub fn dumped_energies(s: &DumpedState, params: &ModelParams, cutoff: &CutoffParams, ops: &DiscreteOperators) -> Result<Energies> {
    let v = ops.omega.volume();
    let w = &ops.cfg.weights;
    let nq = w.len();
    let mut e = Energies {
        kinetic: 0.0,
        internal: 0.0,
        entropy: 0.0,
        interaction: 0.0,
    };
    for c in 0..s.rho.len() {
        e.kinetic += 0.5 * v * s.rho[c] * (s.ux[c] * s.ux[c] + s.uy[c] * s.uy[c]);
        e.internal += v * pressure_primitive(s.rho[c].max(0.0), params)?;
        e.interaction += params.z_int * v * s.varrho[c] * s.varrho[c];
        let cell = &s.psi[c * nq..(c + 1) * nq];
        let f: f64 = cell.iter().zip(w).map(|(p, w)| w * cutoff.entropy(*p).0).sum();
        e.entropy += params.k_temp * v * f;
    }
    Ok(e)
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * (scale.abs() + a.abs().max(b.abs())).max(f64::MIN_POSITIVE)
}

/// Re-verifies a run directory. Every row's residual is recomputed from the
/// row's dissipation and work and the stored totals, and its pass flag from
/// the recomputed tolerance. For dumped steps the stored energies, work,
/// masses and minima are recomputed from the fields, and the energy
/// inequality is checked on the recomputed totals.
pub fn check_energy(run_dir: &Path) -> Result<CheckReport> {
    let text = fs::read_to_string(run_dir.join(CONFIG_FILE))
        .with_context(|| format!("reading {}", run_dir.join(CONFIG_FILE).display()))?;
    let cfg = parse_config(&text)?;
    let rows = read_diagnostics(File::open(run_dir.join(DIAGNOSTICS_FILE))?)?;
    let params = cfg.model_params();
    let controls = cfg.controls();
    let cutoff = CutoffParams::new(params.l_cut, params.delta)?;
    let chain = cfg.chain_params()?;
    let omega = cfg.omega()?;
    let qgrid = build_config_grid(&chain, cfg.grid.nq_r, cfg.grid.nq_theta)?;
    let ops = assemble_operators(&omega, &qgrid, &chain, &params)?;
    let dt = params.dt;
    let prefix = &cfg.output.prefix;
    let load = |step: usize| -> Option<DumpedState> {
        if cfg.output.dump_fields {
            read_state(run_dir, prefix, step).ok()
        } else {
            None
        }
    };

    let mut report = CheckReport {
        rows: rows.len(),
        ..Default::default()
    };
    let mut flag = |step: usize, what: String| report.mismatches.push(Mismatch { step, what });
    if rows.first().map(|r| r.step) != Some(0) {
        bail!("diagnostics do not start at step 0");
    }
    let v = ops.omega.volume();
    let first = load(0);
    let mass0 = first.as_ref().map(|s| {
        let m_rho: f64 = v * s.rho.iter().sum::<f64>();
        let m_psi: f64 = v * s.varrho.iter().sum::<f64>();
        (m_rho, m_psi)
    });
    let mut prev_dump: Option<(usize, f64)> = None;
    let mut dumped_rows = 0;
    for (i, row) in rows.iter().enumerate() {
        if row.step != i {
            flag(row.step, format!("row {i} carries step {}", row.step));
            continue;
        }
        if row.pass > 1 {
            flag(row.step, format!("pass flag {}", row.pass));
        }
        let stored = row.kinetic + row.internal + row.entropy + row.interaction;
        if !close(stored, row.total, row.total) {
            flag(row.step, format!("total {} is not the sum of its terms {stored}", row.total));
        }
        if i > 0 {
            let e0 = rows[i - 1].total;
            let diss = row.dissipation * dt;
            let residual = row.total + diss - e0 - dt * row.work;
            let scale = e0.abs() + row.total.abs() + diss.abs() + (dt * row.work).abs();
            if !close(residual, row.residual, scale) {
                flag(row.step, format!("residual {} recomputes to {residual}", row.residual));
            }
            if diss < -1e-12 * scale {
                flag(row.step, format!("negative dissipation {diss}"));
            }
            let tol = 10.0 * (controls.tol + controls.linear.rel_tol) * scale.max(f64::MIN_POSITIVE);
            let clear_pass = row.residual <= tol * (1.0 - 1e-9);
            let clear_fail = !row.residual.is_finite() || row.residual > tol * (1.0 + 1e-9);
            if (row.pass == 1 && clear_fail) || (row.pass == 0 && clear_pass) {
                flag(row.step, format!("pass flag {} with residual {} against tol {tol}", row.pass, row.residual));
            }
        }

        let Some(s) = (if row.step == 0 { first.clone() } else { load(row.step) }) else {
            continue;
        };
        dumped_rows += 1;
        if s.t != row.t {
            flag(row.step, format!("dump time {} differs from row time {}", s.t, row.t));
        }
        let e = dumped_energies(&s, &params, &cutoff, &ops)?;
        for (name, a, b) in [
            ("kinetic", e.kinetic, row.kinetic),
            ("internal", e.internal, row.internal),
            ("entropy", e.entropy, row.entropy),
            ("interaction", e.interaction, row.interaction),
        ] {
            if !close(a, b, row.total) {
                flag(row.step, format!("{name} {b} recomputes to {a}"));
            }
        }
        let nq = ops.nq();
        for c in 0..s.rho.len() {
            let n: f64 = s.psi[c * nq..(c + 1) * nq].iter().zip(&ops.cfg.weights).map(|(p, w)| p * w).sum();
            if !close(n, s.varrho[c], 1.0) {
                flag(row.step, format!("varrho in cell {c} is {} but ψ̂ integrates to {n}", s.varrho[c]));
                break;
            }
        }
        if row.step > 0 {
            let t_mid = rows[i - 1].t + 0.5 * dt;
            let force = params.forcing.sample(&ops.omega, t_mid);
            let work: f64 = (0..s.rho.len())
                .map(|c| v * s.rho[c] * (force[c][0] * s.ux[c] + force[c][1] * s.uy[c]))
                .sum();
            if !close(work, row.work, 1.0) {
                flag(row.step, format!("work {} recomputes to {work}", row.work));
            }
        }
        if let Some((m_rho0, m_psi0)) = mass0 {
            let rel = |m: f64, m0: f64| if m0 == 0.0 { m.abs() } else { ((m - m0) / m0).abs() };
            let m_rho = rel(v * s.rho.iter().sum::<f64>(), m_rho0);
            let m_psi = rel(v * s.varrho.iter().sum::<f64>(), m_psi0);
            if !close(m_rho, row.mass_rho_err, 1e-4) || !close(m_psi, row.mass_psi_err, 1e-4) {
                flag(row.step, format!("mass errors ({}, {}) recompute to ({m_rho}, {m_psi})", row.mass_rho_err, row.mass_psi_err));
            }
        }
        let min_rho = s.rho.iter().copied().fold(f64::INFINITY, f64::min);
        let min_psi = s.psi.iter().copied().fold(f64::INFINITY, f64::min);
        if min_rho != row.min_rho || min_psi != row.min_psi {
            flag(row.step, format!("minima ({}, {}) recompute to ({min_rho}, {min_psi})", row.min_rho, row.min_psi));
        }
        // the energy inequality on recomputed totals, between consecutive dumps
        if let Some((step0, total0)) = prev_dump {
            if step0 + 1 == row.step {
                let inc = e.total() - total0 - dt * row.work;
                let scale = total0.abs() + e.total().abs() + (dt * row.work).abs();
                let tol = 10.0 * (controls.tol + controls.linear.rel_tol) * scale.max(f64::MIN_POSITIVE);
                if row.pass == 1 && inc > tol {
                    flag(row.step, format!("recomputed energy grows by {inc} beyond {tol}"));
                }
            }
        }
        prev_dump = Some((row.step, e.total()));
    }
    report.dumped_rows = dumped_rows;
    Ok(report)
}
