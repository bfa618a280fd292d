//! Headless invariant suite behind `nsfp selftest`.
//!
//! Each check prints one PASS/FAIL line. Sampling draws from a ChaCha
//! stream seeded by the caller, so a run is reproducible from its seed.

use nsfp_core::grid::build_config_grid;
use nsfp_core::model::ChainParams;
use nsfp_core::regularization::{cutoff_beta, cutoff_beta_delta, entropy_f, entropy_fl, entropy_fl_delta};
use nsfp_core::scheme::{Simulation, State};
use nsfp_core::stress::{kramers_tensor, PsiField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_config, BcName, Config, Perturbation, PsiInit};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

type Check = fn(&mut ChaCha8Rng) -> Result<String, String>;

const CHECKS: [(&str, Check); 7] = [
    ("regularization identities", regularization),
    ("maxwellian weights and Kramers identity", equilibrium_moments),
    ("configuration round trip", config_round_trip),
    ("equilibrium stationarity", stationarity),
    ("energy inequality and conservation", relaxation),
    ("cut-off neutrality", neutrality),
    ("dump round trip", dump_round_trip),
];

/// Runs every check, printing one line each.
pub fn run_selftest(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for (i, (name, check)) in CHECKS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let (pass, detail) = match check(&mut rng) {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        out.push(CheckResult { name, pass, detail });
    }
    out
}

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn regularization(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let n = 20_000;
    let mut failures = 0;
    for _ in 0..n {
        let l = rng.gen_range(1.0001..50.0);
        let d = rng.gen_range(1e-6..0.9999);
        let s = rng.gen_range(1e-8..2.0 * l);
        let k = rng.gen_range(f64::MIN_POSITIVE..=1.0);
        let (v, _, d2) = entropy_fl(s, l).map_err(|e| e.to_string())?;
        let b = cutoff_beta(s, l);
        let f = entropy_f(s).map_err(|e| e.to_string())?;
        let (vd, _, d2d) = entropy_fl_delta(s, l, d).map_err(|e| e.to_string())?;
        let bd = cutoff_beta_delta(s, l, d);
        let ok = d2 == 1.0 / b
            && d2d == 1.0 / bd
            && bd == b.max(d)
            && (if s <= l { v == f } else { v >= f })
            && vd <= v
            && entropy_fl_delta(k * s, l, d).map_err(|e| e.to_string())?.0 <= vd + 1.0;
        failures += usize::from(!ok);
    }
    ensure(failures == 0, format!("{failures} failures in {n} samples"))
}

fn equilibrium_moments(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let b = rng.gen_range(3.0..10.0);
    let chain = ChainParams::dumbbell(b, 2.0).map_err(|e| e.to_string())?;
    let cfg = build_config_grid(&chain, 32, 32).map_err(|e| e.to_string())?;
    let sum: f64 = cfg.weights.iter().sum();
    let psi = PsiField::constant(1, cfg.nodes(), 1.0);
    let c = kramers_tensor(&psi, &cfg, 0).map_err(|e| e.to_string())?[0];
    let err = [c[0] - 1.0, c[1], c[2], c[3] - 1.0].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    ensure(
        (sum - 1.0).abs() <= 1e-10 && err <= 5e-4,
        format!("b = {b:.3}: |ΣW − 1| = {:.1e}, |C(M) − I| = {err:.1e}", (sum - 1.0).abs()),
    )
}

fn small_config(rng: &mut ChaCha8Rng) -> Config {
    let mut cfg = Config::default();
    cfg.grid.nx = 4;
    cfg.grid.ny = 4;
    cfg.grid.nq_r = 8;
    cfg.grid.nq_theta = 8;
    cfg.grid.bc = if rng.gen_bool(0.5) { BcName::Periodic } else { BcName::NoSlip };
    cfg.model.z = 0.1;
    cfg.model.lambda = 0.25;
    cfg.time.t_end = 0.1;
    cfg.time.steps = 10;
    cfg
}

fn build(cfg: &Config) -> Result<Simulation, String> {
    let (problem, state) = cfg.build().map_err(|e| e.to_string())?;
    Ok(Simulation::new(problem, state))
}

fn max_diff(a: &State, b: &State) -> f64 {
    let pairs = [
        (&a.rho, &b.rho),
        (&a.ux, &b.ux),
        (&a.uy, &b.uy),
        (&a.psi.values, &b.psi.values),
        (&a.varrho, &b.varrho),
    ];
    pairs
        .iter()
        .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

fn config_round_trip(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut cfg = small_config(rng);
    cfg.model.gamma = rng.gen_range(1.6..3.0);
    cfg.regularization.kappa = rng.gen_range(0.0..1.0);
    cfg.regularization.l_cut = rng.gen_range(1.5..100.0);
    cfg.init.psi0 = PsiInit::Perturbation {
        perturbation: Perturbation {
            amplitude: rng.gen_range(0.0..0.9),
            wavenumber: rng.gen_range(1..4),
        },
    };
    let back = parse_config(&cfg.to_toml()).map_err(|e| e.to_string())?;
    ensure(back == cfg, "parse(serialize(config)) reproduces the configuration".into())
}

fn stationarity(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut cfg = small_config(rng);
    cfg.regularization.kappa = rng.gen_range(0.0..0.5);
    cfg.regularization.alpha = rng.gen_range(0.0..0.2);
    cfg.regularization.l_cut = rng.gen_range(1.5..50.0);
    cfg.time.t_end = rng.gen_range(1e-3..0.1) * cfg.time.steps as f64;
    let mut sim = build(&cfg)?;
    let mut iters = 0;
    for _ in 0..cfg.time.steps {
        iters = iters.max(sim.advance().map_err(|e| e.to_string())?.picard_iters);
    }
    let drift = max_diff(&sim.state, &sim.initial);
    ensure(
        drift <= 1e-11 && iters == 1,
        format!(
            "κ = {:.3}, α = {:.3}, L = {:.2}, Δt = {:.3}: drift {drift:.1e}, at most {iters} Picard iterations",
            cfg.regularization.kappa,
            cfg.regularization.alpha,
            cfg.regularization.l_cut,
            cfg.dt()
        ),
    )
}

fn perturbed(rng: &mut ChaCha8Rng) -> Config {
    let mut cfg = small_config(rng);
    cfg.init.psi0 = PsiInit::Perturbation {
        perturbation: Perturbation {
            amplitude: rng.gen_range(0.2..0.6),
            wavenumber: 1,
        },
    };
    cfg
}

fn relaxation(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let cfg = perturbed(rng);
    let mut sim = build(&cfg)?;
    let mut prev = sim.initial_record();
    let mut worst_mass = 0.0f64;
    for _ in 0..cfg.time.steps {
        let r = sim.advance().map_err(|e| e.to_string())?;
        worst_mass = worst_mass.max(r.conservation.mass_rho_err).max(r.conservation.mass_psi_err);
        let ok = r.energy.pass
            && r.energy.total <= prev.energy.total + r.energy.tol
            && r.conservation.min_rho >= 0.0
            && worst_mass <= 1e-12;
        if !ok {
            return Err(format!("step {}: {:?} {:?}", r.step, r.energy, r.conservation));
        }
        prev = r;
    }
    Ok(format!("{} steps, worst relative mass error {worst_mass:.1e}", cfg.time.steps))
}

fn neutrality(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let cfg = perturbed(rng);
    let mut doubled = cfg.clone();
    doubled.regularization.l_cut *= 2.0;
    let (mut a, mut b) = (build(&cfg)?, build(&doubled)?);
    for _ in 0..cfg.time.steps {
        a.advance().map_err(|e| e.to_string())?;
        b.advance().map_err(|e| e.to_string())?;
    }
    let max_psi = a.state.psi.max();
    if max_psi >= cfg.regularization.l_cut {
        return Err(format!("max ψ̂ = {max_psi} reached L"));
    }
    ensure(a.state == b.state, format!("bitwise identical with max ψ̂ = {max_psi:.3}"))
}

fn dump_round_trip(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let cfg = perturbed(rng);
    let sim = build(&cfg)?;
    let dir = std::env::temp_dir().join(format!("nsfp-selftest-{}-{}", std::process::id(), rng.gen::<u32>()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let result = crate::dump::write_state(&dir, "st", &sim.state, &sim.problem)
        .and_then(|_| crate::dump::read_state(&dir, "st", 0));
    let _ = std::fs::remove_dir_all(&dir);
    let back = result.map_err(|e| e.to_string())?;
    let s = &sim.state;
    let same = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
    ensure(
        same(&back.rho, &s.rho)
            && same(&back.ux, &s.ux)
            && same(&back.uy, &s.uy)
            && same(&back.psi, &s.psi.values)
            && same(&back.varrho, &s.varrho),
        "five fields reread bitwise".into(),
    )
}
