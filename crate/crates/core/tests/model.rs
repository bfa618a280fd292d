mod common;

use common::dumbbell;
use nsfp_core::grid::build_config_grid;
use nsfp_core::model::*;
use nsfp_core::quadrature::{composite, GaussLegendre};
use nsfp_core::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn chain(b: f64) -> ChainParams {
    ChainParams::dumbbell(b, 1.0).unwrap()
}

/// Radial sample approaching ∂D geometrically.
fn boundary_sample(b: f64) -> Vec<f64> {
    let rb = b.sqrt();
    (0..60).map(|k| rb * (1.0 - 0.5f64.powi(k))).filter(|r| r * r < b).collect()
}

#[test]
fn potential_blows_up_at_the_boundary() {
    let c = chain(4.0);
    let mut last = 0.0;
    for k in 1..40 {
        let s = 2.0 - 0.5f64.powi(k);
        let (u, du) = spring_potential(s, 0, &c).unwrap();
        assert!(u > last && du > 0.0);
        last = u;
    }
    assert!(last > 20.0);
    assert!(spring_potential(-0.1, 0, &c).is_err());
}

#[test]
fn potential_is_convex() {
    let c = chain(5.0);
    let u = |s: f64| spring_potential(s, 0, &c).unwrap().0;
    for k in 1..200 {
        let s = 2.49 * k as f64 / 200.0;
        let h = 1e-3;
        if s + h < 2.5 && s - h > 0.0 {
            assert!(u(s + h) - 2.0 * u(s) + u(s - h) >= 0.0);
        }
    }
}

#[test]
fn growth_brackets_are_finite_and_positive() {
    for b in [2.5, 4.0, 10.0] {
        let c = chain(b);
        let rb = b.sqrt();
        let theta = c.theta(0);
        assert_eq!(theta, b / 2.0);
        let (mut c3, mut c4) = (f64::INFINITY, 0.0f64);
        let (mut m_lo, mut m_hi) = (f64::INFINITY, 0.0f64);
        for r in boundary_sample(b) {
            let dist = rb - r;
            let (_, du) = spring_potential(0.5 * r * r, 0, &c).unwrap();
            c3 = c3.min(dist * du);
            c4 = c4.max(dist * du);
            let (m, _) = maxwellian(&[r, 0.0], &c).unwrap();
            let ratio = m / dist.powf(theta);
            m_lo = m_lo.min(ratio);
            m_hi = m_hi.max(ratio);
        }
        println!("b={b}: c3={c3:.4} c4={c4:.4} M/dist^θ in [{m_lo:.4e}, {m_hi:.4e}]");
        // dist·U' = b/(√b + r) ∈ [√b/2, √b]
        assert!(c3 >= rb / 2.0 * (1.0 - 1e-12) && c4 <= rb * (1.0 + 1e-12));
        assert!(m_lo > 0.0 && m_hi.is_finite() && m_hi / m_lo <= 2f64.powf(theta) * (1.0 + 1e-9));
    }
}

#[test]
fn maxwellian_moments_are_integrable() {
    // ∫ M (1 + U² + U'²) dq is stable under refinement when θ > 1
    for b in [3.0, 4.0, 8.0] {
        let c = chain(b);
        let rule = GaussLegendre::new(10);
        let f = |r: f64| {
            let (m, _) = maxwellian(&[r, 0.0], &c).unwrap();
            let (u, du) = spring_potential(0.5 * r * r, 0, &c).unwrap();
            2.0 * PI * r * m * (1.0 + u * u + du * du)
        };
        let rb = b.sqrt() * (1.0 - 1e-15);
        let coarse = composite(&rule, f, 0.0, rb, 64);
        let fine = composite(&rule, f, 0.0, rb, 128);
        assert!(fine.is_finite());
        assert!(((fine - coarse) / fine).abs() < 1e-2, "b={b}: {coarse} {fine}");
    }
}

#[test]
fn maxwellian_examples() {
    let c = chain(4.0);
    let z = 2.0 * PI * 4.0 / 6.0;
    assert!((c.partition(0) - z).abs() <= 1e-10 * z);
    let (m, _) = maxwellian(&[0.0, 0.0], &c).unwrap();
    assert!((m - 0.238732).abs() < 1e-6);
    assert_eq!(maxwellian(&[0.0, 2.0], &c).unwrap().0, 0.0);
    assert!(maxwellian(&[0.0, 0.0, 0.0], &c).is_err());
    // discrete normalization on the reference quadrature
    let cfg = build_config_grid(&c, 32, 32).unwrap();
    let g = &cfg.springs[0];
    assert!((g.raw_sum - 1.0).abs() < 1e-10, "{}", g.raw_sum);
    let s: f64 = cfg.weights.iter().sum();
    assert!((s - 1.0).abs() < 1e-10);
}

#[test]
fn rouse_examples() {
    assert_eq!(rouse_min_eigenvalue(&[2.0], 1).unwrap(), 2.0);
    let a = linear_chain_rouse(2);
    assert_eq!(a, vec![2.0, -1.0, -1.0, 2.0]);
    assert!((rouse_min_eigenvalue(&a, 2).unwrap() - 1.0).abs() < 1e-14);
    assert!(matches!(
        rouse_min_eigenvalue(&[1.0, 2.0, 2.0, 1.0], 2),
        Err(Error::NotPositiveDefinite { .. })
    ));
    assert!(matches!(rouse_min_eigenvalue(&[1.0, 2.0, 0.0, 1.0], 2), Err(Error::NotSymmetric)));
    let c = ChainParams::new(2, vec![4.0, 6.0], linear_chain_rouse(2)).unwrap();
    assert_eq!(c.bead_count_coeff(), 3);
    assert!((c.a0() - 1.0).abs() < 1e-14);
    assert_eq!(c.theta(1), 3.0);
}

#[test]
fn chain_rejects_bad_input() {
    assert!(ChainParams::new(2, vec![], vec![]).is_err());
    assert!(ChainParams::new(2, vec![1.5], vec![1.0]).is_err());
    assert!(ChainParams::new(4, vec![4.0], vec![1.0]).is_err());
    assert!(ChainParams::new(2, vec![4.0], vec![1.0, 0.0]).is_err());
}

#[test]
fn model_params_collect_violations() {
    let p = ModelParams {
        gamma: 1.4,
        z_int: 0.0,
        l_cut: 1.0,
        ..ModelParams::default()
    };
    let v = p.violations();
    let fields: Vec<&str> = v.iter().map(|(f, _)| *f).collect();
    assert_eq!(fields, vec!["gamma", "L", "z"]);
    assert!(v[0].1.contains("γ > 3/2"));
    assert!(p.validate().is_err());
    assert!(ModelParams::default().validate().is_ok());
    assert_eq!(ModelParams { gamma: 9.0, ..p }.big_gamma(), 9.0);
    assert_eq!(ModelParams::default().big_gamma(), 8.0);
}

#[test]
fn tait_reference_pressure() {
    let p = ModelParams {
        eos: Eos::Tait {
            a0: 5.0,
            a1: 2.0,
            rho_ref: 1.3,
        },
        gamma: 7.0,
        ..ModelParams::default()
    };
    assert!((eos_pressure(1.3, &p).unwrap() - 3.0).abs() < 1e-14);
    assert_eq!(eos_pressure(0.0, &p).unwrap(), -2.0);
}

fn eos_cases() -> Vec<ModelParams> {
    let base = ModelParams::default();
    vec![
        ModelParams { kappa: 0.0, ..base.clone() },
        ModelParams { kappa: 0.3, gamma: 1.7, c_p: 2.0, ..base.clone() },
        ModelParams { kappa: 0.1, gamma: 9.5, ..base.clone() },
        ModelParams {
            kappa: 0.05,
            gamma: 7.0,
            eos: Eos::Tait { a0: 3.0, a1: 1.0, rho_ref: 1.2 },
            ..base
        },
    ]
}

#[test]
fn primitive_identity_by_finite_differences() {
    for p in eos_cases() {
        let mut last = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for k in -30..=20 {
            let rho = 10f64.powf(k as f64 / 10.0);
            let pk = eos_pressure(rho, &p).unwrap();
            let h = 1e-5 * rho;
            let dp = (pressure_primitive(rho + h, &p).unwrap() - pressure_primitive(rho - h, &p).unwrap()) / (2.0 * h);
            let lhs = rho * dp - pressure_primitive(rho, &p).unwrap();
            assert!((lhs - pk).abs() <= 1e-8 * (1.0 + pk.abs()), "{p:?} ρ={rho}: {lhs} vs {pk}");
            let dpk = (eos_pressure(rho + h, &p).unwrap() - eos_pressure(rho - h, &p).unwrap()) / (2.0 * h);
            let slope = eos_pressure_deriv(rho, &p).unwrap();
            assert!((slope - dpk).abs() <= 1e-7 * (1.0 + slope.abs()), "p' at ρ={rho}");
            let exact = pressure_primitive_deriv(rho, &p).unwrap();
            assert!((exact - dp).abs() <= 1e-7 * (1.0 + exact.abs()));
            let pp = pressure_primitive(rho, &p).unwrap();
            assert!(pk >= last.0 && pp >= last.1 && pp >= 0.0);
            last = (pk, pp);
        }
    }
}

proptest! {
    #[test]
    fn spring_force_is_odd(r in 0.0f64..0.999, t in 0.0f64..6.3, b in 2.1f64..20.0) {
        let c = chain(b);
        let q = [r * b.sqrt() * t.cos(), r * b.sqrt() * t.sin()];
        let f = spring_force(&q, 0, &c).unwrap();
        let g = spring_force(&[-q[0], -q[1]], 0, &c).unwrap();
        prop_assert_eq!(f[0], -g[0]);
        prop_assert_eq!(f[1], -g[1]);
    }

    #[test]
    fn maxwellian_is_positive_inside(r in 0.0f64..0.999, t in 0.0f64..6.3) {
        let c = dumbbell();
        let q = [2.0 * r * t.cos(), 2.0 * r * t.sin()];
        let (m, lm) = maxwellian(&q, &c).unwrap();
        prop_assert!(m > 0.0);
        prop_assert!((lm.exp() - m).abs() <= 1e-14);
    }

    #[test]
    fn pressure_is_monotone(a in 0.0f64..5.0, d in 0.0f64..5.0, kappa in 0.0f64..1.0) {
        let p = ModelParams { kappa, ..ModelParams::default() };
        prop_assert!(eos_pressure(a + d, &p).unwrap() >= eos_pressure(a, &p).unwrap());
        prop_assert!(pressure_primitive(a + d, &p).unwrap() >= pressure_primitive(a, &p).unwrap());
    }
}
