use proptest::prelude::*;
use symbranch::exitlaw::{nu_density, nu_scaled_density, TruncatedJumpMeasure};
use symbranch::rng::stream;
use symbranch::{Axis, BoundaryPoint, Error, ExitLaw};

// Closed form evaluated at 30 digits.
const NU: [(f64, Axis, f64, f64); 4] = [
    (0.3, Axis::U, 2.0, 0.282_772_557_532_243_4),
    (0.3, Axis::V, 0.5, 0.309_452_845_156_219_6),
    (-0.5, Axis::U, 0.5, 0.810_115_927_966_714_8),
    (0.5, Axis::V, 3.0, 0.027_982_062_295_971_79),
];

fn log_simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let g = |x: f64| {
        let r = x.exp();
        r * f(r)
    };
    let mut s = g(lo) + g(hi);
    for i in 1..n {
        s += g(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn density_matches_frozen_values() {
    for (rho, axis, y, want) in NU {
        let got = nu_density(&ExitLaw::new(rho).unwrap(), BoundaryPoint::new(axis, y)).unwrap();
        assert!((got - want).abs() < 1e-14, "rho={rho} {axis:?} {y}: {got}");
    }
}

#[test]
fn v_branch_first_moment_is_one() {
    for rho in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        let params = ExitLaw::new(rho).unwrap();
        // The integrand decays like y^(1 - p) in the tail.
        let hi = (40.0 / (params.p() - 1.0)).min(250.0);
        let m = log_simpson(|y| y * nu_density(&params, BoundaryPoint::new(Axis::V, y)).unwrap(), -80.0, hi, 400_000);
        assert!((m - 1.0).abs() < 1e-6, "rho={rho}: {m}");
    }
}

#[test]
fn pole_and_atomic_cases_are_errors() {
    let params = ExitLaw::new(0.2).unwrap();
    assert!(matches!(nu_density(&params, BoundaryPoint::new(Axis::U, 1.0)), Err(Error::Pole(_))));
    assert!(matches!(nu_scaled_density(&params, 2.0, BoundaryPoint::new(Axis::U, 2.0)), Err(Error::Pole(_))));
    assert!(nu_scaled_density(&params, 0.0, BoundaryPoint::new(Axis::V, 1.0)).is_err());
    let anti = ExitLaw::new(-1.0).unwrap();
    assert!(matches!(nu_density(&anti, BoundaryPoint::new(Axis::V, 1.0)), Err(Error::Atomic)));
    assert_eq!(nu_density(&params, BoundaryPoint::origin()).unwrap(), 0.0);
}

#[test]
fn scaling_identity_in_integrated_form() {
    // int f d nu_(a,0) = (1/a) int f(a y) d nu(y), with f vanishing at the pole.
    let params = ExitLaw::new(0.4).unwrap();
    for a in [0.5, 2.0, 3.0] {
        let f = move |y: f64| (y - a).powi(2) * (-y).exp();
        let lhs = |axis| {
            log_simpson(|y| f(y) * nu_scaled_density(&params, a, BoundaryPoint::new(axis, y)).unwrap_or(0.0), -60.0, 8.0, 400_000)
        };
        let rhs = |axis| {
            log_simpson(|y| f(a * y) * nu_density(&params, BoundaryPoint::new(axis, y)).unwrap_or(0.0), -60.0, 8.0, 400_000)
                / a
        };
        for axis in [Axis::U, Axis::V] {
            let (l, r) = (lhs(axis), rhs(axis));
            assert!((l - r).abs() < 1e-6, "a={a} {axis:?}: {l} vs {r}");
        }
    }
}

#[test]
fn truncation_is_centred_with_unit_m2() {
    for (rho, eps) in [(-0.5, 0.05), (0.0, 0.1), (0.5, 0.2)] {
        let m = TruncatedJumpMeasure::new(rho, eps).unwrap();
        assert!(m.balance().abs() < 1e-8, "rho={rho}: balance {}", m.balance());
        assert!((m.m2() - 1.0).abs() < 1e-8, "rho={rho}: m2 {}", m.m2());
        assert!(m.eps_prime() > 0.0 && m.eps_prime() < 1.0);
        assert!((m.total_mass() - m.mass_u() - m.mass_v()).abs() < 1e-12);
    }
    assert!(TruncatedJumpMeasure::new(-1.0, 0.1).is_err());
    assert!(TruncatedJumpMeasure::new(0.0, 1.5).is_err());
}

#[test]
fn truncated_sampler_avoids_the_window_and_splits_mass() {
    let m = TruncatedJumpMeasure::new(0.0, 0.1).unwrap();
    let mut rng = stream(21, "nu-sampler", 0);
    let n = 200_000;
    let mut on_v = 0;
    let mut v_small = 0;
    for _ in 0..n {
        let y = m.sample(&mut rng);
        assert!(y.magnitude > 0.0 && y.magnitude.is_finite());
        match y.axis {
            Axis::U => assert!(y.magnitude <= 1.0 - m.eps_prime() || y.magnitude >= 1.1, "{}", y.magnitude),
            Axis::V => {
                on_v += 1;
                v_small += usize::from(y.magnitude < 1.0);
            }
        }
    }
    let want = m.mass_v() / m.total_mass();
    let frac = on_v as f64 / n as f64;
    assert!((frac - want).abs() < 4.0 * (want * (1.0 - want) / n as f64).sqrt(), "{frac} vs {want}");
    // At rho = 0 the V density y / (y^2 + 1)^2 puts half its mass below 1.
    let half = v_small as f64 / on_v as f64;
    assert!((half - 0.5).abs() < 4.0 * (0.25 / on_v as f64).sqrt(), "{half}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scaled_density_is_the_pushforward(rho in -0.9f64..0.9, a in 0.1f64..10.0, y in 0.01f64..20.0, on_u: bool) {
        let params = ExitLaw::new(rho).unwrap();
        let axis = if on_u { Axis::U } else { Axis::V };
        prop_assume!(!on_u || (y / a - 1.0).abs() > 1e-3);
        let lhs = nu_scaled_density(&params, a, BoundaryPoint::new(axis, y)).unwrap();
        let rhs = nu_density(&params, BoundaryPoint::new(axis, y / a)).unwrap() / (a * a);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1e-300));
    }
}
