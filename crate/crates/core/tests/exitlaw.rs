use symbranch::exitlaw::{
    critical_exponent, exit_density, exit_probability_u, sample_exit, simulate_brownian_exit, BrownianExitConfig,
};
use symbranch::rng::stream;
use symbranch::stats::{ks_p_value, ks_statistic, ks_two_sample};
use symbranch::{Axis, BoundaryPoint, Error, ExitLaw, ExitLaw32};

// Harmonic measure of the wedge computed with complex arithmetic at 30
// digits (conformal map to the half-plane, Poisson kernel).
const P_EXIT_U: [(f64, (f64, f64), f64); 5] = [
    (-0.5, (2.0, 0.5), 0.818_443_422_514_484_9),
    (0.3, (1.0, 1.0), 0.5),
    (0.9, (1.0, 1.0), 0.5),
    (0.0, (1.0, 2.0), 0.295_167_235_300_866_5),
    (0.5, (2.0, 0.5), 0.884_184_281_266_550_1),
];

const DENSITY: [(f64, (f64, f64), Axis, f64, f64); 5] = [
    (0.5, (1.0, 1.0), Axis::U, 0.7, 0.297_450_287_960_449_23),
    (0.5, (1.0, 1.0), Axis::V, 1.3, 0.170_282_660_209_350_2),
    (-0.5, (2.0, 0.5), Axis::U, 2.5, 0.535_155_312_639_789_5),
    (-0.5, (2.0, 0.5), Axis::V, 0.4, 0.006_797_055_605_774_792),
    (0.0, (1.0, 1.0), Axis::U, 1.0, 0.254_647_908_947_032_54),
];

/// Composite Simpson rule in `x = ln r`; the integrand `r f(r)` decays
/// exponentially in `x` at both ends.
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
fn critical_exponent_values() {
    assert_eq!(critical_exponent(0.0f64).unwrap(), 2.0);
    assert_eq!(critical_exponent(1.0f64).unwrap(), 1.0);
    assert!((critical_exponent(-0.5f64).unwrap() - 3.0).abs() < 1e-12);
    assert!((critical_exponent(0.5f64).unwrap() - 1.5).abs() < 1e-12);
    assert!(critical_exponent(-1.0f64).unwrap().is_infinite());
    assert!(matches!(critical_exponent(1.01f64), Err(Error::InvalidParameter { .. })));
    assert!(critical_exponent(f64::NAN).is_err());
}

#[test]
fn exit_probability_matches_wedge_harmonic_measure() {
    for (rho, start, want) in P_EXIT_U {
        let got = exit_probability_u(&ExitLaw::new(rho).unwrap(), start).unwrap();
        assert!((got - want).abs() < 1e-13, "rho={rho} start={start:?}: {got} vs {want}");
    }
}

#[test]
fn density_matches_frozen_values() {
    for (rho, start, axis, r, want) in DENSITY {
        let got = exit_density(&ExitLaw::new(rho).unwrap(), start, axis, r).unwrap();
        assert!((got - want).abs() < 1e-13 * want.max(1.0), "rho={rho} {axis:?} r={r}: {got} vs {want}");
    }
}

#[test]
fn density_integrates_to_axis_probabilities() {
    for rho in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        for start in [(1.0, 1.0), (2.0, 0.5)] {
            let params = ExitLaw::new(rho).unwrap();
            let mass = |axis| log_simpson(|r| exit_density(&params, start, axis, r).unwrap(), -60.0, 60.0, 40_000);
            let (mu, mv) = (mass(Axis::U), mass(Axis::V));
            let pu = exit_probability_u(&params, start).unwrap();
            assert!((mu + mv - 1.0).abs() < 1e-8, "rho={rho} {start:?}: total {}", mu + mv);
            assert!((mu - pu).abs() < 1e-8, "rho={rho} {start:?}: {mu} vs {pu}");
        }
    }
}

#[test]
fn atomic_cases() {
    let anti = ExitLaw::new(-1.0).unwrap();
    let mut rng = stream(3, "atomic", 0);
    let n = 20_000;
    let mut on_u = 0;
    for _ in 0..n {
        let b = sample_exit(&anti, (1.0, 3.0), &mut rng);
        assert_eq!(b.magnitude, 4.0);
        on_u += usize::from(b.axis == Axis::U);
    }
    let frac = on_u as f64 / n as f64;
    assert!((frac - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / n as f64).sqrt(), "{frac}");
    assert_eq!(exit_probability_u(&anti, (1.0, 3.0)).unwrap(), 0.25);

    let same = ExitLaw::new(1.0).unwrap();
    assert_eq!(sample_exit(&same, (3.0, 1.0), &mut rng), BoundaryPoint::new(Axis::U, 2.0));
    assert_eq!(sample_exit(&same, (1.0, 3.0), &mut rng), BoundaryPoint::new(Axis::V, 2.0));
    assert_eq!(sample_exit(&same, (1.0, 1.0), &mut rng), BoundaryPoint::origin());
    assert!(matches!(exit_density(&same, (1.0, 2.0), Axis::U, 1.0), Err(Error::Atomic)));
}

#[test]
fn boundary_points_round_trip() {
    assert_eq!(BoundaryPoint::from_pair(2.0, 0.0).unwrap().to_pair(), (2.0, 0.0));
    assert_eq!(BoundaryPoint::from_pair(0.0, 1.5).unwrap().axis, Axis::V);
    assert_eq!(BoundaryPoint::<f64>::new(Axis::V, 0.0), BoundaryPoint::origin());
    assert!(BoundaryPoint::from_pair(1.0, 1.0).is_err());
    assert!(BoundaryPoint::from_pair(-1.0, 0.0).is_err());
}

/// Normalised CDF of the exit magnitude on one axis, tabulated by cumulative
/// trapezoids in `ln r` and interpolated linearly.
struct AxisCdf {
    lo: f64,
    h: f64,
    cum: Vec<f64>,
}

impl AxisCdf {
    fn new(params: &ExitLaw, start: (f64, f64), axis: Axis) -> Self {
        let (lo, hi, n) = (-40.0, 40.0, 400_000);
        let h = (hi - lo) / n as f64;
        let g = |x: f64| {
            let r = f64::exp(x);
            r * exit_density(params, start, axis, r).unwrap()
        };
        let mut cum = vec![0.0; n + 1];
        let mut prev = g(lo);
        for i in 1..=n {
            let cur = g(lo + i as f64 * h);
            cum[i] = cum[i - 1] + 0.5 * h * (prev + cur);
            prev = cur;
        }
        let total = cum[n];
        cum.iter_mut().for_each(|c| *c /= total);
        AxisCdf { lo, h, cum }
    }

    fn at(&self, r: f64) -> f64 {
        let x = (r.ln() - self.lo) / self.h;
        if x <= 0.0 {
            return 0.0;
        }
        let i = x.floor() as usize;
        if i + 1 >= self.cum.len() {
            return 1.0;
        }
        let w = x - i as f64;
        self.cum[i] * (1.0 - w) + self.cum[i + 1] * w
    }
}

#[test]
fn sampler_matches_density_in_ks() {
    let n = 100_000;
    for (rho, start) in [(-0.5, (1.0, 1.0)), (0.5, (2.0, 0.5))] {
        let params = ExitLaw::new(rho).unwrap();
        let mut rng = stream(11, "sampler-ks", 0);
        let draws: Vec<BoundaryPoint<f64>> = (0..n).map(|_| sample_exit(&params, start, &mut rng)).collect();
        for axis in [Axis::U, Axis::V] {
            let cdf = AxisCdf::new(&params, start, axis);
            let xs: Vec<f64> = draws.iter().filter(|b| b.axis == axis).map(|b| b.magnitude).collect();
            let d = ks_statistic(&xs, |x| cdf.at(x));
            assert!(d < 0.02, "rho={rho} {axis:?}: KS {d}");
        }
    }
}

#[test]
fn sampler_agrees_with_brownian_paths() {
    let params = ExitLaw::new(0.3).unwrap();
    let cfg = BrownianExitConfig::default();
    let n = 2_000;
    let mut a = stream(5, "brownian", 0);
    let mut b = stream(5, "exact", 0);
    let signed = |p: BoundaryPoint<f64>| if p.axis == Axis::U { p.magnitude } else { -p.magnitude };
    let paths: Vec<f64> = (0..n)
        .map(|_| simulate_brownian_exit(&params, (1.0, 0.5), &cfg, &mut a).unwrap())
        .filter(|e| !e.censored)
        .map(|e| signed(e.point))
        .collect();
    let exact: Vec<f64> = (0..n).map(|_| signed(sample_exit(&params, (1.0, 0.5), &mut b))).collect();
    let d = ks_two_sample(&paths, &exact);
    assert!(ks_p_value(d, paths.len(), exact.len()) > 0.001, "KS {d}");
}

#[test]
fn single_precision_density_tracks_double() {
    let p64 = ExitLaw::new(0.5).unwrap();
    let p32 = ExitLaw32::new(0.5f32).unwrap();
    let d64 = exit_density(&p64, (1.0, 1.0), Axis::U, 0.7).unwrap();
    let d32 = exit_density(&p32, (1.0f32, 1.0f32), Axis::U, 0.7f32).unwrap();
    assert!((d64 - d32 as f64).abs() < 1e-5);
}
