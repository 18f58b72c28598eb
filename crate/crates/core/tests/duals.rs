use num_complex::Complex;
use proptest::prelude::*;
use symbranch::duals::{
    bracket, coalescing_dual_estimate, moment_dual_estimate, selfdual_check, selfdual_functional, MomentDualSpec,
};
use symbranch::voter::OpinionField;
use symbranch::{Error, PairField, SiteGraph64};

// Same mixed moments as in the SDE tests, from the moment equations.
const CROSS: [(f64, f64); 3] =
    [(-0.5, 0.674_036_112_991_472_3), (0.0, 0.708_913_245_641_579_1), (0.5, 0.749_563_124_708_100_5)];
const SAME_RHO_HALF: f64 = 0.661_170_176_246_533_6;

// Two coalescing walkers on the 8-cycle, half-half start, t = 1, from the
// exponential of their 64-state generator.
const TWO_POINT: [((usize, usize), f64); 4] = [
    ((3, 4), 0.267_690_537_750_877_5),
    ((2, 5), 0.067_391_378_194_315_43),
    ((0, 7), 0.267_690_537_750_877_7),
    ((1, 2), 0.885_017_994_489_353),
];

fn start() -> PairField {
    PairField::new(vec![1.0, 0.5], vec![0.5, 1.0]).unwrap()
}

fn spec(rho: f64, u: &[usize], v: &[usize]) -> MomentDualSpec {
    MomentDualSpec { gamma: 1.0, rho, t: 0.5, u_sites: u.to_vec(), v_sites: v.to_vec(), force: false }
}

#[test]
fn moment_dual_matches_moment_equations() {
    let g = SiteGraph64::dumbbell(1.0).unwrap();
    for (rho, want) in CROSS {
        let est = moment_dual_estimate(&g, &spec(rho, &[0], &[1]), &start(), 40_000, 1).unwrap();
        assert!((est.mean - want).abs() < 4.0 * est.se, "rho={rho}: {} vs {want} (se {})", est.mean, est.se);
        assert!(!est.unreliable);
    }
    let est = moment_dual_estimate(&g, &spec(0.5, &[0], &[0]), &start(), 40_000, 2).unwrap();
    assert!((est.mean - SAME_RHO_HALF).abs() < 4.0 * est.se);
}

#[test]
fn moment_dual_degenerate_cases() {
    let g = SiteGraph64::dumbbell(1.0).unwrap();
    let mut s = spec(0.3, &[0], &[1]);
    s.t = 0.0;
    let est = moment_dual_estimate(&g, &s, &start(), 100, 0).unwrap();
    assert_eq!((est.mean, est.se), (1.0, 0.0));

    let mut s = spec(0.3, &[0], &[1]);
    s.gamma = 0.0;
    let est = moment_dual_estimate(&g, &s, &start(), 40_000, 0).unwrap();
    let p = g.heat_semigroup(0.5).unwrap();
    let want = p.apply(&[1.0, 0.5]).unwrap().0[0] * p.apply(&[0.5, 1.0]).unwrap().0[1];
    assert!((est.mean - want).abs() < 4.0 * est.se);
}

#[test]
fn moment_dual_refuses_heavy_weights_unless_forced() {
    let g = SiteGraph64::dumbbell(1.0).unwrap();
    let mut s = spec(0.5, &[0, 1, 0], &[1, 0]);
    s.gamma = 3.0;
    s.t = 1.0;
    assert!(matches!(moment_dual_estimate(&g, &s, &start(), 10, 0), Err(Error::Refused(_))));
    s.force = true;
    assert!(moment_dual_estimate(&g, &s, &start(), 10, 0).is_ok());
    assert!(moment_dual_estimate(&g, &spec(0.0, &[2], &[0]), &start(), 10, 0).is_err());
}

#[test]
fn coalescing_dual_matches_exact_two_point_functions() {
    let g = SiteGraph64::torus(1, 8).unwrap();
    let eta = OpinionField::new(vec![1, 1, 1, 1, 0, 0, 0, 0]).unwrap();
    for ((i, j), want) in TWO_POINT {
        let est = coalescing_dual_estimate(&g, &eta, &[i, j], 1.0, 40_000, 3).unwrap();
        assert!((est.mean - want).abs() < 4.0 * est.se, "({i},{j}): {} vs {want}", est.mean);
    }
    let est = coalescing_dual_estimate(&g, &eta, &[3], 1.0, 40_000, 3).unwrap();
    assert!((est.mean - 0.731_872_910_182_379_3).abs() < 4.0 * est.se);
}

#[test]
fn bracket_by_hand() {
    let z = bracket(&[1.0], &[0.0], &[0.5], &[0.0], 0.0);
    assert_eq!(z, Complex::new(-0.5, 0.5));
    let f = selfdual_functional(
        &PairField::new(vec![1.0], vec![0.0]).unwrap(),
        &PairField::new(vec![0.5], vec![0.0]).unwrap(),
        0.0,
    );
    let want = Complex::new(0.5f64.cos(), 0.5f64.sin()) * (-0.5f64).exp();
    assert!((f - want).norm() < 1e-15);
    // rho = 1 drops the damping, rho = -1 the oscillating part.
    assert_eq!(bracket(&[1.0], &[2.0], &[3.0], &[1.0], 1.0).re, 0.0);
    assert_eq!(bracket(&[1.0], &[2.0], &[3.0], &[1.0], -1.0).im, 0.0);
}

#[test]
fn selfdual_check_is_exact_at_time_zero() {
    let x = PairField::new(vec![1.0, 0.0], vec![0.2, 0.7]).unwrap();
    let y = PairField::new(vec![0.3, 0.3], vec![0.0, 0.5]).unwrap();
    let gap = selfdual_check(std::slice::from_ref(&x), std::slice::from_ref(&y), &x, &y, 0.3).unwrap();
    assert_eq!((gap.re, gap.im), (0.0, 0.0));
    let short = PairField::new(vec![1.0], vec![1.0]).unwrap();
    assert!(matches!(selfdual_check(std::slice::from_ref(&x), std::slice::from_ref(&short), &x, &y, 0.3), Err(Error::SizeMismatch { .. })));
    assert!(selfdual_check(std::slice::from_ref(&x), std::slice::from_ref(&y), &x, &short, 0.3).is_err());
}

proptest! {
    #[test]
    fn functional_is_bounded_on_nonnegative_fields(
        x in proptest::collection::vec(0.0f64..5.0, 6),
        y in proptest::collection::vec(0.0f64..5.0, 6),
        rho in -1.0f64..=1.0,
    ) {
        let a = PairField::new(x[..3].to_vec(), x[3..].to_vec()).unwrap();
        let b = PairField::new(y[..3].to_vec(), y[3..].to_vec()).unwrap();
        prop_assert!(selfdual_functional(&a, &b, rho).norm() <= 1.0 + 1e-15);
    }
}
