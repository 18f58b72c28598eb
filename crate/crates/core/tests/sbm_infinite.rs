use symbranch::exitlaw::TruncatedJumpMeasure;
use symbranch::rng::stream;
use symbranch::sbm_infinite::{
    apply_jump, intensity, martingale_functional, pdmp_simulate, trotter_simulate, JumpLaw, Path, PathSegment,
    PdmpConfig, PdmpEvent, TestPair, Trotter,
};
use symbranch::stats::MeanVar;
use symbranch::{Axis, BoundaryPoint, Error, ExitLaw, PairField, SiteGraph64};

fn pair(u: &[f64], v: &[f64]) -> PairField {
    PairField::new(u.to_vec(), v.to_vec()).unwrap()
}

#[test]
fn intensity_examples() {
    let g = SiteGraph64::dumbbell(1.0).unwrap();
    let s = pair(&[2.0, 0.0], &[0.0, 1.0]);
    assert_eq!(intensity(&g, &s, 0).unwrap(), 0.5);
    assert_eq!(intensity(&g, &s, 1).unwrap(), 2.0);
    let origin = pair(&[0.0, 3.0], &[0.0, 0.0]);
    assert_eq!(intensity(&g, &origin, 0).unwrap(), 0.0);
    let off = pair(&[1.0, 0.0], &[1.0, 0.0]);
    assert!(matches!(intensity(&g, &off, 0), Err(Error::OffBoundary { site: 0, .. })));
}

#[test]
fn jumps_rescale_and_swap() {
    let mut s = pair(&[2.0, 0.0], &[0.0, 1.0]);
    apply_jump(&mut s, 0, BoundaryPoint::new(Axis::U, 1.5));
    assert_eq!((s.u[0], s.v[0]), (3.0, 0.0));
    apply_jump(&mut s, 0, BoundaryPoint::new(Axis::V, 0.5));
    assert_eq!((s.u[0], s.v[0]), (0.0, 1.5));
    apply_jump(&mut s, 1, BoundaryPoint::new(Axis::U, 2.0));
    assert_eq!((s.u[1], s.v[1]), (0.0, 2.0));
    apply_jump(&mut s, 1, BoundaryPoint::new(Axis::V, 3.0));
    assert_eq!((s.u[1], s.v[1]), (6.0, 0.0));
}

#[test]
fn trotter_stays_on_boundary_and_tracks_heat_flow_in_mean() {
    let g = SiteGraph64::dumbbell(1.0).unwrap();
    let initial = pair(&[1.0, 0.0], &[0.0, 1.0]);
    let mut scheme = Trotter::new(&g, ExitLaw::new(0.0).unwrap(), 0.05).unwrap();
    let mut u0 = MeanVar::default();
    for i in 0..20_000 {
        let mut rng = stream(8, "trotter-mean", i);
        let traj = trotter_simulate(&mut scheme, 0.5, &initial, &[0.25, 0.5], &mut rng).unwrap();
        for s in &traj.states {
            assert!(s.on_boundary());
        }
        u0.push(traj.states[1].u[0]);
    }
    // The exit point has the start as its mean, so the mean follows P_t.
    let want = 0.5 * (1.0 + (-1.0f64).exp());
    assert!((u0.mean - want).abs() < 4.0 * u0.se(), "{} vs {want} (se {})", u0.mean, u0.se());
}

#[test]
fn trotter_at_minus_one_keeps_unit_magnitudes() {
    let g = SiteGraph64::torus(1, 6).unwrap();
    let initial = pair(&[1.0, 1.0, 1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    let mut scheme = Trotter::new(&g, ExitLaw::new(-1.0).unwrap(), 0.01).unwrap();
    let mut rng = stream(9, "trotter-voter", 0);
    let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
    let traj = trotter_simulate(&mut scheme, 2.0, &initial, &times, &mut rng).unwrap();
    for s in &traj.states {
        for k in 0..6 {
            assert!((s.magnitude(k) - 1.0).abs() < 1e-12, "{}", s.magnitude(k));
        }
    }
}

#[test]
fn simulators_reject_states_off_the_boundary() {
    let g = SiteGraph64::dumbbell(1.0).unwrap();
    let off = pair(&[1.0, 0.0], &[1.0, 1.0]);
    let mut scheme = Trotter::new(&g, ExitLaw::new(0.0).unwrap(), 0.1).unwrap();
    let mut rng = stream(1, "off", 0);
    assert!(trotter_simulate(&mut scheme, 1.0, &off, &[], &mut rng).is_err());
    let law = JumpLaw::Truncated(TruncatedJumpMeasure::new(0.0, 0.1).unwrap());
    assert!(pdmp_simulate(&g, &law, 1.0, &off, &[], &PdmpConfig::default(), &mut rng, None).is_err());
}

#[test]
fn pdmp_stays_on_boundary_and_conserves_mass_in_mean() {
    let g = SiteGraph64::dumbbell(1.0).unwrap();
    let initial = pair(&[1.0, 0.0], &[0.0, 1.0]);
    let law = JumpLaw::Truncated(TruncatedJumpMeasure::new(0.0, 0.1).unwrap());
    let mut total_u = MeanVar::default();
    for i in 0..4_000 {
        let mut rng = stream(12, "pdmp-mass", i);
        let mut off_e = 0usize;
        let mut check = |e: PdmpEvent<'_>| {
            let s = match e {
                PdmpEvent::Flow { state, .. } | PdmpEvent::Jump { state, .. } => state,
            };
            off_e += usize::from(!s.on_boundary());
        };
        let run = pdmp_simulate(&g, &law, 0.5, &initial, &[0.5], &PdmpConfig::default(), &mut rng, Some(&mut check))
            .unwrap();
        assert_eq!(off_e, 0);
        total_u.push(run.trajectory.states[0].total_u());
    }
    assert!((total_u.mean - 1.0).abs() < 4.0 * total_u.se(), "{} (se {})", total_u.mean, total_u.se());
}

#[test]
fn martingale_functional_vanishes_on_a_stationary_path() {
    let g = SiteGraph64::torus(1, 4).unwrap();
    let x = pair(&[0.7; 4], &[0.0; 4]);
    let path = Path {
        initial: x.clone(),
        segments: vec![PathSegment { dt: 0.1, states: vec![x.clone(); 6] }],
        terminal: x,
    };
    let y = TestPair::new(pair(&[0.5, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.5, 0.0])).unwrap();
    let m = martingale_functional(&g, &path, &y, 0.3).unwrap();
    assert!(m.norm() < 1e-15);
    assert!(TestPair::new(pair(&[0.5, 0.0, 0.0, 0.0], &[0.5, 0.0, 0.0, 0.0])).is_err());
}
