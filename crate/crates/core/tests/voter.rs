use symbranch::rng::stream;
use symbranch::stats::MeanVar;
use symbranch::voter::{flip_rate, gillespie_simulate, voter_vs_sbminf, OpinionField, VoterComparison};
use symbranch::{PairField, SiteGraph64};

// Exact values on the 8-cycle from the half-half start at t = 1: one-point
// functions from the heat kernel, two-point ones from the coalescing pair.
const ONE_POINT: [(usize, f64); 2] = [(3, 0.731_872_910_182_379_3), (4, 0.268_127_089_817_620_7)];
const TWO_POINT: [((usize, usize), f64); 3] =
    [((3, 4), 0.267_690_537_750_877_5), ((2, 5), 0.067_391_378_194_315_43), ((0, 7), 0.267_690_537_750_877_7)];

fn half_half() -> OpinionField {
    OpinionField::new(vec![1, 1, 1, 1, 0, 0, 0, 0]).unwrap()
}

#[test]
fn opinions_and_pairs() {
    assert!(OpinionField::new(vec![0, 2]).is_err());
    let eta = OpinionField::new(vec![1, 0, 1]).unwrap();
    let pair = eta.to_pair();
    assert_eq!(pair.u, vec![1.0, 0.0, 1.0]);
    assert_eq!(pair.v, vec![0.0, 1.0, 0.0]);
    assert_eq!(OpinionField::from_pair(&pair).unwrap(), eta);
    assert!(OpinionField::from_pair(&PairField::new(vec![2.0], vec![0.0]).unwrap()).is_err());
}

#[test]
fn flip_rates_count_disagreeing_neighbours() {
    let g = SiteGraph64::torus(1, 8).unwrap();
    let eta = half_half();
    let rates: Vec<f64> = (0..8).map(|k| flip_rate(&g, &eta, k)).collect();
    assert_eq!(rates, vec![0.5, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.5]);
}

#[test]
fn gillespie_matches_exact_correlations() {
    let g = SiteGraph64::torus(1, 8).unwrap();
    let eta = half_half();
    let mut one = [MeanVar::default(), MeanVar::default()];
    let mut two = [MeanVar::default(), MeanVar::default(), MeanVar::default()];
    for i in 0..40_000 {
        let mut rng = stream(17, "gillespie", i);
        let end = &gillespie_simulate(&g, &eta, &[1.0], &mut rng).unwrap()[0];
        for (m, (k, _)) in one.iter_mut().zip(ONE_POINT) {
            m.push(end.get(k) as f64);
        }
        for (m, ((a, b), _)) in two.iter_mut().zip(TWO_POINT) {
            m.push((end.get(a) * end.get(b)) as f64);
        }
    }
    for (m, (k, want)) in one.iter().zip(ONE_POINT) {
        assert!((m.mean - want).abs() < 4.0 * m.se(), "eta({k}): {} vs {want}", m.mean);
    }
    for (m, (ab, want)) in two.iter().zip(TWO_POINT) {
        assert!((m.mean - want).abs() < 4.0 * m.se(), "{ab:?}: {} vs {want}", m.mean);
    }
}

#[test]
fn gillespie_records_requested_times_in_order() {
    let g = SiteGraph64::torus(1, 8).unwrap();
    let mut rng = stream(1, "times", 0);
    let out = gillespie_simulate(&g, &half_half(), &[0.0, 2.0, 0.5], &mut rng).unwrap();
    assert_eq!(out.len(), 3);
    assert_eq!(out[0], half_half());
    assert!(gillespie_simulate(&g, &half_half(), &[-1.0], &mut rng).is_err());
}

#[test]
fn jump_process_at_minus_one_is_the_voter_model() {
    let g = SiteGraph64::torus(1, 8).unwrap();
    let cmp = VoterComparison { t: 1.0, one_point: vec![3], two_point: vec![(3, 4)], replicas: 2_000, trotter_eps: 0.01, seed: 5 };
    let rep = voter_vs_sbminf(&g, &half_half(), &cmp).unwrap();
    assert!(rep.magnitudes_preserved);
    assert!(rep.rates_match);
    assert_eq!(rep.estimators.len(), 3);
    for e in &rep.estimators {
        let m = e.two_point[0];
        assert!((m.mean - TWO_POINT[0].1).abs() < 4.0 * m.se, "{}: {}", e.name, m.mean);
    }
}
