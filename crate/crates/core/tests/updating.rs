use gbi_core::update::{ipf_project, jeffrey_update, kl_divergence};
use gbi_core::{Cmd, EventId, EvidenceSpec, IpfOptions, Session, UpdateError};
use gbi_testkit::{
    brute_kl, ev, fixture_session, kl_grid_min, markov_joint, random_cmd, random_evidence, random_tree_net, rng,
    TreeShape, ACCIDENT,
};
use proptest::prelude::*;
use rand::Rng;

fn events(n: usize) -> Vec<EventId> {
    (0..n).map(|i| EventId::new(format!("X{i}"))).collect()
}

fn single_target(e: &EventId, p: f64) -> Cmd {
    Cmd::new(vec![e.clone()], vec![1.0 - p, p]).unwrap()
}

fn small_shape() -> TreeShape {
    TreeShape {
        min_legs: 2,
        max_legs: 5,
        max_leg_events: 3,
        max_events: 8,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_event_ipf_is_jeffrey(seed in any::<u64>(), n in 1usize..=5, t in 0.01f64..0.99) {
        let mut r = rng(seed);
        let evs = events(n);
        let cmd = random_cmd(&mut r, &evs, 0.0);
        let e = &evs[r.random_range(0..n)];
        let j = jeffrey_update(&cmd, e, t).unwrap();
        let i = ipf_project(&cmd, &[single_target(e, t)], IpfOptions::default()).unwrap();
        prop_assert!(i.max_abs_diff(&j).unwrap() <= 1e-12);
        prop_assert!((j.prob_true(e).unwrap() - t).abs() <= 1e-12);
    }

    #[test]
    fn jeffrey_keeps_conditionals(seed in any::<u64>(), t in 0.01f64..0.99) {
        let mut r = rng(seed);
        let evs = events(3);
        let cmd = random_cmd(&mut r, &evs, 0.0);
        let after = jeffrey_update(&cmd, &evs[0], t).unwrap();
        for value in [false, true] {
            let given = gbi_core::Assignment::single(evs[0].clone(), value);
            let target = gbi_core::Assignment::single(evs[2].clone(), true);
            let b = cmd.conditional(&target, &given).unwrap();
            let a = after.conditional(&target, &given).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_cells_stay_zero(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let evs = events(n);
        let cmd = random_cmd(&mut r, &evs, 0.3);
        let targets: Vec<Cmd> = evs[..2]
            .iter()
            .filter_map(|e| {
                let p = cmd.prob_true(e).unwrap();
                // stay strictly inside the support
                (p > 1e-6 && p < 1.0 - 1e-6).then(|| single_target(e, (p + 0.5) / 2.0))
            })
            .collect();
        prop_assume!(!targets.is_empty());
        match ipf_project(&cmd, &targets, IpfOptions::default()) {
            Ok(out) => {
                for (a, b) in cmd.cells().iter().zip(out.cells()) {
                    if *a == 0.0 {
                        prop_assert_eq!(*b, 0.0);
                    }
                }
                for t in &targets {
                    let e = &t.events()[0];
                    prop_assert!((out.prob_true(e).unwrap() - t.cells()[1]).abs() <= 1e-8);
                }
            }
            Err(UpdateError::ImpossibleEvidence(_)) | Err(UpdateError::NoConvergence { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>(), t in 0.05f64..0.95) {
        let mut r = rng(seed);
        let evs = events(3);
        let cmd = random_cmd(&mut r, &evs, 0.0);
        let targets = [single_target(&evs[0], t), single_target(&evs[1], 1.0 - t)];
        let once = ipf_project(&cmd, &targets, IpfOptions::default()).unwrap();
        let twice = ipf_project(&once, &targets, IpfOptions::default()).unwrap();
        prop_assert!(once.max_abs_diff(&twice).unwrap() <= 1e-9);
    }

    #[test]
    fn engine_beats_kl_grid(seed in any::<u64>(), which in 0usize..2, t in 0.02f64..0.98) {
        let mut r = rng(seed);
        let evs = ev(&["A", "B"]);
        let prior = random_cmd(&mut r, &evs, 0.0);
        let post = jeffrey_update(&prior, &evs[which], t).unwrap();
        let kl = brute_kl(post.cells(), prior.cells());
        prop_assert!((kl - kl_divergence(&post, &prior)).abs() <= 1e-12);
        prop_assert!(kl <= kl_grid_min(&prior, which, t, 60) + 1e-9);
    }

    #[test]
    fn propagation_restores_consistency(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (net, _) = random_tree_net(&mut r, small_shape());
        let mut s = Session::new(net);
        for _ in 0..3 {
            let spec = random_evidence(&mut r, s.net());
            s.apply_evidence(&spec).unwrap();
            prop_assert!(s.net().check_consistency(1e-6).is_consistent());
        }
    }

    #[test]
    fn propagation_matches_global_update(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (net, _) = random_tree_net(&mut r, small_shape());
        let joint = markov_joint(&net);
        let spec = random_evidence(&mut r, &net);
        let targets: Vec<(EventId, f64)> = spec.constraints.iter().map(|(e, &p)| (e.clone(), p)).collect();
        let posterior = joint.fit(&targets, 200);
        let mut s = Session::new(net);
        s.apply_evidence(&spec).unwrap();
        for leg in s.net().legs() {
            let oracle = posterior.marginal(leg.events());
            prop_assert!(leg.cmd.max_abs_diff(&oracle).unwrap() <= 1e-7, "{} differs", leg.id);
        }
    }

    #[test]
    fn propagation_is_deterministic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (net, _) = random_tree_net(&mut r, small_shape());
        let specs: Vec<EvidenceSpec> = (0..3).map(|_| random_evidence(&mut r, &net)).collect();
        let a = Session::replay(net.clone(), &specs).unwrap();
        let b = Session::replay(net, &specs).unwrap();
        prop_assert_eq!(a.net(), b.net());
        prop_assert_eq!(a.history(), b.history());
    }

    #[test]
    fn snapshots_are_continuous(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (net, _) = random_tree_net(&mut r, small_shape());
        let mut s = Session::new(net);
        let n = 4;
        for _ in 0..n {
            let spec = random_evidence(&mut r, s.net());
            s.apply_evidence(&spec).unwrap();
        }
        for leg in s.net().legs() {
            let (first, _) = s.snapshots(&leg.id, 1).unwrap();
            prop_assert_eq!(first, &s.initial_net().leg(&leg.id).unwrap().cmd);
            for k in 1..n {
                let (_, after) = s.snapshots(&leg.id, k).unwrap();
                let (before, _) = s.snapshots(&leg.id, k + 1).unwrap();
                prop_assert_eq!(after, before);
            }
            let (_, last) = s.snapshots(&leg.id, n).unwrap();
            prop_assert_eq!(last, &leg.cmd);
        }
        // recorded history rebuilds the same session
        let rebuilt = Session::from_recorded(s.initial_net().clone(), s.history().to_vec()).unwrap();
        prop_assert_eq!(rebuilt.net(), s.net());
    }
}

#[test]
fn accident_propagation_is_breadth_first() {
    let mut s = fixture_session(ACCIDENT);
    let rec = s
        .apply_evidence(&EvidenceSpec::new("DRUNK-LEG").with("TWO-DRINKS", 1.0))
        .unwrap()
        .clone();
    let bfs = [
        "DRUNK-LEG",
        "DRIVER-IMPAIRED-LEG",
        "VISION-IMPAIRED-LEG",
        "DRIVER-GETS-A-TICKET-LEG",
        "CAR-IMPAIRED-LEG",
    ];
    let order: Vec<&str> = rec.propagation_order.iter().map(String::as_str).collect();
    let visited: Vec<&str> = bfs.iter().copied().filter(|l| order.contains(l)).collect();
    assert_eq!(order, visited);
    assert_eq!(&order[..2], &bfs[..2]);
    assert_eq!(rec.touched[0].leg, "DRUNK-LEG");
    assert!(rec.touched_leg("DRIVER-GETS-A-TICKET-LEG").is_some());
    let two = s.net().event_probability(&"TWO-DRINKS".into()).unwrap();
    assert!((two - 1.0).abs() < 1e-12);
    assert!(s.net().check_consistency(1e-6).is_consistent());
}

#[test]
fn simultaneous_observations_are_one_update() {
    let mut s = fixture_session(ACCIDENT);
    let rec = s
        .apply_evidence(
            &EvidenceSpec::new("CAR-IMPAIRED-LEG")
                .with("PASSED-INSPECTION", 1.0)
                .with("ILLEGAL-EQUIPMENT", 0.0),
        )
        .unwrap()
        .clone();
    assert_eq!(rec.index, 1);
    assert_eq!(s.history().len(), 1);
    let net = s.net();
    assert!((net.event_probability(&"PASSED-INSPECTION".into()).unwrap() - 1.0).abs() < 1e-9);
    assert!(net.event_probability(&"ILLEGAL-EQUIPMENT".into()).unwrap().abs() < 1e-9);
    assert!(net.check_consistency(1e-6).is_consistent());
}

#[test]
fn observing_current_marginals_changes_nothing_downstream() {
    let mut s = fixture_session(ACCIDENT);
    let p = s.net().event_probability(&"NIGHT-DRIVING".into()).unwrap();
    let before = s.net().clone();
    let rec = s
        .apply_evidence(&EvidenceSpec::new("VISION-IMPAIRED-LEG").with("NIGHT-DRIVING", p))
        .unwrap();
    assert!(rec.touched.len() <= 1);
    for (a, b) in s.net().legs().iter().zip(before.legs()) {
        assert!(a.cmd.max_abs_diff(&b.cmd).unwrap() <= 1e-12);
    }
}

#[test]
fn impossible_evidence_is_rejected_without_side_effects() {
    let mut s = fixture_session(ACCIDENT);
    s.apply_evidence(&EvidenceSpec::new("DRUNK-LEG").with("NO-DRINKS", 1.0))
        .unwrap();
    let before = s.net().clone();
    // drinks are mutually exclusive in the fixture
    let err = s
        .apply_evidence(&EvidenceSpec::new("DRUNK-LEG").with("TWO-DRINKS", 1.0))
        .unwrap_err();
    assert_eq!(err.code(), "ImpossibleEvidence");
    assert_eq!(s.net(), &before);
    assert_eq!(s.history().len(), 1);
}
