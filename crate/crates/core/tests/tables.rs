use gbi_core::{Assignment, Cmd, EventId, TableError};
use gbi_testkit::{brute_prob, ev, random_cmd, rng};
use proptest::prelude::*;

fn events(n: usize) -> Vec<EventId> {
    (0..n).map(|i| EventId::new(format!("X{i}"))).collect()
}

proptest! {
    #[test]
    fn marginalization_chains(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed);
        let evs = events(n);
        let cmd = random_cmd(&mut r, &evs, 0.2);
        let mid: Vec<EventId> = evs.iter().rev().take(n - 1).cloned().collect();
        let small: Vec<EventId> = mid.iter().take(n / 2).cloned().collect();
        let direct = cmd.marginal(&small).unwrap();
        let chained = cmd.marginal(&mid).unwrap().marginal(&small).unwrap();
        prop_assert!(direct.max_abs_diff(&chained).unwrap() <= 1e-12);
        let total: f64 = direct.cells().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn marginal_cells_match_brute_sums(seed in any::<u64>(), n in 1usize..=5) {
        let mut r = rng(seed);
        let evs = events(n);
        let cmd = random_cmd(&mut r, &evs, 0.1);
        for e in &evs {
            let p = cmd.prob_true(e).unwrap();
            prop_assert!((p - brute_prob(&evs, cmd.cells(), &[(e, true)])).abs() <= 1e-12);
        }
    }

    #[test]
    fn conditional_times_condition_is_joint(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let evs = events(n);
        let cmd = random_cmd(&mut r, &evs, 0.0);
        let target = Assignment::single(evs[0].clone(), true);
        let given = Assignment::single(evs[n - 1].clone(), false);
        let joint = cmd.prob(&target.conjoin(&given).unwrap()).unwrap();
        let cond = cmd.conditional(&target, &given).unwrap();
        prop_assert!((cond * cmd.prob(&given).unwrap() - joint).abs() <= 1e-12);
    }

    #[test]
    fn complement_preserves_table_mass(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let evs = events(n);
        let cmd = random_cmd(&mut r, &evs, 0.0);
        let flipped = cmd.complement_event(&evs[0]).unwrap();
        let p = cmd.prob_true(&evs[0]).unwrap();
        prop_assert!((flipped.prob_true(&evs[0]).unwrap() - (1.0 - p)).abs() <= 1e-12);
        prop_assert_eq!(flipped.complement_event(&evs[0]).unwrap(), cmd);
    }
}

#[test]
fn rejects_malformed_tables() {
    assert!(matches!(Cmd::new(vec![], vec![1.0]), Err(TableError::NoEvents)));
    assert!(matches!(
        Cmd::new(ev(&["A"]), vec![0.5]),
        Err(TableError::WrongLength { expected: 2, actual: 1 })
    ));
    assert!(matches!(
        Cmd::new(ev(&["A"]), vec![1.2, -0.2]),
        Err(TableError::NegativeCell { index: 1, .. })
    ));
    assert!(matches!(Cmd::new(ev(&["A"]), vec![0.6, 0.6]), Err(TableError::NotNormalized { .. })));
    assert!(matches!(Cmd::new(ev(&["A", "A"]), vec![0.25; 4]), Err(TableError::DuplicateEvent(_))));
    assert!(matches!(Cmd::uniform(events(17)), Err(TableError::TooManyEvents(17))));
}

#[test]
fn tiny_drift_is_renormalized() {
    let c = Cmd::new(ev(&["A"]), vec![0.3, 0.7 + 5e-10]).unwrap();
    let total: f64 = c.cells().iter().sum();
    assert!((total - 1.0).abs() <= 1e-15);
}

#[test]
fn zero_condition_is_reported() {
    let c = Cmd::new(ev(&["A", "B"]), vec![0.5, 0.0, 0.5, 0.0]).unwrap();
    assert!(matches!(
        c.conditional(&Assignment::single("B", true), &Assignment::single("A", true)),
        Err(TableError::ZeroCondition)
    ));
}
