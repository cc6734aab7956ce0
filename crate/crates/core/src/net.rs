//! Local event groups and the networks they form.
//!
//! Two LEGs are adjacent when they share at least one event. A valid net has a
//! connected, acyclic adjacency graph, and every adjacent pair agrees on the
//! joint marginal over its full shared event set.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::event::EventId;
use crate::table::{Cmd, TableError};

/// Default tolerance for cross-LEG marginal agreement.
pub const CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("knowledge base could not be parsed: {0}")]
    Parse(String),
    #[error("net has no LEGs")]
    NoLegs,
    #[error("event names must be non-empty")]
    EmptyEventName,
    #[error("event {0} is declared more than once")]
    DuplicateEvent(EventId),
    #[error("LEG id {0} is declared more than once")]
    DuplicateLeg(String),
    #[error("unknown LEG {0}")]
    UnknownLeg(String),
    #[error("LEG {leg} lists event {event}, which is not in the vocabulary")]
    UnknownEventInLeg { leg: String, event: EventId },
    #[error("LEG {leg}: {source}")]
    Table {
        leg: String,
        #[source]
        source: TableError,
    },
    #[error("LEG adjacency contains a cycle ({edges} shared-event links among {legs} LEGs)")]
    CyclicLegGraph { legs: usize, edges: usize },
    #[error("LEG net is disconnected: {0} cannot be reached from the first LEG")]
    DisconnectedNet(String),
    #[error("LEGs {leg_a} and {leg_b} disagree on {shared:?} by {discrepancy:e}")]
    InconsistentMarginals {
        leg_a: String,
        leg_b: String,
        shared: Vec<EventId>,
        discrepancy: f64,
    },
}

impl NetError {
    pub fn code(&self) -> &'static str {
        match self {
            NetError::Parse(_) => "ParseError",
            NetError::NoLegs => "NoLegs",
            NetError::EmptyEventName => "EmptyEventName",
            NetError::DuplicateEvent(_) => "DuplicateEvent",
            NetError::DuplicateLeg(_) => "DuplicateLeg",
            NetError::UnknownLeg(_) => "UnknownLeg",
            NetError::UnknownEventInLeg { .. } => "UnknownEventInLeg",
            NetError::Table { source, .. } => source.code(),
            NetError::CyclicLegGraph { .. } => "CyclicLegGraph",
            NetError::DisconnectedNet(_) => "DisconnectedNet",
            NetError::InconsistentMarginals { .. } => "InconsistentMarginals",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    pub id: String,
    pub cmd: Cmd,
}

impl Leg {
    pub fn new(id: impl Into<String>, cmd: Cmd) -> Self {
        Leg { id: id.into(), cmd }
    }

    pub fn events(&self) -> &[EventId] {
        self.cmd.events()
    }
}

/// One adjacent LEG pair in a [`ConsistencyReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub leg_a: String,
    pub leg_b: String,
    pub shared: Vec<EventId>,
    pub discrepancy: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub tolerance: f64,
    pub pairs: Vec<PairReport>,
}

impl ConsistencyReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.pairs.iter().map(|p| p.discrepancy).fold(0.0, f64::max)
    }

    pub fn is_consistent(&self) -> bool {
        self.pairs.iter().all(|p| p.consistent)
    }

    pub fn violations(&self) -> impl Iterator<Item = &PairReport> {
        self.pairs.iter().filter(|p| !p.consistent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegNet {
    events: Vec<EventId>,
    legs: Vec<Leg>,
    index: HashMap<String, usize>,
    /// Neighbors of each LEG, ascending by declaration order.
    adjacency: Vec<Vec<usize>>,
}

impl LegNet {
    /// Fully validated net: structure plus pairwise consistency within
    /// [`CONSISTENCY_TOL`].
    pub fn new(events: Vec<EventId>, legs: Vec<Leg>) -> Result<Self, NetError> {
        let net = Self::new_unchecked_consistency(events, legs)?;
        let report = net.check_consistency(CONSISTENCY_TOL);
        if let Some(bad) = report
            .pairs
            .into_iter()
            .filter(|p| !p.consistent)
            .max_by(|a, b| a.discrepancy.total_cmp(&b.discrepancy))
        {
            return Err(NetError::InconsistentMarginals {
                leg_a: bad.leg_a,
                leg_b: bad.leg_b,
                shared: bad.shared,
                discrepancy: bad.discrepancy,
            });
        }
        Ok(net)
    }

    /// Validates vocabulary, ids and tree structure but not cross-LEG
    /// agreement. Used for recorded snapshots that are taken as given.
    pub fn new_unchecked_consistency(
        events: Vec<EventId>,
        legs: Vec<Leg>,
    ) -> Result<Self, NetError> {
        if legs.is_empty() {
            return Err(NetError::NoLegs);
        }
        for (i, e) in events.iter().enumerate() {
            if e.as_str().is_empty() {
                return Err(NetError::EmptyEventName);
            }
            if events[..i].contains(e) {
                return Err(NetError::DuplicateEvent(e.clone()));
            }
        }
        let mut index = HashMap::with_capacity(legs.len());
        for (i, leg) in legs.iter().enumerate() {
            if index.insert(leg.id.clone(), i).is_some() {
                return Err(NetError::DuplicateLeg(leg.id.clone()));
            }
            if let Some(event) = leg.events().iter().find(|e| !events.contains(e)) {
                return Err(NetError::UnknownEventInLeg {
                    leg: leg.id.clone(),
                    event: event.clone(),
                });
            }
        }

        let mut adjacency = vec![Vec::new(); legs.len()];
        let mut edges = 0;
        for i in 0..legs.len() {
            for j in (i + 1)..legs.len() {
                if legs[i].events().iter().any(|e| legs[j].cmd.contains(e)) {
                    adjacency[i].push(j);
                    adjacency[j].push(i);
                    edges += 1;
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        let mut seen = vec![false; legs.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(NetError::DisconnectedNet(legs[missing].id.clone()));
        }
        // Connected with n - 1 edges is exactly a tree.
        if edges != legs.len() - 1 {
            return Err(NetError::CyclicLegGraph {
                legs: legs.len(),
                edges,
            });
        }

        Ok(LegNet {
            events,
            legs,
            index,
            adjacency,
        })
    }

    pub fn events(&self) -> &[EventId] {
        &self.events
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn leg_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn leg(&self, id: &str) -> Option<&Leg> {
        self.leg_index(id).map(|i| &self.legs[i])
    }

    pub fn require_leg(&self, id: &str) -> Result<&Leg, NetError> {
        self.leg(id).ok_or_else(|| NetError::UnknownLeg(id.to_owned()))
    }

    /// Neighbor indices of LEG `i`, in declaration order.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// LEG indices containing `event`, in declaration order.
    pub fn legs_containing<'a>(&'a self, event: &'a EventId) -> impl Iterator<Item = usize> + 'a {
        self.legs
            .iter()
            .enumerate()
            .filter(move |(_, l)| l.cmd.contains(event))
            .map(|(i, _)| i)
    }

    /// Events two LEGs share, in the order of LEG `a`.
    pub fn shared_events(&self, a: usize, b: usize) -> Vec<EventId> {
        self.legs[a]
            .events()
            .iter()
            .filter(|e| self.legs[b].cmd.contains(e))
            .cloned()
            .collect()
    }

    /// Current marginal `P(event = true)`, read from the first LEG that
    /// contains it.
    pub fn event_probability(&self, event: &EventId) -> Option<f64> {
        let i = self.legs_containing(event).next()?;
        self.legs[i].cmd.prob_true(event).ok()
    }

    /// Replaces the table of LEG `i`. The event list must not change.
    pub(crate) fn set_cmd(&mut self, i: usize, cmd: Cmd) {
        debug_assert_eq!(self.legs[i].events(), cmd.events());
        self.legs[i].cmd = cmd;
    }

    /// Compares every adjacent pair on the joint marginal over its shared
    /// event set.
    pub fn check_consistency(&self, tol: f64) -> ConsistencyReport {
        let mut pairs = Vec::new();
        for a in 0..self.legs.len() {
            for &b in self.adjacency[a].iter().filter(|&&b| b > a) {
                let shared = self.shared_events(a, b);
                let discrepancy = match (
                    self.legs[a].cmd.marginal(&shared),
                    self.legs[b].cmd.marginal(&shared),
                ) {
                    (Ok(ma), Ok(mb)) => ma.max_abs_diff(&mb).unwrap_or(f64::INFINITY),
                    _ => f64::INFINITY,
                };
                pairs.push(PairReport {
                    leg_a: self.legs[a].id.clone(),
                    leg_b: self.legs[b].id.clone(),
                    shared,
                    discrepancy,
                    consistent: discrepancy <= tol,
                });
            }
        }
        ConsistencyReport {
            tolerance: tol,
            pairs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(names: &[&str]) -> Vec<EventId> {
        names.iter().map(|n| EventId::from(*n)).collect()
    }

    fn pair_leg(id: &str, a: &str, b: &str, pa: f64, pb: f64) -> Leg {
        // independent pair
        let cells = vec![
            (1.0 - pa) * (1.0 - pb),
            pa * (1.0 - pb),
            (1.0 - pa) * pb,
            pa * pb,
        ];
        Leg::new(id, Cmd::new(ev(&[a, b]), cells).unwrap())
    }

    #[test]
    fn two_leg_net_is_consistent() {
        let net = LegNet::new(
            ev(&["A", "B", "C"]),
            vec![
                pair_leg("L1", "A", "B", 0.3, 0.4),
                pair_leg("L2", "B", "C", 0.4, 0.7),
            ],
        )
        .unwrap();
        let report = net.check_consistency(1e-6);
        assert_eq!(report.pairs.len(), 1);
        assert_eq!(report.pairs[0].shared, ev(&["B"]));
        assert!(report.max_discrepancy() < 1e-15);
    }

    #[test]
    fn perturbed_marginal_is_flagged() {
        let legs = vec![
            pair_leg("L1", "A", "B", 0.3, 0.4),
            pair_leg("L2", "B", "C", 0.41, 0.7),
        ];
        let net = LegNet::new_unchecked_consistency(ev(&["A", "B", "C"]), legs.clone()).unwrap();
        let report = net.check_consistency(1e-6);
        assert!((report.max_discrepancy() - 0.01).abs() < 1e-12);
        assert!(!report.is_consistent());
        assert!(matches!(
            LegNet::new(ev(&["A", "B", "C"]), legs),
            Err(NetError::InconsistentMarginals { .. })
        ));
    }

    #[test]
    fn triangle_is_cyclic() {
        let legs = vec![
            pair_leg("L1", "A", "B", 0.5, 0.5),
            pair_leg("L2", "B", "C", 0.5, 0.5),
            pair_leg("L3", "C", "A", 0.5, 0.5),
        ];
        assert_eq!(
            LegNet::new(ev(&["A", "B", "C"]), legs),
            Err(NetError::CyclicLegGraph { legs: 3, edges: 3 })
        );
    }

    #[test]
    fn structural_errors() {
        assert_eq!(
            LegNet::new(ev(&["A", "B"]), vec![]),
            Err(NetError::NoLegs)
        );
        assert!(matches!(
            LegNet::new(ev(&["A"]), vec![pair_leg("L1", "A", "Z", 0.5, 0.5)]),
            Err(NetError::UnknownEventInLeg { .. })
        ));
        assert!(matches!(
            LegNet::new(
                ev(&["A", "B", "C", "D"]),
                vec![
                    pair_leg("L1", "A", "B", 0.5, 0.5),
                    pair_leg("L2", "C", "D", 0.5, 0.5)
                ]
            ),
            Err(NetError::DisconnectedNet(id)) if id == "L2"
        ));
        assert!(matches!(
            LegNet::new(
                ev(&["A", "B", "C"]),
                vec![
                    pair_leg("L1", "A", "B", 0.5, 0.5),
                    pair_leg("L1", "B", "C", 0.5, 0.5)
                ]
            ),
            Err(NetError::DuplicateLeg(_))
        ));
    }

    #[test]
    fn multi_event_overlap_uses_joint_marginal() {
        // Both LEGs agree on P(A) and P(B) separately but not on their joint.
        let l1 = Leg::new(
            "L1",
            Cmd::new(ev(&["A", "B"]), vec![0.25, 0.25, 0.25, 0.25]).unwrap(),
        );
        let l2 = Leg::new(
            "L2",
            Cmd::new(
                ev(&["A", "B", "C"]),
                vec![0.25, 0.0, 0.0, 0.25, 0.25, 0.0, 0.0, 0.25],
            )
            .unwrap(),
        );
        let net = LegNet::new_unchecked_consistency(ev(&["A", "B", "C"]), vec![l1, l2]).unwrap();
        let report = net.check_consistency(1e-6);
        assert_eq!(report.pairs[0].shared, ev(&["A", "B"]));
        assert!((report.max_discrepancy() - 0.25).abs() < 1e-12);
    }
}
