//! Consultation sessions: evidence updates, propagation through the LEG net
//! and the update history.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::event::EventId;
use crate::explain::{CausalGraph, CausalLink, ExplainError};
use crate::net::LegNet;
use crate::table::Cmd;
use crate::update::{event_target, ipf_project, IpfOptions, UpdateError};

/// Per-cell marginal difference below which a neighbor is left alone and
/// propagation stops along that branch.
pub const CHANGE_TOL: f64 = 1e-9;

/// Tolerance for matching recorded snapshots against the prevailing tables.
const CONTINUITY_TOL: f64 = 1e-9;

/// Target probabilities imposed simultaneously on events of one LEG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSpec {
    #[serde(rename = "leg")]
    pub source_leg: String,
    pub constraints: BTreeMap<EventId, f64>,
}

impl EvidenceSpec {
    pub fn new(source_leg: impl Into<String>) -> Self {
        EvidenceSpec {
            source_leg: source_leg.into(),
            constraints: BTreeMap::new(),
        }
    }

    pub fn with(mut self, event: impl Into<EventId>, p: f64) -> Self {
        self.constraints.insert(event.into(), p);
        self
    }

    /// Whether `event` was directly constrained by this evidence.
    pub fn target_of(&self, event: &EventId) -> Option<f64> {
        self.constraints.get(event).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TouchedLeg {
    pub leg: String,
    pub before: Cmd,
    pub after: Cmd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateRecord {
    /// 1-based position in the session history.
    pub index: usize,
    pub evidence: EvidenceSpec,
    /// LEGs whose table changed, in propagation order (the source LEG first).
    pub touched: Vec<TouchedLeg>,
    /// LEGs examined by the propagation wave, in visiting order.
    pub propagation_order: Vec<String>,
}

impl UpdateRecord {
    pub fn touched_leg(&self, leg: &str) -> Option<&TouchedLeg> {
        self.touched.iter().find(|t| t.leg == leg)
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    initial: LegNet,
    net: LegNet,
    history: Vec<UpdateRecord>,
    causal: CausalGraph,
}

impl Session {
    pub fn new(net: LegNet) -> Self {
        Session {
            initial: net.clone(),
            net,
            history: Vec::new(),
            causal: CausalGraph::default(),
        }
    }

    /// Session over `net` with validated causal links.
    pub fn with_links(net: LegNet, links: Vec<CausalLink>) -> Result<Self, ExplainError> {
        let mut session = Session::new(net);
        session.set_causal_links(links)?;
        Ok(session)
    }

    /// Rebuilds a session from recorded snapshots without re-running
    /// propagation. Each record's `before` tables must match the tables
    /// prevailing at that point; `after` tables are taken as given.
    pub fn from_recorded(initial: LegNet, history: Vec<UpdateRecord>) -> Result<Self, UpdateError> {
        let mut net = initial.clone();
        for (pos, record) in history.iter().enumerate() {
            if record.index != pos + 1 {
                return Err(UpdateError::InvalidHistory(format!(
                    "record at position {} has index {}",
                    pos + 1,
                    record.index
                )));
            }
            validate_evidence(&net, &record.evidence)?;
            for t in &record.touched {
                let i = net
                    .leg_index(&t.leg)
                    .ok_or_else(|| UpdateError::UnknownLeg(t.leg.clone()))?;
                let prevailing = &net.legs()[i].cmd;
                match prevailing.max_abs_diff(&t.before) {
                    Some(d) if d <= CONTINUITY_TOL => {}
                    _ => {
                        return Err(UpdateError::InvalidHistory(format!(
                            "update {}: recorded table for {} before the update does not match",
                            record.index, t.leg
                        )))
                    }
                }
                if t.after.events() != prevailing.events() {
                    return Err(UpdateError::InvalidHistory(format!(
                        "update {}: table for {} changes its event list",
                        record.index, t.leg
                    )));
                }
                net.set_cmd(i, t.after.clone());
            }
        }
        Ok(Session {
            initial,
            net,
            history,
            causal: CausalGraph::default(),
        })
    }

    /// Applies each evidence spec in order to a fresh session over `initial`.
    pub fn replay<'a>(
        initial: LegNet,
        evidence: impl IntoIterator<Item = &'a EvidenceSpec>,
    ) -> Result<Self, UpdateError> {
        let mut session = Session::new(initial);
        for spec in evidence {
            session.apply_evidence(spec)?;
        }
        Ok(session)
    }

    pub fn net(&self) -> &LegNet {
        &self.net
    }

    pub fn initial_net(&self) -> &LegNet {
        &self.initial
    }

    pub fn history(&self) -> &[UpdateRecord] {
        &self.history
    }

    pub fn causal(&self) -> &CausalGraph {
        &self.causal
    }

    /// Replaces the causal structure after validating it against the net.
    pub fn set_causal_links(&mut self, links: Vec<CausalLink>) -> Result<&CausalGraph, ExplainError> {
        self.causal = CausalGraph::new(&self.net, links)?;
        Ok(&self.causal)
    }

    pub fn record(&self, index: usize) -> Result<&UpdateRecord, UpdateError> {
        index
            .checked_sub(1)
            .and_then(|i| self.history.get(i))
            .ok_or(UpdateError::UnknownUpdate(index))
    }

    /// Projects the source LEG onto the evidence and propagates the change
    /// breadth-first over LEG adjacency. On error the session is unchanged.
    pub fn apply_evidence(&mut self, evidence: &EvidenceSpec) -> Result<&UpdateRecord, UpdateError> {
        let src = validate_evidence(&self.net, evidence)?;
        let targets = evidence
            .constraints
            .iter()
            .map(|(e, &p)| event_target(e, p))
            .collect::<Result<Vec<_>, _>>()?;
        let opts = IpfOptions::default();

        let mut net = self.net.clone();
        let before = net.legs()[src].cmd.clone();
        let after = ipf_project(&before, &targets, opts)?;
        net.set_cmd(src, after.clone());

        let mut touched = vec![TouchedLeg {
            leg: evidence.source_leg.clone(),
            before,
            after,
        }];
        let mut order = vec![evidence.source_leg.clone()];
        let mut visited = vec![false; net.legs().len()];
        visited[src] = true;
        let mut queue = VecDeque::from([src]);

        while let Some(u) = queue.pop_front() {
            for &v in net.neighbors(u).to_vec().iter() {
                if visited[v] {
                    continue;
                }
                visited[v] = true;
                let id = net.legs()[v].id.clone();
                order.push(id.clone());

                let shared = net.shared_events(v, u);
                let target = net.legs()[u].cmd.marginal(&shared)?;
                let current = net.legs()[v].cmd.marginal(&shared)?;
                let diff = current.max_abs_diff(&target).unwrap_or(f64::INFINITY);
                if diff <= CHANGE_TOL {
                    continue;
                }
                let before = net.legs()[v].cmd.clone();
                let after = ipf_project(&before, std::slice::from_ref(&target), opts)?;
                net.set_cmd(v, after.clone());
                touched.push(TouchedLeg {
                    leg: id,
                    before,
                    after,
                });
                queue.push_back(v);
            }
        }

        self.net = net;
        self.history.push(UpdateRecord {
            index: self.history.len() + 1,
            evidence: evidence.clone(),
            touched,
            propagation_order: order,
        });
        Ok(self.history.last().expect("just pushed"))
    }

    /// Restores the loaded net and clears the history. Causal links are kept.
    pub fn initialize(&mut self) {
        self.net = self.initial.clone();
        self.history.clear();
    }

    /// Table of `leg` immediately before and after update `index`. A LEG the
    /// update did not touch gets the prevailing table twice.
    pub fn snapshots(&self, leg: &str, index: usize) -> Result<(&Cmd, &Cmd), UpdateError> {
        let initial = &self
            .initial
            .leg(leg)
            .ok_or_else(|| UpdateError::UnknownLeg(leg.to_owned()))?
            .cmd;
        let record = self.record(index)?;
        let prevailing = self.history[..index - 1]
            .iter()
            .rev()
            .find_map(|r| r.touched_leg(leg))
            .map_or(initial, |t| &t.after);
        Ok(match record.touched_leg(leg) {
            Some(t) => (&t.before, &t.after),
            None => (prevailing, prevailing),
        })
    }
}

/// Checks an evidence spec against `net` and returns the source LEG index.
fn validate_evidence(net: &LegNet, evidence: &EvidenceSpec) -> Result<usize, UpdateError> {
    let src = net
        .leg_index(&evidence.source_leg)
        .ok_or_else(|| UpdateError::UnknownLeg(evidence.source_leg.clone()))?;
    if evidence.constraints.is_empty() {
        return Err(UpdateError::NoConstraints);
    }
    let cmd = &net.legs()[src].cmd;
    for (event, &p) in &evidence.constraints {
        if !cmd.contains(event) {
            return Err(UpdateError::UnknownEvent {
                leg: evidence.source_leg.clone(),
                event: event.clone(),
            });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(UpdateError::TargetOutOfRange {
                event: event.clone(),
                value: p,
            });
        }
    }
    Ok(src)
}
