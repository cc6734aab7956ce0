//! Explanations of why an event's probability changed.
//!
//! * Local: the single strongest explainer among the events sharing the
//!   hypothesis's LEG, for one update.
//! * Historical: the strongest local explainer for every update that moved
//!   the hypothesis, in update order.
//! * Global: a chain traced along causal links (backwards to causes, or
//!   forwards to symptoms), taking the strongest effect at every step and
//!   crossing into any LEG that contains the current event.
//!
//! Candidates are ranked by [`effect_of`](crate::effect::effect_of); only
//! strictly positive effects are offered.

mod causal;
mod render;

use std::collections::BTreeSet;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

pub use causal::{CausalGraph, CausalLink};
pub use render::{format_probability, render};

use crate::effect::{rank_explainers, EffectBreakdown, EffectError, EFFECT_EPSILON};
use crate::event::EventId;
use crate::session::Session;
use crate::update::UpdateError;

/// Posterior distance from 0 or 1 at which directly asserted evidence counts
/// as observed.
const OBSERVED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExplainError {
    #[error("unknown event {0}")]
    UnknownEvent(EventId),
    #[error("unknown LEG {0}")]
    UnknownLeg(String),
    #[error("{hypothesis} is not an event of {leg}")]
    HypothesisNotInLeg { hypothesis: EventId, leg: String },
    #[error("causal links form a cycle through {0:?}")]
    CyclicCausalGraph(Vec<EventId>),
    #[error("{from} and {to} do not share a LEG")]
    EndpointsShareNoLeg { from: EventId, to: EventId },
    #[error("global explanations require the causal or diagnostic filter")]
    FilterRequired,
    #[error("{0}")]
    FilterExhausted(String),
    #[error("unknown update {0}")]
    UnknownUpdate(usize),
    #[error("no evidence has been entered yet")]
    NoUpdates,
    #[error(transparent)]
    Effect(#[from] EffectError),
    #[error(transparent)]
    Update(#[from] UpdateError),
}

impl ExplainError {
    pub fn code(&self) -> &'static str {
        match self {
            ExplainError::UnknownEvent(_) => "UnknownEvent",
            ExplainError::UnknownLeg(_) => "UnknownLeg",
            ExplainError::HypothesisNotInLeg { .. } => "HypothesisNotInLeg",
            ExplainError::CyclicCausalGraph(_) => "CyclicCausalGraph",
            ExplainError::EndpointsShareNoLeg { .. } => "EndpointsShareNoLeg",
            ExplainError::FilterRequired => "FilterRequired",
            ExplainError::FilterExhausted(_) => "FilterExhausted",
            ExplainError::UnknownUpdate(_) => "UnknownUpdate",
            ExplainError::NoUpdates => "NoUpdates",
            ExplainError::Effect(e) => e.code(),
            ExplainError::Update(UpdateError::UnknownUpdate(_)) => "UnknownUpdate",
            ExplainError::Update(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    #[default]
    Local,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Filter {
    #[default]
    None,
    Causal,
    Diagnostic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detail {
    #[default]
    User,
    #[serde(alias = "ke")]
    KnowledgeEngineer,
}

/// Temporal focus of a query. Serialized as an update number, `"current"`
/// or `"all"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum When {
    Update(usize),
    /// The most recent update.
    #[default]
    Current,
    AllHistory,
}

impl fmt::Display for When {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            When::Update(k) => write!(f, "{k}"),
            When::Current => f.write_str("current"),
            When::AllHistory => f.write_str("all"),
        }
    }
}

impl std::str::FromStr for When {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "current" => Ok(When::Current),
            "all" => Ok(When::AllHistory),
            n => n
                .parse()
                .map(When::Update)
                .map_err(|_| format!("expected an update number, 'current' or 'all', got '{n}'")),
        }
    }
}

impl Serialize for When {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            When::Update(k) => s.serialize_u64(*k as u64),
            When::Current => s.serialize_str("current"),
            When::AllHistory => s.serialize_str("all"),
        }
    }
}

impl<'de> Deserialize<'de> for When {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct WhenVisitor;
        impl Visitor<'_> for WhenVisitor {
            type Value = When;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an update number, \"current\" or \"all\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<When, E> {
                Ok(When::Update(v as usize))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<When, E> {
                usize::try_from(v)
                    .map(When::Update)
                    .map_err(|_| E::custom("update numbers are positive"))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<When, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(WhenVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplanationQuery {
    pub hypothesis: EventId,
    pub leg: String,
    #[serde(default)]
    pub scope: Scope,
    #[serde(default)]
    pub filter: Filter,
    #[serde(default)]
    pub detail: Detail,
    #[serde(default)]
    pub when: When,
}

impl ExplanationQuery {
    pub fn new(hypothesis: impl Into<EventId>, leg: impl Into<String>) -> Self {
        ExplanationQuery {
            hypothesis: hypothesis.into(),
            leg: leg.into(),
            scope: Scope::Local,
            filter: Filter::None,
            detail: Detail::User,
            when: When::Current,
        }
    }

    pub fn scope(mut self, scope: Scope) -> Self {
        self.scope = scope;
        self
    }

    pub fn filter(mut self, filter: Filter) -> Self {
        self.filter = filter;
        self
    }

    pub fn detail(mut self, detail: Detail) -> Self {
        self.detail = detail;
        self
    }

    pub fn when(mut self, when: When) -> Self {
        self.when = when;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increased,
    Decreased,
    Unchanged,
}

impl Direction {
    pub fn of(delta: f64) -> Self {
        if delta > EFFECT_EPSILON {
            Direction::Increased
        } else if delta < -EFFECT_EPSILON {
            Direction::Decreased
        } else {
            Direction::Unchanged
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationKind {
    Local,
    Historical,
    GlobalChain,
}

/// Explainer that was itself asserted as hard evidence by the update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    Occurred,
    RuledOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    /// Event this clause explains: the query hypothesis, or the previous
    /// clause's explainer in a global chain.
    pub hypothesis: EventId,
    pub explainer: EventId,
    /// Direction of the explainer's change.
    pub direction: Direction,
    pub reported_correlation: f64,
    pub effect: f64,
    pub hypothesis_before: f64,
    pub hypothesis_after: f64,
    pub explainer_before: f64,
    pub explainer_after: f64,
    /// LEG whose snapshots produced this clause.
    pub leg: String,
    /// LEG where the update's evidence was entered.
    pub source_leg: String,
    pub update_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<Observation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub hypothesis: EventId,
    pub leg: String,
    pub kind: ExplanationKind,
    pub direction: Direction,
    pub hypothesis_before: f64,
    pub hypothesis_after: f64,
    pub clauses: Vec<Clause>,
}

/// Answers `query` against the session state, dispatching on scope and
/// temporal focus.
pub fn explain(session: &Session, query: &ExplanationQuery) -> Result<Explanation, ExplainError> {
    check_query(session, query)?;
    match (query.scope, query.when) {
        (Scope::Global, when) => {
            if query.filter == Filter::None {
                return Err(ExplainError::FilterRequired);
            }
            let k = focus(session, when)?;
            explain_global(session, query, k)
        }
        (Scope::Local, When::AllHistory) => explain_history(session, query),
        (Scope::Local, when) => {
            let k = focus(session, when)?;
            explain_local(session, query, k)
        }
    }
}

/// Local explanation of the hypothesis's change at update `k`.
pub fn explain_local(session: &Session, query: &ExplanationQuery, k: usize) -> Result<Explanation, ExplainError> {
    check_query(session, query)?;
    session.record(k)?;
    let h = &query.hypothesis;
    let (h_before, h_after, outcome) = local_candidate(session, &query.leg, h, k, query.filter)?;
    let mut expl = Explanation {
        hypothesis: h.clone(),
        leg: query.leg.clone(),
        kind: ExplanationKind::Local,
        direction: Direction::of(h_after - h_before),
        hypothesis_before: h_before,
        hypothesis_after: h_after,
        clauses: Vec::new(),
    };
    match outcome {
        Candidate::Unchanged => {}
        Candidate::Exhausted => return Err(exhausted(session, &query.leg, h, query.filter, Some(k))),
        Candidate::Found(b) => expl.clauses.push(clause(session, &query.leg, k, &b)?),
    }
    Ok(expl)
}

/// One clause per update that moved the hypothesis and has an explainer,
/// in update order.
pub fn explain_history(session: &Session, query: &ExplanationQuery) -> Result<Explanation, ExplainError> {
    check_query(session, query)?;
    let n = session.history().len();
    if n == 0 {
        return Err(ExplainError::NoUpdates);
    }
    let h = &query.hypothesis;
    let (first, _) = session.snapshots(&query.leg, 1)?;
    let h_before = first.prob_true(h).map_err(EffectError::from)?;
    let (_, last) = session.snapshots(&query.leg, n)?;
    let h_after = last.prob_true(h).map_err(EffectError::from)?;

    let mut clauses = Vec::new();
    let mut moved = false;
    for k in 1..=n {
        match local_candidate(session, &query.leg, h, k, query.filter)?.2 {
            Candidate::Unchanged => {}
            Candidate::Exhausted => moved = true,
            Candidate::Found(b) => {
                moved = true;
                clauses.push(clause(session, &query.leg, k, &b)?);
            }
        }
    }
    if clauses.is_empty() && moved {
        return Err(exhausted(session, &query.leg, h, query.filter, None));
    }
    Ok(Explanation {
        hypothesis: h.clone(),
        leg: query.leg.clone(),
        kind: ExplanationKind::Historical,
        direction: Direction::of(h_after - h_before),
        hypothesis_before: h_before,
        hypothesis_after: h_after,
        clauses,
    })
}

/// Causal (or diagnostic) chain for update `k`.
pub fn explain_global(session: &Session, query: &ExplanationQuery, k: usize) -> Result<Explanation, ExplainError> {
    check_query(session, query)?;
    if query.filter == Filter::None {
        return Err(ExplainError::FilterRequired);
    }
    let record = session.record(k)?;
    let h = &query.hypothesis;
    let (before, after) = session.snapshots(&query.leg, k)?;
    let h_before = before.prob_true(h).map_err(EffectError::from)?;
    let h_after = after.prob_true(h).map_err(EffectError::from)?;
    let mut expl = Explanation {
        hypothesis: h.clone(),
        leg: query.leg.clone(),
        kind: ExplanationKind::GlobalChain,
        direction: Direction::of(h_after - h_before),
        hypothesis_before: h_before,
        hypothesis_after: h_after,
        clauses: Vec::new(),
    };
    if expl.direction == Direction::Unchanged {
        return Ok(expl);
    }

    let net = session.net();
    let mut visited = BTreeSet::from([h.clone()]);
    let mut current = h.clone();
    loop {
        let linked = linked_events(session, &current, query.filter);
        let mut best: Option<(EffectBreakdown, String)> = None;
        for li in net.legs_containing(&current) {
            let leg = &net.legs()[li];
            let allowed: BTreeSet<EventId> = linked
                .iter()
                .filter(|e| leg.cmd.contains(e) && !visited.contains(*e))
                .cloned()
                .collect();
            if allowed.is_empty() {
                continue;
            }
            let (b, a) = session.snapshots(&leg.id, k)?;
            if let Some(top) = rank_explainers(b, a, &current, Some(&allowed))?.into_iter().next() {
                if best.as_ref().is_none_or(|(cur, _)| top.effect > cur.effect) {
                    best = Some((top, leg.id.clone()));
                }
            }
        }
        let Some((top, leg)) = best else { break };
        let c = clause(session, &leg, k, &top)?;
        let terminal = record.evidence.target_of(&top.explainer).is_some();
        expl.clauses.push(c);
        if terminal {
            break;
        }
        visited.insert(top.explainer.clone());
        current = top.explainer;
    }
    if expl.clauses.is_empty() {
        return Err(exhausted(session, &query.leg, h, query.filter, Some(k)));
    }
    Ok(expl)
}

enum Candidate {
    Unchanged,
    Exhausted,
    Found(EffectBreakdown),
}

/// Hypothesis probabilities in `leg` around update `k` and the top filtered
/// explainer there.
fn local_candidate(
    session: &Session,
    leg: &str,
    h: &EventId,
    k: usize,
    filter: Filter,
) -> Result<(f64, f64, Candidate), ExplainError> {
    let (before, after) = session.snapshots(leg, k)?;
    let h_before = before.prob_true(h).map_err(EffectError::from)?;
    let h_after = after.prob_true(h).map_err(EffectError::from)?;
    if Direction::of(h_after - h_before) == Direction::Unchanged {
        return Ok((h_before, h_after, Candidate::Unchanged));
    }
    let allowed = match filter {
        Filter::None => None,
        _ => Some(linked_events(session, h, filter)),
    };
    let top = rank_explainers(before, after, h, allowed.as_ref())?.into_iter().next();
    Ok((
        h_before,
        h_after,
        top.map_or(Candidate::Exhausted, Candidate::Found),
    ))
}

fn linked_events(session: &Session, event: &EventId, filter: Filter) -> BTreeSet<EventId> {
    match filter {
        Filter::Causal => session.causal().causes(event),
        Filter::Diagnostic => session.causal().symptoms(event),
        Filter::None => BTreeSet::new(),
    }
}

fn clause(session: &Session, leg: &str, k: usize, b: &EffectBreakdown) -> Result<Clause, ExplainError> {
    let record = session.record(k)?;
    let observation = record.evidence.target_of(&b.explainer).and_then(|_| {
        if (b.e_after - 1.0).abs() <= OBSERVED_TOL {
            Some(Observation::Occurred)
        } else if b.e_after.abs() <= OBSERVED_TOL {
            Some(Observation::RuledOut)
        } else {
            None
        }
    });
    Ok(Clause {
        hypothesis: b.hypothesis.clone(),
        explainer: b.explainer.clone(),
        direction: Direction::of(b.delta_e),
        reported_correlation: b.reported_correlation,
        effect: b.effect,
        hypothesis_before: b.h_before,
        hypothesis_after: b.h_after,
        explainer_before: b.e_before,
        explainer_after: b.e_after,
        leg: leg.to_owned(),
        source_leg: record.evidence.source_leg.clone(),
        update_index: k,
        observation,
    })
}

fn check_query(session: &Session, query: &ExplanationQuery) -> Result<(), ExplainError> {
    let net = session.net();
    if !net.events().contains(&query.hypothesis) {
        return Err(ExplainError::UnknownEvent(query.hypothesis.clone()));
    }
    let leg = net
        .leg(&query.leg)
        .ok_or_else(|| ExplainError::UnknownLeg(query.leg.clone()))?;
    if !leg.cmd.contains(&query.hypothesis) {
        return Err(ExplainError::HypothesisNotInLeg {
            hypothesis: query.hypothesis.clone(),
            leg: query.leg.clone(),
        });
    }
    Ok(())
}

fn focus(session: &Session, when: When) -> Result<usize, ExplainError> {
    let n = session.history().len();
    match when {
        When::Update(k) if k >= 1 && k <= n => Ok(k),
        When::Update(k) => Err(ExplainError::UnknownUpdate(k)),
        When::Current | When::AllHistory if n > 0 => Ok(n),
        When::Current | When::AllHistory => Err(ExplainError::NoUpdates),
    }
}

/// User-facing message for a filter that leaves nothing to explain with.
fn exhausted(session: &Session, leg: &str, h: &EventId, filter: Filter, k: Option<usize>) -> ExplainError {
    let at = match k {
        Some(k) => format!("its change at update {k}"),
        None => "any of its changes".to_owned(),
    };
    let message = match filter {
        Filter::None => format!("No other event in {leg} accounts for {at} in {h}.")
            .replace("its change", "the change")
            .replace("any of its changes", "any change"),
        Filter::Causal | Filter::Diagnostic => {
            let (noun, plural) = if filter == Filter::Causal {
                ("cause", "causes")
            } else {
                ("symptom", "symptoms")
            };
            if linked_events(session, h, filter).is_empty() {
                format!("{h} has no designated {plural}; enter causal structure or clear the filter.")
            } else {
                format!("No designated {noun} of {h} accounts for {at}.")
            }
        }
    };
    ExplainError::FilterExhausted(message)
}
