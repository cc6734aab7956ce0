//! JSON views of session state. The CLI prints the same views with `--json`,
//! so both front ends share one serialization.

use gbi_core::{
    render, CausalLink, EventId, ExplainError, Explanation, ExplanationQuery, LegNet, Session, UpdateRecord,
};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventMarginal {
    pub event: EventId,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegSummary {
    pub id: String,
    pub events: Vec<EventId>,
    /// LEGs sharing at least one event with this one.
    pub neighbors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetSummary {
    pub legs: Vec<LegSummary>,
    pub events: Vec<EventMarginal>,
    pub causal_links: Vec<CausalLink>,
    pub updates: usize,
}

impl NetSummary {
    pub fn of(session: &Session) -> Self {
        let net = session.net();
        NetSummary {
            legs: net
                .legs()
                .iter()
                .enumerate()
                .map(|(i, l)| LegSummary {
                    id: l.id.clone(),
                    events: l.events().to_vec(),
                    neighbors: net.neighbors(i).iter().map(|&j| net.legs()[j].id.clone()).collect(),
                })
                .collect(),
            events: net
                .events()
                .iter()
                .map(|e| EventMarginal {
                    event: e.clone(),
                    probability: net.event_probability(e).unwrap_or(0.0),
                })
                .collect(),
            causal_links: session.causal().links().to_vec(),
            updates: session.history().len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegView {
    pub id: String,
    pub events: Vec<EventMarginal>,
    pub cmd: Vec<f64>,
}

impl LegView {
    pub fn of(net: &LegNet, leg: &str) -> Option<Self> {
        let leg = net.leg(leg)?;
        Some(LegView {
            id: leg.id.clone(),
            events: leg
                .events()
                .iter()
                .map(|e| EventMarginal {
                    event: e.clone(),
                    probability: leg.cmd.prob_true(e).unwrap_or(0.0),
                })
                .collect(),
            cmd: leg.cmd.cells().to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalChange {
    pub event: EventId,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegChange {
    pub leg: String,
    pub events: Vec<MarginalChange>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateSummary {
    pub index: usize,
    pub leg: String,
    pub constraints: std::collections::BTreeMap<EventId, f64>,
    pub touched: Vec<String>,
    pub propagation_order: Vec<String>,
    pub changes: Vec<LegChange>,
}

impl UpdateSummary {
    pub fn of(record: &UpdateRecord) -> Self {
        UpdateSummary {
            index: record.index,
            leg: record.evidence.source_leg.clone(),
            constraints: record.evidence.constraints.clone(),
            touched: record.touched.iter().map(|t| t.leg.clone()).collect(),
            propagation_order: record.propagation_order.clone(),
            changes: record
                .touched
                .iter()
                .map(|t| LegChange {
                    leg: t.leg.clone(),
                    events: t
                        .before
                        .events()
                        .iter()
                        .map(|e| MarginalChange {
                            event: e.clone(),
                            before: t.before.prob_true(e).unwrap_or(0.0),
                            after: t.after.prob_true(e).unwrap_or(0.0),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// One-line form: `update 1: DRUNK-LEG {TWO-DRINKS=1} touched A, B`.
    pub fn line(&self) -> String {
        let constraints: Vec<String> = self.constraints.iter().map(|(e, p)| format!("{e}={p}")).collect();
        format!(
            "update {}: {} {{{}}} touched {}",
            self.index,
            self.leg,
            constraints.join(", "),
            self.touched.join(", ")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryView {
    pub updates: Vec<UpdateSummary>,
}

impl HistoryView {
    pub fn of(session: &Session) -> Self {
        HistoryView {
            updates: session.history().iter().map(UpdateSummary::of).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplainResponse {
    pub explanation: Explanation,
    #[serde(rename = "renderedText")]
    pub rendered_text: String,
}

/// Runs `query` and renders it at the query's detail level.
pub fn explain_response(session: &Session, query: &ExplanationQuery) -> Result<ExplainResponse, ExplainError> {
    let explanation = gbi_core::explain(session, query)?;
    let rendered_text = render(&explanation, query.detail);
    Ok(ExplainResponse {
        explanation,
        rendered_text,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Created {
    pub id: String,
    #[serde(flatten)]
    pub net: NetSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionList {
    pub sessions: Vec<String>,
}

