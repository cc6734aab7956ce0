//! Knowledge-base documents.
//!
//! ```json
//! {
//!   "events": ["A", "B"],
//!   "legs": [{ "id": "L", "events": ["A", "B"], "cmd": [0.4, 0.1, 0.2, 0.3] }],
//!   "causal_links": [{ "from": "A", "to": "B" }]
//! }
//! ```
//!
//! `cmd` lists `2^n` cells, little-endian over the LEG's `events`.

use serde::{Deserialize, Serialize};

use crate::event::EventId;
use crate::explain::CausalLink;
use crate::net::{ConsistencyReport, Leg, LegNet, NetError};
use crate::table::Cmd;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KbDocument {
    pub events: Vec<EventId>,
    pub legs: Vec<LegDocument>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub causal_links: Vec<CausalLink>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegDocument {
    pub id: String,
    pub events: Vec<EventId>,
    pub cmd: Vec<f64>,
}

/// A validated net plus the causal links that came with it. The links are
/// only parsed here; [`CausalGraph`](crate::CausalGraph) validates them.
#[derive(Debug, Clone)]
pub struct LoadedKb {
    pub net: LegNet,
    pub causal_links: Vec<CausalLink>,
}

impl KbDocument {
    pub fn parse(text: &str) -> Result<Self, NetError> {
        serde_json::from_str(text).map_err(|e| NetError::Parse(e.to_string()))
    }

    pub fn into_loaded(self) -> Result<LoadedKb, NetError> {
        let legs = self.build_legs()?;
        Ok(LoadedKb {
            net: LegNet::new(self.events, legs)?,
            causal_links: self.causal_links,
        })
    }

    /// Consistency of every adjacent LEG pair, for documents that are
    /// structurally sound but may disagree on shared marginals.
    pub fn consistency_report(&self, tol: f64) -> Result<ConsistencyReport, NetError> {
        let net = LegNet::new_unchecked_consistency(self.events.clone(), self.build_legs()?)?;
        Ok(net.check_consistency(tol))
    }

    fn build_legs(&self) -> Result<Vec<Leg>, NetError> {
        self.legs
            .iter()
            .map(|l| {
                // Reference check first so a bad name is reported as such
                // rather than as a table problem.
                if let Some(event) = l.events.iter().find(|e| !self.events.contains(e)) {
                    return Err(NetError::UnknownEventInLeg {
                        leg: l.id.clone(),
                        event: event.clone(),
                    });
                }
                let cmd = Cmd::new(l.events.clone(), l.cmd.clone()).map_err(|source| NetError::Table {
                    leg: l.id.clone(),
                    source,
                })?;
                Ok(Leg::new(l.id.clone(), cmd))
            })
            .collect()
    }

    /// Document describing `net` with the given links.
    pub fn from_net(net: &LegNet, causal_links: Vec<CausalLink>) -> Self {
        KbDocument {
            events: net.events().to_vec(),
            legs: net
                .legs()
                .iter()
                .map(|l| LegDocument {
                    id: l.id.clone(),
                    events: l.events().to_vec(),
                    cmd: l.cmd.cells().to_vec(),
                })
                .collect(),
            causal_links,
        }
    }
}

/// Parses and fully validates a knowledge-base document.
pub fn load_net(text: &str) -> Result<LoadedKb, NetError> {
    KbDocument::parse(text)?.into_loaded()
}
