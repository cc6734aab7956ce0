//! Cause → symptom links entered by the knowledge engineer. The links carry
//! no probabilistic meaning; they only steer which events may explain which.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ExplainError;
use crate::event::EventId;
use crate::net::LegNet;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CausalLink {
    pub from: EventId,
    pub to: EventId,
}

impl CausalLink {
    pub fn new(from: impl Into<EventId>, to: impl Into<EventId>) -> Self {
        CausalLink {
            from: from.into(),
            to: to.into(),
        }
    }
}

/// Acyclic set of causal links whose endpoints share a LEG.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CausalGraph {
    links: Vec<CausalLink>,
    causes: BTreeMap<EventId, BTreeSet<EventId>>,
    symptoms: BTreeMap<EventId, BTreeSet<EventId>>,
}

impl CausalGraph {
    pub fn new(net: &LegNet, links: Vec<CausalLink>) -> Result<Self, ExplainError> {
        let mut graph = CausalGraph::default();
        for link in links {
            for end in [&link.from, &link.to] {
                if !net.events().contains(end) {
                    return Err(ExplainError::UnknownEvent(end.clone()));
                }
            }
            if link.from == link.to {
                return Err(ExplainError::CyclicCausalGraph(vec![link.from.clone()]));
            }
            if net.legs_containing(&link.from).all(|i| !net.legs()[i].cmd.contains(&link.to)) {
                return Err(ExplainError::EndpointsShareNoLeg {
                    from: link.from.clone(),
                    to: link.to.clone(),
                });
            }
            if graph.links.contains(&link) {
                continue;
            }
            graph
                .causes
                .entry(link.to.clone())
                .or_default()
                .insert(link.from.clone());
            graph
                .symptoms
                .entry(link.from.clone())
                .or_default()
                .insert(link.to.clone());
            graph.links.push(link);
        }
        if let Some(cycle) = graph.find_cycle() {
            return Err(ExplainError::CyclicCausalGraph(cycle));
        }
        Ok(graph)
    }

    pub fn links(&self) -> &[CausalLink] {
        &self.links
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Direct causes of `event`.
    pub fn causes(&self, event: &EventId) -> BTreeSet<EventId> {
        self.causes.get(event).cloned().unwrap_or_default()
    }

    /// Direct symptoms of `event`.
    pub fn symptoms(&self, event: &EventId) -> BTreeSet<EventId> {
        self.symptoms.get(event).cloned().unwrap_or_default()
    }

    fn find_cycle(&self) -> Option<Vec<EventId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        fn visit(
            g: &CausalGraph,
            node: &EventId,
            marks: &mut BTreeMap<EventId, Mark>,
            stack: &mut Vec<EventId>,
        ) -> Option<Vec<EventId>> {
            match marks.get(node) {
                Some(Mark::Done) => return None,
                Some(Mark::Open) => {
                    let start = stack.iter().position(|e| e == node).unwrap_or(0);
                    return Some(stack[start..].to_vec());
                }
                None => {}
            }
            marks.insert(node.clone(), Mark::Open);
            stack.push(node.clone());
            for next in g.symptoms.get(node).into_iter().flatten() {
                if let Some(cycle) = visit(g, next, marks, stack) {
                    return Some(cycle);
                }
            }
            stack.pop();
            marks.insert(node.clone(), Mark::Done);
            None
        }

        let mut marks = BTreeMap::new();
        for start in self.symptoms.keys() {
            let mut stack = Vec::new();
            if let Some(cycle) = visit(self, start, &mut marks, &mut stack) {
                return Some(cycle);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Leg;
    use crate::table::Cmd;

    fn net() -> LegNet {
        let ev = |n: &[&str]| n.iter().map(|s| EventId::from(*s)).collect::<Vec<_>>();
        LegNet::new(
            ev(&["A", "B", "C", "D"]),
            vec![
                Leg::new("L1", Cmd::uniform(ev(&["A", "B", "C"])).unwrap()),
                Leg::new("L2", Cmd::uniform(ev(&["C", "D"])).unwrap()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn accepts_dag() {
        let g = CausalGraph::new(
            &net(),
            vec![CausalLink::new("A", "B"), CausalLink::new("C", "B"), CausalLink::new("D", "C")],
        )
        .unwrap();
        assert_eq!(g.causes(&"B".into()).len(), 2);
        assert_eq!(g.symptoms(&"D".into()), [EventId::from("C")].into());
    }

    #[test]
    fn rejects_cycles() {
        let err = CausalGraph::new(&net(), vec![CausalLink::new("A", "B"), CausalLink::new("B", "A")])
            .unwrap_err();
        assert!(matches!(err, ExplainError::CyclicCausalGraph(c) if c.len() == 2));
        assert!(matches!(
            CausalGraph::new(&net(), vec![CausalLink::new("A", "A")]),
            Err(ExplainError::CyclicCausalGraph(_))
        ));
        assert!(matches!(
            CausalGraph::new(
                &net(),
                vec![CausalLink::new("A", "B"), CausalLink::new("B", "C"), CausalLink::new("C", "A")]
            ),
            Err(ExplainError::CyclicCausalGraph(c)) if c.len() == 3
        ));
    }

    #[test]
    fn endpoints_must_share_a_leg() {
        assert!(matches!(
            CausalGraph::new(&net(), vec![CausalLink::new("A", "D")]),
            Err(ExplainError::EndpointsShareNoLeg { .. })
        ));
        assert!(matches!(
            CausalGraph::new(&net(), vec![CausalLink::new("A", "Z")]),
            Err(ExplainError::UnknownEvent(_))
        ));
    }
}
