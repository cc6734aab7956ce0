//! Dense joint probability tables over binary events (component marginal
//! distributions).
//!
//! Cells are stored little-endian over the declared event order: bit `k` of a
//! cell index is the truth value of `events[k]`. This is the only layout used
//! by files, the API and the tests.

use serde::Serialize;
use thiserror::Error;

use crate::event::{Assignment, EventId};

/// Largest number of events a single table may span (65536 cells).
pub const MAX_EVENTS: usize = 16;

/// Allowed deviation of the cell sum from 1 before a table is rejected.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Probability mass treated as zero when conditioning.
pub const ZERO_MASS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("table must span at least one event")]
    NoEvents,
    #[error("table spans {0} events; at most {MAX_EVENTS} are supported")]
    TooManyEvents(usize),
    #[error("event {0} appears more than once")]
    DuplicateEvent(EventId),
    #[error("expected {expected} cells, got {actual}")]
    WrongLength { expected: usize, actual: usize },
    #[error("cell {index} is negative or not finite ({value})")]
    NegativeCell { index: usize, value: f64 },
    #[error("cells sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("unknown event {0}")]
    UnknownEvent(EventId),
    #[error("marginal subset is empty")]
    EmptySubset,
    #[error("conditioning event has zero probability")]
    ZeroCondition,
}

impl TableError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            TableError::NoEvents => "NoEvents",
            TableError::TooManyEvents(_) => "TooManyEvents",
            TableError::DuplicateEvent(_) => "DuplicateEvent",
            TableError::WrongLength { .. } => "WrongLength",
            TableError::NegativeCell { .. } => "NegativeCell",
            TableError::NotNormalized { .. } => "NotNormalized",
            TableError::UnknownEvent(_) => "UnknownEvent",
            TableError::EmptySubset => "EmptySubset",
            TableError::ZeroCondition => "ZeroCondition",
        }
    }
}

/// Joint distribution over an ordered list of binary events.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cmd {
    events: Vec<EventId>,
    cells: Vec<f64>,
}

impl Cmd {
    /// Validates and builds a table. A sum within [`NORMALIZATION_TOL`] of 1 is
    /// renormalized; anything further off is rejected. Sums off by no more
    /// than summation rounding are kept as given, so rebuilding a table from
    /// its own cells is exact.
    pub fn new(events: Vec<EventId>, cells: Vec<f64>) -> Result<Self, TableError> {
        check_events(&events)?;
        let expected = 1usize << events.len();
        if cells.len() != expected {
            return Err(TableError::WrongLength {
                expected,
                actual: cells.len(),
            });
        }
        if let Some((index, &value)) = cells
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_finite() || **c < 0.0)
        {
            return Err(TableError::NegativeCell { index, value });
        }
        let sum: f64 = cells.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(TableError::NotNormalized { sum });
        }
        let rounding = 4.0 * cells.len() as f64 * f64::EPSILON;
        let cells = if (sum - 1.0).abs() <= rounding {
            cells
        } else {
            cells.into_iter().map(|c| c / sum).collect()
        };
        Ok(Cmd { events, cells })
    }

    /// Uniform table over `events`.
    pub fn uniform(events: Vec<EventId>) -> Result<Self, TableError> {
        check_events(&events)?;
        let n = 1usize << events.len();
        Ok(Cmd {
            events,
            cells: vec![1.0 / n as f64; n],
        })
    }

    /// Builds a table from cells produced by an operation that preserves
    /// normalization (rescaling, summation).
    pub(crate) fn from_parts(events: Vec<EventId>, cells: Vec<f64>) -> Self {
        debug_assert_eq!(cells.len(), 1usize << events.len());
        debug_assert!(cells.iter().all(|c| *c >= 0.0));
        Cmd { events, cells }
    }

    pub fn events(&self) -> &[EventId] {
        &self.events
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn index_of(&self, event: &EventId) -> Option<usize> {
        self.events.iter().position(|e| e == event)
    }

    pub fn contains(&self, event: &EventId) -> bool {
        self.index_of(event).is_some()
    }

    pub(crate) fn require(&self, event: &EventId) -> Result<usize, TableError> {
        self.index_of(event)
            .ok_or_else(|| TableError::UnknownEvent(event.clone()))
    }

    /// Marginal table over `subset`, in the order given.
    pub fn marginal(&self, subset: &[EventId]) -> Result<Cmd, TableError> {
        if subset.is_empty() {
            return Err(TableError::EmptySubset);
        }
        let positions = subset
            .iter()
            .map(|e| self.require(e))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, e) in subset.iter().enumerate() {
            if subset[..i].contains(e) {
                return Err(TableError::DuplicateEvent(e.clone()));
            }
        }
        let mut cells = vec![0.0; 1usize << subset.len()];
        for (i, &c) in self.cells.iter().enumerate() {
            cells[project_index(i, &positions)] += c;
        }
        Ok(Cmd::from_parts(subset.to_vec(), cells))
    }

    /// Probability that every binding in `partial` holds. The empty
    /// assignment has probability 1.
    pub fn prob(&self, partial: &Assignment) -> Result<f64, TableError> {
        let (mask, bits) = self.mask_of(partial)?;
        if mask == 0 {
            return Ok(1.0);
        }
        Ok(self
            .cells
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == bits)
            .map(|(_, c)| c)
            .sum())
    }

    /// `P(event = true)`.
    pub fn prob_true(&self, event: &EventId) -> Result<f64, TableError> {
        let bit = 1usize << self.require(event)?;
        Ok(self
            .cells
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, c)| c)
            .sum())
    }

    /// `P(target | given)`.
    pub fn conditional(&self, target: &Assignment, given: &Assignment) -> Result<f64, TableError> {
        // Validate both sides before looking at mass.
        self.mask_of(target)?;
        let denom = self.prob(given)?;
        if denom <= ZERO_MASS {
            return Err(TableError::ZeroCondition);
        }
        let num = match target.conjoin(given) {
            Some(joint) => self.prob(&joint)?,
            None => 0.0,
        };
        Ok(num / denom)
    }

    /// Table for the same events with `event` replaced by its complement.
    pub fn complement_event(&self, event: &EventId) -> Result<Cmd, TableError> {
        let bit = 1usize << self.require(event)?;
        let cells = (0..self.cells.len()).map(|i| self.cells[i ^ bit]).collect();
        Ok(Cmd::from_parts(self.events.clone(), cells))
    }

    /// Largest per-cell absolute difference. Both tables must list the same
    /// events in the same order.
    pub fn max_abs_diff(&self, other: &Cmd) -> Option<f64> {
        if self.events != other.events {
            return None;
        }
        Some(
            self.cells
                .iter()
                .zip(&other.cells)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Bit mask and required bit values for an assignment.
    pub(crate) fn mask_of(&self, partial: &Assignment) -> Result<(usize, usize), TableError> {
        let mut mask = 0;
        let mut bits = 0;
        for (event, value) in partial.iter() {
            let bit = 1usize << self.require(event)?;
            mask |= bit;
            if value {
                bits |= bit;
            }
        }
        Ok((mask, bits))
    }
}

fn check_events(events: &[EventId]) -> Result<(), TableError> {
    if events.is_empty() {
        return Err(TableError::NoEvents);
    }
    if events.len() > MAX_EVENTS {
        return Err(TableError::TooManyEvents(events.len()));
    }
    for (i, e) in events.iter().enumerate() {
        if events[..i].contains(e) {
            return Err(TableError::DuplicateEvent(e.clone()));
        }
    }
    Ok(())
}

/// Maps a source cell index to the index over the events at `positions`.
pub(crate) fn project_index(index: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &p)| acc | (((index >> p) & 1) << k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(names: &[&str]) -> Vec<EventId> {
        names.iter().map(|n| EventId::from(*n)).collect()
    }

    /// Events [E, H] with P(H)=0.09, P(E)=0.05, P(H|E)=0.79.
    fn ticket_table() -> Cmd {
        Cmd::new(ids(&["E", "H"]), vec![0.8995, 0.0105, 0.0505, 0.0395]).unwrap()
    }

    #[test]
    fn builds_uniform() {
        let c = Cmd::new(ids(&["A", "B"]), vec![0.25; 4]).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c, Cmd::uniform(ids(&["A", "B"])).unwrap());
    }

    #[test]
    fn rejects_bad_tables() {
        assert_eq!(
            Cmd::new(ids(&["A"]), vec![0.5, 0.6]),
            Err(TableError::NotNormalized { sum: 1.1 })
        );
        assert!(matches!(
            Cmd::new(ids(&["A"]), vec![1.2, -0.2]),
            Err(TableError::NegativeCell { index: 1, .. })
        ));
        assert_eq!(
            Cmd::new(ids(&["A", "B"]), vec![0.5, 0.5]),
            Err(TableError::WrongLength {
                expected: 4,
                actual: 2
            })
        );
        assert_eq!(Cmd::new(vec![], vec![1.0]), Err(TableError::NoEvents));
        assert!(matches!(
            Cmd::new(ids(&["A", "A"]), vec![0.25; 4]),
            Err(TableError::DuplicateEvent(_))
        ));
        let many: Vec<EventId> = (0..17).map(|i| EventId::new(format!("E{i}"))).collect();
        assert_eq!(
            Cmd::uniform(many),
            Err(TableError::TooManyEvents(17))
        );
    }

    #[test]
    fn small_drift_is_renormalized() {
        let c = Cmd::new(ids(&["A"]), vec![0.5, 0.5 + 5e-10]).unwrap();
        assert!((c.cells().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ticket_table_marginals() {
        let c = ticket_table();
        let h = c.marginal(&ids(&["H"])).unwrap();
        assert!((h.cells()[0] - 0.91).abs() < 1e-12);
        assert!((h.cells()[1] - 0.09).abs() < 1e-12);
        let e = c.marginal(&ids(&["E"])).unwrap();
        assert!((e.cells()[0] - 0.95).abs() < 1e-12);
        assert!((e.cells()[1] - 0.05).abs() < 1e-12);
        assert_eq!(c.marginal(c.events()).unwrap(), c);
    }

    #[test]
    fn marginal_respects_requested_order() {
        let c = ticket_table();
        let swapped = c.marginal(&ids(&["H", "E"])).unwrap();
        // index 1 = H true, E false
        assert!((swapped.cells()[1] - 0.0505).abs() < 1e-15);
        assert!((swapped.cells()[2] - 0.0105).abs() < 1e-15);
    }

    #[test]
    fn prob_and_conditional() {
        let c = ticket_table();
        assert_eq!(c.prob(&Assignment::new()).unwrap(), 1.0);
        assert!((c.prob(&Assignment::single("H", true)).unwrap() - 0.09).abs() < 1e-12);
        let both = Assignment::single("H", true).with("E", true);
        assert!((c.prob(&both).unwrap() - 0.0395).abs() < 1e-15);
        let cond = c
            .conditional(&Assignment::single("H", true), &Assignment::single("E", true))
            .unwrap();
        assert!((cond - 0.79).abs() < 1e-12);
        let same = Assignment::single("H", true);
        assert!((c.conditional(&same, &same).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(
            c.prob(&Assignment::single("X", true)),
            Err(TableError::UnknownEvent("X".into()))
        );
    }

    #[test]
    fn zero_condition_is_rejected() {
        let c = Cmd::new(ids(&["E", "H"]), vec![0.5, 0.0, 0.5, 0.0]).unwrap();
        assert_eq!(
            c.conditional(&Assignment::single("H", true), &Assignment::single("E", true)),
            Err(TableError::ZeroCondition)
        );
    }

    #[test]
    fn complement_swaps_event_values() {
        let c = ticket_table();
        let n = c.complement_event(&"E".into()).unwrap();
        assert!((n.prob_true(&"E".into()).unwrap() - 0.95).abs() < 1e-12);
        assert!((n.prob_true(&"H".into()).unwrap() - 0.09).abs() < 1e-12);
    }
}
