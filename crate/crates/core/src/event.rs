//! Event identifiers and partial truth assignments.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Symbolic name of a binary event, unique within a [`LegNet`](crate::LegNet).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(String);

impl EventId {
    pub fn new(name: impl Into<String>) -> Self {
        EventId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EventId {
    fn from(s: &str) -> Self {
        EventId(s.to_owned())
    }
}

impl From<String> for EventId {
    fn from(s: String) -> Self {
        EventId(s)
    }
}

impl AsRef<str> for EventId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Truth values for a subset of a table's events.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    bindings: BTreeMap<EventId, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Single binding `event = value`.
    pub fn single(event: impl Into<EventId>, value: bool) -> Self {
        Self::new().with(event, value)
    }

    pub fn with(mut self, event: impl Into<EventId>, value: bool) -> Self {
        self.bindings.insert(event.into(), value);
        self
    }

    pub fn insert(&mut self, event: EventId, value: bool) -> Option<bool> {
        self.bindings.insert(event, value)
    }

    pub fn get(&self, event: &EventId) -> Option<bool> {
        self.bindings.get(event).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EventId, bool)> {
        self.bindings.iter().map(|(e, v)| (e, *v))
    }

    /// Conjunction of two assignments. `None` when they bind an event to
    /// opposite values.
    pub fn conjoin(&self, other: &Assignment) -> Option<Assignment> {
        let mut out = self.clone();
        for (event, value) in other.iter() {
            match out.bindings.insert(event.clone(), value) {
                Some(prev) if prev != value => return None,
                _ => {}
            }
        }
        Some(out)
    }
}

impl<E: Into<EventId>> FromIterator<(E, bool)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (E, bool)>>(iter: I) -> Self {
        Assignment {
            bindings: iter.into_iter().map(|(e, v)| (e.into(), v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjoin_detects_conflict() {
        let a = Assignment::single("H", true);
        assert!(a.conjoin(&Assignment::single("H", false)).is_none());
        let both = a.conjoin(&Assignment::single("E", false)).unwrap();
        assert_eq!(both.len(), 2);
        assert_eq!(both.get(&"E".into()), Some(false));
    }
}
