//! Probabilistic knowledge bases made of LEGs (joint tables over small groups
//! of binary events), minimum-information updating with propagation across
//! the LEG tree, and English explanations of how belief changed.

pub mod archive;
pub mod effect;
pub mod error;
pub mod event;
pub mod explain;
pub mod kb;
pub mod net;
pub mod session;
pub mod table;
pub mod update;

pub use archive::{ArchiveError, SessionArchive};
pub use effect::{effect_of, rank_explainers, EffectBreakdown, EffectError, EFFECT_EPSILON};
pub use error::Error;
pub use event::{Assignment, EventId};
pub use explain::{
    explain, render, CausalGraph, CausalLink, Clause, Detail, Direction, ExplainError, Explanation,
    ExplanationKind, ExplanationQuery, Filter, Observation, Scope, When,
};
pub use kb::{load_net, KbDocument, LegDocument, LoadedKb};
pub use net::{Leg, LegNet, NetError};
pub use session::{EvidenceSpec, Session, TouchedLeg, UpdateRecord};
pub use table::{Cmd, TableError};
pub use update::{IpfOptions, UpdateError};
