//! Saved sessions: the loaded knowledge base, the current causal links and
//! the evidence entered so far. Loading replays the evidence, so an archive
//! restores exactly the state a live session would reach.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explain::ExplainError;
use crate::kb::KbDocument;
use crate::net::NetError;
use crate::session::{EvidenceSpec, Session};
use crate::update::UpdateError;

pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArchiveError {
    #[error("archive is not valid JSON: {0}")]
    Parse(String),
    #[error("unsupported archive version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error("replaying update {index}: {source}")]
    Replay { index: usize, source: UpdateError },
}

impl ArchiveError {
    pub fn code(&self) -> &'static str {
        match self {
            ArchiveError::Parse(_) => "ParseError",
            ArchiveError::UnsupportedVersion(_) => "UnsupportedVersion",
            ArchiveError::Net(e) => e.code(),
            ArchiveError::Explain(e) => e.code(),
            ArchiveError::Replay { source, .. } => source.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionArchive {
    pub version: u32,
    pub kb: KbDocument,
    #[serde(default)]
    pub evidence: Vec<EvidenceSpec>,
}

impl SessionArchive {
    pub fn capture(session: &Session) -> Self {
        SessionArchive {
            version: ARCHIVE_VERSION,
            kb: KbDocument::from_net(session.initial_net(), session.causal().links().to_vec()),
            evidence: session.history().iter().map(|r| r.evidence.clone()).collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ArchiveError> {
        let archive: SessionArchive =
            serde_json::from_str(text).map_err(|e| ArchiveError::Parse(e.to_string()))?;
        if archive.version != ARCHIVE_VERSION {
            return Err(ArchiveError::UnsupportedVersion(archive.version));
        }
        Ok(archive)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("archive serializes")
    }

    pub fn restore(self) -> Result<Session, ArchiveError> {
        let loaded = self.kb.into_loaded()?;
        let mut session = Session::with_links(loaded.net, loaded.causal_links)?;
        for (i, spec) in self.evidence.iter().enumerate() {
            session
                .apply_evidence(spec)
                .map_err(|source| ArchiveError::Replay { index: i + 1, source })?;
        }
        Ok(session)
    }
}

/// Serializes `session` to archive JSON.
pub fn save(session: &Session) -> String {
    SessionArchive::capture(session).to_json()
}

/// Restores a session from archive JSON.
pub fn load(text: &str) -> Result<Session, ArchiveError> {
    SessionArchive::parse(text)?.restore()
}
