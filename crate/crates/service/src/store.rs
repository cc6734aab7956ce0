//! In-memory session registry. Each session sits behind its own mutex so
//! mutations on one session are serialized while other sessions proceed.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, RwLock};

use gbi_core::Session;

pub type SharedSession = Arc<Mutex<Session>>;

#[derive(Default)]
pub struct SessionStore {
    sessions: RwLock<BTreeMap<String, SharedSession>>,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `session` under a fresh random id.
    pub fn insert(&self, session: Session) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        self.sessions
            .write()
            .expect("session registry poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        id
    }

    pub fn get(&self, id: &str) -> Option<SharedSession> {
        self.sessions.read().expect("session registry poisoned").get(id).cloned()
    }

    pub fn ids(&self) -> Vec<String> {
        self.sessions.read().expect("session registry poisoned").keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session registry poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
