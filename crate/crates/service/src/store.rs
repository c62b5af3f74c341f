use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime};

use clore_core::pipeline::{Session, SessionConfig};

/// One live session. The async mutex serializes requests on the same id.
pub struct SessionEntry {
    pub id: String,
    pub created_at: SystemTime,
    pub config: SessionConfig,
    pub session: Arc<tokio::sync::Mutex<Session>>,
    last_used: Mutex<Instant>,
}

impl SessionEntry {
    fn touch(&self, now: Instant) {
        *self.last_used.lock().unwrap_or_else(|e| e.into_inner()) = now;
    }

    fn idle(&self, now: Instant) -> Duration {
        now.saturating_duration_since(*self.last_used.lock().unwrap_or_else(|e| e.into_inner()))
    }
}

/// In-memory sessions with idle expiry. Nothing survives a restart.
pub struct SessionStore {
    ttl: Duration,
    sessions: Mutex<HashMap<String, Arc<SessionEntry>>>,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        Self {
            ttl,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    fn map(&self) -> std::sync::MutexGuard<'_, HashMap<String, Arc<SessionEntry>>> {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn insert(&self, session: Session) -> Arc<SessionEntry> {
        let entry = Arc::new(SessionEntry {
            id: uuid::Uuid::new_v4().simple().to_string(),
            created_at: SystemTime::now(),
            config: session.config().clone(),
            session: Arc::new(tokio::sync::Mutex::new(session)),
            last_used: Mutex::new(Instant::now()),
        });
        self.map().insert(entry.id.clone(), entry.clone());
        entry
    }

    /// Look up a session and mark it used. Expired sessions are dropped here
    /// even if the sweeper has not run yet.
    pub fn get(&self, id: &str) -> Option<Arc<SessionEntry>> {
        self.get_at(id, Instant::now())
    }

    pub fn get_at(&self, id: &str, now: Instant) -> Option<Arc<SessionEntry>> {
        let mut map = self.map();
        let entry = map.get(id)?.clone();
        if entry.idle(now) > self.ttl {
            map.remove(id);
            return None;
        }
        entry.touch(now);
        Some(entry)
    }

    pub fn remove(&self, id: &str) -> bool {
        self.map().remove(id).is_some()
    }

    pub fn len(&self) -> usize {
        self.map().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drop every session idle for longer than the ttl; returns how many.
    pub fn evict_expired(&self, now: Instant) -> usize {
        let mut map = self.map();
        let before = map.len();
        map.retain(|_, e| e.idle(now) <= self.ttl);
        before - map.len()
    }
}
