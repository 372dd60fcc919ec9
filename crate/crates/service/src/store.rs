//! In-memory session store.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use dmpcorr_core::{DmpParams, Trajectory};
use uuid::Uuid;

#[derive(Debug, Clone, Copy)]
pub struct StoreConfig {
    /// Sessions idle for longer than this are dropped.
    pub ttl: Duration,
    /// Creating a session beyond this count evicts the least recently used.
    pub capacity: usize,
}

impl Default for StoreConfig {
    fn default() -> Self {
        Self {
            ttl: Duration::from_secs(3600),
            capacity: 64,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Session {
    pub trajectories: BTreeMap<String, Arc<Trajectory>>,
    pub dmps: BTreeMap<String, Arc<DmpParams>>,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

#[derive(Debug)]
struct Entry {
    session: Session,
    last_used: Instant,
}

#[derive(Debug, Clone)]
pub struct SessionStore {
    config: StoreConfig,
    inner: Arc<Mutex<HashMap<Uuid, Entry>>>,
}

impl SessionStore {
    pub fn new(config: StoreConfig) -> Self {
        Self {
            config,
            inner: Arc::default(),
        }
    }

    pub fn create(&self) -> Uuid {
        let now = Instant::now();
        let mut map = self.lock();
        self.expire(&mut map, now);
        while map.len() >= self.config.capacity.max(1) {
            let oldest = map
                .iter()
                .min_by_key(|(_, e)| e.last_used)
                .map(|(id, _)| *id)
                .expect("non-empty map");
            map.remove(&oldest);
        }
        let id = Uuid::new_v4();
        let created_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        map.insert(
            id,
            Entry {
                session: Session {
                    created_at,
                    ..Session::default()
                },
                last_used: now,
            },
        );
        id
    }

    /// Runs `f` on the live session, or returns `None` if it does not exist
    /// or has expired. Keep `f` cheap: the whole store is locked meanwhile.
    pub fn with<T>(&self, id: Uuid, f: impl FnOnce(&mut Session) -> T) -> Option<T> {
        let now = Instant::now();
        let mut map = self.lock();
        self.expire(&mut map, now);
        let entry = map.get_mut(&id)?;
        entry.last_used = now;
        Some(f(&mut entry.session))
    }

    pub fn len(&self) -> usize {
        let mut map = self.lock();
        self.expire(&mut map, Instant::now());
        map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn expire(&self, map: &mut HashMap<Uuid, Entry>, now: Instant) {
        map.retain(|_, e| now.duration_since(e.last_used) <= self.config.ttl);
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<Uuid, Entry>> {
        // A panic while holding the lock cannot leave a map entry half
        // written, so a poisoned lock is still usable.
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_evicts_least_recently_used() {
        let store = SessionStore::new(StoreConfig {
            ttl: Duration::from_secs(60),
            capacity: 2,
        });
        let a = store.create();
        let b = store.create();
        assert!(store.with(a, |_| ()).is_some());
        let c = store.create();
        assert_eq!(store.len(), 2);
        assert!(store.with(b, |_| ()).is_none());
        assert!(store.with(a, |_| ()).is_some());
        assert!(store.with(c, |_| ()).is_some());
    }

    #[test]
    fn idle_sessions_expire() {
        let store = SessionStore::new(StoreConfig {
            ttl: Duration::from_millis(20),
            capacity: 8,
        });
        let a = store.create();
        std::thread::sleep(Duration::from_millis(60));
        assert!(store.with(a, |_| ()).is_none());
        assert!(store.is_empty());
    }
}
