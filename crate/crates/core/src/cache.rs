//! Optional two-level read cache: a per-instance local level with LRU
//! eviction in front of a shared global level. Entries carry the effective
//! assignment set with precomputed priorities plus attribute snapshots, so a
//! hit reduces authorization to condition evaluation. Correctness never
//! depends on the cache; it only skips graph work.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use crate::model::{AttrValue, ResourceId, Subject};
use crate::store::EffectiveAssignment;

/// Identifies one (user, parent-subset, object, operation) query shape.
/// Subjects with equal keys see identical effective sets while the engine
/// state is unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub user: ResourceId,
    pub subject_parent_fingerprint: String,
    pub object: ResourceId,
    pub operation: String,
}

impl CacheKey {
    pub fn for_request(subject: &Subject, object: &ResourceId, operation: &str) -> Self {
        let mut hasher = Sha256::new();
        for parent in &subject.parents {
            hasher.update(parent.as_str().as_bytes());
            hasher.update([0]);
        }
        CacheKey {
            user: subject.user.clone(),
            subject_parent_fingerprint: format!("{:x}", hasher.finalize()),
            object: object.clone(),
            operation: operation.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub effective: Vec<EffectiveAssignment>,
    pub subject_attrs: std::collections::BTreeMap<String, AttrValue>,
    pub object_attrs: std::collections::BTreeMap<String, AttrValue>,
    pub inserted_at: Instant,
}

impl CacheEntry {
    fn expired(&self, ttl: Duration) -> bool {
        self.inserted_at.elapsed() >= ttl
    }
}

/// The shared level. The in-process implementation below suffices for a
/// single host; a networked store can be dropped in behind the same trait.
pub trait GlobalCache: Send + Sync {
    fn get(&self, key: &CacheKey) -> Option<CacheEntry>;
    fn put(&self, key: CacheKey, entry: CacheEntry);
    fn clear(&self);
}

/// Shared in-process global cache.
#[derive(Default)]
pub struct InProcessGlobalCache {
    entries: Mutex<HashMap<CacheKey, CacheEntry>>,
}

impl InProcessGlobalCache {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }
}

impl GlobalCache for InProcessGlobalCache {
    fn get(&self, key: &CacheKey) -> Option<CacheEntry> {
        self.entries.lock().unwrap().get(key).cloned()
    }

    fn put(&self, key: CacheKey, entry: CacheEntry) {
        self.entries.lock().unwrap().insert(key, entry);
    }

    fn clear(&self) {
        self.entries.lock().unwrap().clear();
    }
}

struct LocalLevel {
    entries: HashMap<CacheKey, (CacheEntry, u64)>,
    capacity: usize,
    clock: u64,
}

impl LocalLevel {
    fn touch(&mut self, key: &CacheKey) -> Option<CacheEntry> {
        self.clock += 1;
        let clock = self.clock;
        self.entries.get_mut(key).map(|(entry, stamp)| {
            *stamp = clock;
            entry.clone()
        })
    }

    fn insert(&mut self, key: CacheKey, entry: CacheEntry) {
        self.clock += 1;
        if self.entries.len() >= self.capacity && !self.entries.contains_key(&key) {
            // evict the least recently used entry
            if let Some(victim) = self
                .entries
                .iter()
                .min_by_key(|(_, (_, stamp))| *stamp)
                .map(|(k, _)| k.clone())
            {
                self.entries.remove(&victim);
            }
        }
        self.entries.insert(key, (entry, self.clock));
    }
}

/// Local LRU level plus a handle to the shared global level.
pub struct AuthzCache {
    local: Mutex<LocalLevel>,
    global: Arc<dyn GlobalCache>,
    ttl: Duration,
}

impl AuthzCache {
    pub fn new(capacity: usize, ttl: Duration, global: Arc<dyn GlobalCache>) -> Self {
        AuthzCache {
            local: Mutex::new(LocalLevel {
                entries: HashMap::new(),
                capacity: capacity.max(1),
                clock: 0,
            }),
            global,
            ttl,
        }
    }

    /// Local level first, then global; a global hit is back-filled into the
    /// local level. Expired entries count as misses.
    pub fn lookup(&self, key: &CacheKey) -> Option<CacheEntry> {
        let mut local = self.local.lock().unwrap();
        if let Some(entry) = local.touch(key) {
            if !entry.expired(self.ttl) {
                return Some(entry);
            }
            local.entries.remove(key);
        }
        drop(local);

        let entry = self.global.get(key)?;
        if entry.expired(self.ttl) {
            return None;
        }
        self.local.lock().unwrap().insert(key.clone(), entry.clone());
        Some(entry)
    }

    /// Writes both levels.
    pub fn store(&self, key: CacheKey, entry: CacheEntry) {
        self.global.put(key.clone(), entry.clone());
        self.local.lock().unwrap().insert(key, entry);
    }

    /// Clears both levels.
    pub fn invalidate_all(&self) {
        self.local.lock().unwrap().entries.clear();
        self.global.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn key(tag: &str) -> CacheKey {
        CacheKey {
            user: ResourceId::new("u:u1").unwrap(),
            subject_parent_fingerprint: tag.to_string(),
            object: ResourceId::new("node:1").unwrap(),
            operation: "node.get".to_string(),
        }
    }

    fn entry() -> CacheEntry {
        CacheEntry {
            effective: Vec::new(),
            subject_attrs: BTreeMap::new(),
            object_attrs: BTreeMap::new(),
            inserted_at: Instant::now(),
        }
    }

    fn cache(ttl_ms: u64, capacity: usize) -> AuthzCache {
        AuthzCache::new(capacity, Duration::from_millis(ttl_ms), InProcessGlobalCache::new())
    }

    #[test]
    fn store_then_lookup_hits() {
        let c = cache(10_000, 8);
        assert!(c.lookup(&key("a")).is_none());
        c.store(key("a"), entry());
        assert!(c.lookup(&key("a")).is_some());
    }

    #[test]
    fn invalidate_all_clears_both_levels() {
        let c = cache(10_000, 8);
        c.store(key("a"), entry());
        c.invalidate_all();
        assert!(c.lookup(&key("a")).is_none());
    }

    #[test]
    fn zero_ttl_never_serves() {
        let c = cache(0, 8);
        c.store(key("a"), entry());
        assert!(c.lookup(&key("a")).is_none());
    }

    #[test]
    fn expiry_after_ttl() {
        let c = cache(20, 8);
        c.store(key("a"), entry());
        assert!(c.lookup(&key("a")).is_some());
        std::thread::sleep(Duration::from_millis(30));
        assert!(c.lookup(&key("a")).is_none());
    }

    #[test]
    fn global_hit_backfills_local() {
        let global = InProcessGlobalCache::new();
        let a = AuthzCache::new(8, Duration::from_secs(10), global.clone());
        let b = AuthzCache::new(8, Duration::from_secs(10), global);
        a.store(key("shared"), entry());
        // instance `b` never stored it locally but sees it via the global level
        assert!(b.lookup(&key("shared")).is_some());
        assert!(b.local.lock().unwrap().entries.contains_key(&key("shared")));
    }

    #[test]
    fn local_capacity_evicts_least_recently_used() {
        let c = cache(10_000, 2);
        c.store(key("a"), entry());
        c.store(key("b"), entry());
        c.lookup(&key("a"));
        c.store(key("c"), entry());
        let local = c.local.lock().unwrap();
        assert!(local.entries.contains_key(&key("a")));
        assert!(!local.entries.contains_key(&key("b")));
        assert!(local.entries.contains_key(&key("c")));
    }

    #[test]
    fn fingerprint_tracks_parent_subsets() {
        let mk = |parents: &[&str]| Subject {
            id: crate::model::SubjectId::new("s").unwrap(),
            user: ResourceId::new("u:u1").unwrap(),
            attributes: BTreeMap::new(),
            parents: parents.iter().map(|p| ResourceId::new(*p).unwrap()).collect(),
            request_attributes: BTreeMap::new(),
        };
        let object = ResourceId::new("node:1").unwrap();
        let full = CacheKey::for_request(&mk(&["root", "g:g1", "g:g2"]), &object, "node.get");
        let narrow = CacheKey::for_request(&mk(&["root", "g:g1"]), &object, "node.get");
        assert_ne!(full, narrow);
        let same = CacheKey::for_request(&mk(&["root", "g:g1", "g:g2"]), &object, "node.get");
        assert_eq!(full, same);
    }
}
