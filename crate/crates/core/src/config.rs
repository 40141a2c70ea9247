//! Boot-time engine configuration.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::condition::DEFAULT_DEPTH_LIMIT;

/// How policy assignments are stored and queried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Persist direct scope references only; every authorization traverses
    /// the graph for parents and priorities.
    Direct,
    /// Materialize applicable (assignment, resource) rows with precomputed
    /// priorities; authorization reads them back without traversals, at the
    /// cost of extra work on administrative updates.
    Materialized,
}

/// What an undefined decision falls back to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefaultDecision {
    Allow,
    Deny,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidationMode {
    /// Entries age out; administrative writes may be served stale for up to
    /// the TTL.
    TtlOnly,
    /// Every administrative write clears both cache levels.
    OnWrite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub strategy: Strategy,
    pub default_decision: DefaultDecision,
    pub cache_enabled: bool,
    #[serde(with = "duration_millis")]
    pub cache_ttl: Duration,
    pub cache_invalidation: InvalidationMode,
    pub cache_local_capacity: usize,
    pub condition_depth_limit: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            strategy: Strategy::Direct,
            default_decision: DefaultDecision::Deny,
            cache_enabled: false,
            cache_ttl: Duration::from_secs(30),
            cache_invalidation: InvalidationMode::TtlOnly,
            cache_local_capacity: 1024,
            condition_depth_limit: DEFAULT_DEPTH_LIMIT,
        }
    }
}

mod duration_millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}
