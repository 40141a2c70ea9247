//! Embeddable attribute-based authorization engine.
//!
//! Policies are attribute conditions scoped over a directed-acyclic resource
//! dependency graph; conflicts resolve by distance-based priority with
//! deny-overrides at the top. The crate ships the in-memory engine, a
//! condition language, durable event-log persistence with a transactional
//! outbox, a request/response service layer and a scenario/benchmark harness.

pub mod authz;
pub mod condition;
pub mod config;
pub mod engine;
pub mod error;
pub mod cache;
pub mod graph;
pub mod model;
pub mod persist;
pub mod store;

pub use condition::{Condition, EvaluationContext};
pub use error::{EngineError, Result};
pub use model::{
    AttrValue, AttributeValue, Decision, Permission, PermissionType, Policy, PolicyAssignment,
    Resource, ResourceId, ResourceKind, Subject, SubjectId,
};
