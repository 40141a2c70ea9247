//! The engine facade: one mutable state (registry + graph + policy store)
//! behind administrative operations and the read-only authorization entry
//! points. Cross-module effects live here: root anchoring on create,
//! cascade cleanup on delete, and rematerialization after graph changes.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::authz::{self, AuthzOutcome, TraceEntry};
use crate::condition::Condition;
use crate::config::{EngineConfig, Strategy};
use crate::error::{EngineError, Result};
use crate::graph::{DependencyKind, Rdg};
use crate::model::{
    AttributeValue, Permission, PermissionType, Policy, PolicyAssignment, Registry, Resource,
    ResourceId, ResourceKind, Subject, SubjectId,
};
use crate::store::{EffectiveAssignment, PolicyStore, StoredAssignment};

pub struct Engine {
    config: EngineConfig,
    registry: Registry,
    graph: Rdg,
    store: PolicyStore,
    subject_seq: u64,
}

impl Engine {
    /// A fresh engine holds only the root resource.
    pub fn new(config: EngineConfig) -> Self {
        let mut registry = Registry::new();
        registry
            .create_resource(ResourceId::root(), ResourceKind::Object, Vec::new())
            .expect("fresh registry accepts root");
        Engine {
            registry,
            graph: Rdg::new(),
            store: PolicyStore::new(config.strategy),
            subject_seq: 0,
            config,
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn graph(&self) -> &Rdg {
        &self.graph
    }

    pub fn store(&self) -> &PolicyStore {
        &self.store
    }

    /// Total reachability walks performed so far (see [`Rdg`]).
    pub fn traversal_count(&self) -> u64 {
        self.graph.traversal_count()
    }

    // ---- administrative operations ----

    /// Creates a resource and anchors it under the root with a composition
    /// edge, preserving root reachability. The anchor becomes redundant (and
    /// drops out of the transitive reduction) once real parents are added.
    pub fn create_resource(
        &mut self,
        id: ResourceId,
        kind: ResourceKind,
        attributes: Vec<AttributeValue>,
    ) -> Result<Resource> {
        let resource = self.registry.create_resource(id.clone(), kind, attributes)?.clone();
        self.graph.add_node(id.clone());
        self.graph
            .add_edge(&ResourceId::root(), &id, DependencyKind::Composition)
            .expect("anchor edge of a fresh node cannot fail");
        self.store.rematerialize(Some(&BTreeSet::from([id])), &self.registry, &self.graph);
        Ok(resource)
    }

    /// Deletes `r` and its transitive composition descendants, their
    /// attributes, incident edges and subjects, plus every assignment whose
    /// scope mentions a deleted resource. Returns the deleted resources and
    /// the removed assignments.
    pub fn delete_resource(
        &mut self,
        r: &ResourceId,
    ) -> Result<(BTreeSet<ResourceId>, Vec<Arc<StoredAssignment>>)> {
        if r.is_root() {
            return Err(EngineError::CannotDeleteRoot);
        }
        if !self.registry.contains(r) {
            return Err(EngineError::UnknownResource(r.to_string()));
        }
        let mut deleted = self.graph.composition_descendants(r)?;
        deleted.insert(r.clone());

        // survivors whose ancestry ran through the deleted set
        let mut affected = self.graph.descendants_of(&deleted);
        affected.extend(deleted.iter().cloned());

        let removed_assignments = self.store.remove_referencing(&deleted);
        self.registry.remove_resources(&deleted);
        self.graph.remove_nodes(&deleted);
        self.store.rematerialize(Some(&affected), &self.registry, &self.graph);
        Ok((deleted, removed_assignments))
    }

    pub fn set_attribute(&mut self, id: &ResourceId, attr: AttributeValue) -> Result<Resource> {
        Ok(self.registry.set_attribute(id, attr)?.clone())
    }

    pub fn remove_attribute(&mut self, id: &ResourceId, name: &str) -> Result<Resource> {
        Ok(self.registry.remove_attribute(id, name)?.clone())
    }

    pub fn add_dependency(
        &mut self,
        parent: &ResourceId,
        child: &ResourceId,
        kind: DependencyKind,
    ) -> Result<()> {
        for id in [parent, child] {
            if !self.registry.contains(id) {
                return Err(EngineError::UnknownResource(id.to_string()));
            }
        }
        self.graph.add_edge(parent, child, kind)?;
        self.rematerialize_below(child);
        Ok(())
    }

    pub fn remove_dependency(&mut self, parent: &ResourceId, child: &ResourceId) -> Result<()> {
        self.graph.remove_edge(parent, child)?;
        self.rematerialize_below(child);
        Ok(())
    }

    fn rematerialize_below(&mut self, child: &ResourceId) {
        let mut affected = self.graph.descendants_of(&BTreeSet::from([child.clone()]));
        affected.insert(child.clone());
        self.store.rematerialize(Some(&affected), &self.registry, &self.graph);
    }

    /// Registers a subject for `user`, snapshotting its attributes and
    /// parents (or the requested subsets). Without an explicit id the engine
    /// assigns a sequential one.
    pub fn register_subject(
        &mut self,
        id: Option<SubjectId>,
        user: &ResourceId,
        attribute_subset: Option<BTreeSet<String>>,
        parent_subset: Option<BTreeSet<ResourceId>>,
    ) -> Result<Subject> {
        if !self.registry.contains(user) {
            return Err(EngineError::UnknownUser(user.to_string()));
        }
        let id = match id {
            Some(id) => id,
            None => loop {
                self.subject_seq += 1;
                let candidate = SubjectId::new(format!("s:{}", self.subject_seq))?;
                if self.registry.subject(&candidate).is_err() {
                    break candidate;
                }
            },
        };
        let user_parents = self.graph.ancestors(user)?;
        Ok(self
            .registry
            .register_subject(id, user, attribute_subset, parent_subset, &user_parents)?
            .clone())
    }

    pub fn set_request_attributes(
        &mut self,
        id: &SubjectId,
        attrs: Vec<AttributeValue>,
    ) -> Result<Subject> {
        Ok(self.registry.set_request_attributes(id, attrs)?.clone())
    }

    pub fn create_assignment(
        &mut self,
        id: &str,
        operation: &str,
        permission_type: PermissionType,
        condition_source: &str,
        subject_scope: BTreeSet<ResourceId>,
        object_scope: BTreeSet<ResourceId>,
    ) -> Result<Arc<StoredAssignment>> {
        let condition =
            Condition::parse_with_limit(condition_source, self.config.condition_depth_limit)?;
        let policy = Policy { permission: Permission::new(operation, permission_type)?, condition };
        let pa = PolicyAssignment::new(id, policy, subject_scope, object_scope)?;
        self.store.insert(pa, &self.registry, &self.graph)
    }

    pub fn remove_assignment(&mut self, id: &str) -> Result<Arc<StoredAssignment>> {
        self.store.remove(id)
    }

    // ---- authorization reads ----

    pub fn effective_policies(
        &self,
        subject: &SubjectId,
        object: &ResourceId,
        operation: &str,
    ) -> Result<Vec<EffectiveAssignment>> {
        let subject = self.registry.subject(subject)?;
        if !self.registry.contains(object) {
            return Err(EngineError::UnknownResource(object.to_string()));
        }
        Ok(self.store.effective(subject, object, operation, &self.graph))
    }

    pub fn authorize(
        &self,
        subject: &SubjectId,
        object: &ResourceId,
        operation: &str,
    ) -> Result<AuthzOutcome> {
        Ok(self.explain(subject, object, operation)?.0)
    }

    /// Same pipeline as [`authorize`](Self::authorize) but keeps the full
    /// per-assignment trace with elimination stages.
    pub fn explain(
        &self,
        subject: &SubjectId,
        object: &ResourceId,
        operation: &str,
    ) -> Result<(AuthzOutcome, Vec<TraceEntry>)> {
        let effective = self.effective_policies(subject, object, operation)?;
        let subject = self.registry.subject(subject)?;
        let object = self.registry.resource(object)?;
        Ok(authz::decide(
            effective,
            &subject.attributes,
            &object.attributes,
            &subject.request_attributes,
            self.config.default_decision,
        ))
    }

    // ---- state capture / restore ----

    pub fn state(&self) -> EngineState {
        EngineState {
            resources: self.registry.resources().cloned().collect(),
            edges: self.graph.edges(),
            subjects: self.registry.subjects().cloned().collect(),
            assignments: self
                .store
                .iter()
                .map(|s| AssignmentState {
                    id: s.assignment.id.clone(),
                    operation: s.assignment.policy.permission.operation.clone(),
                    permission_type: s.assignment.policy.permission.permission_type,
                    condition: s.assignment.policy.condition.canonical(),
                    subject_scope: s.assignment.subject_scope.clone(),
                    object_scope: s.assignment.object_scope.clone(),
                })
                .collect(),
            subject_seq: self.subject_seq,
        }
    }

    /// Rebuilds an engine from captured state. The state is trusted (it came
    /// from `state()`); assignments are re-validated and re-materialized.
    pub fn from_state(state: EngineState, config: EngineConfig) -> Result<Self> {
        let mut registry = Registry::new();
        let mut graph = Rdg::new();
        for resource in state.resources {
            if !resource.id.is_root() {
                graph.add_node(resource.id.clone());
            }
            registry.insert_resource_unchecked(resource);
        }
        for (parent, child, kind) in state.edges {
            graph.add_edge(&parent, &child, kind)?;
        }
        for subject in state.subjects {
            registry.insert_subject_unchecked(subject);
        }
        let mut store = PolicyStore::new(config.strategy);
        for a in state.assignments {
            let condition = Condition::parse_with_limit(&a.condition, config.condition_depth_limit)?;
            let policy = Policy {
                permission: Permission::new(&a.operation, a.permission_type)?,
                condition,
            };
            let pa = PolicyAssignment::new(&a.id, policy, a.subject_scope, a.object_scope)?;
            store.insert(pa, &registry, &graph)?;
        }
        Ok(Engine { config, registry, graph, store, subject_seq: state.subject_seq })
    }
}

/// Full engine state, deep-comparable and serializable for snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineState {
    pub resources: Vec<Resource>,
    pub edges: Vec<(ResourceId, ResourceId, DependencyKind)>,
    pub subjects: Vec<Subject>,
    pub assignments: Vec<AssignmentState>,
    pub subject_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentState {
    pub id: String,
    pub operation: String,
    pub permission_type: PermissionType,
    pub condition: String,
    pub subject_scope: BTreeSet<ResourceId>,
    pub object_scope: BTreeSet<ResourceId>,
}

impl Engine {
    /// Strategy actually in effect; used by harnesses comparing the two.
    pub fn strategy(&self) -> Strategy {
        self.config.strategy
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Decision;

    pub(crate) fn rid(s: &str) -> ResourceId {
        ResourceId::new(s).unwrap()
    }

    fn sid(s: &str) -> SubjectId {
        SubjectId::new(s).unwrap()
    }

    fn scope(ids: &[&str]) -> BTreeSet<ResourceId> {
        ids.iter().map(|s| rid(s)).collect()
    }

    /// The micro-cloud fixture: one organization with two users in groups,
    /// a topology of regions, clusters and nodes, one free node, and the
    /// three policies p1/p2/p3.
    pub(crate) fn micro_cloud(strategy: Strategy) -> Engine {
        let mut e = Engine::new(EngineConfig { strategy, ..EngineConfig::default() });
        use DependencyKind::{Aggregation, Composition};
        use ResourceKind::{Object, User};

        for (id, kind) in [
            ("fnode:1", Object),
            ("org:o1", Object),
            ("u:u1", User),
            ("u:u2", User),
            ("g:g1", Object),
            ("g:g2", Object),
            ("top:t1", Object),
            ("reg:r1", Object),
            ("reg:r2", Object),
            ("c:c1", Object),
            ("c:c2", Object),
            ("c:c3", Object),
            ("c:c4", Object),
            ("node:1", Object),
            ("node:2", Object),
            ("node:3", Object),
            ("node:4", Object),
        ] {
            e.create_resource(rid(id), kind, vec![]).unwrap();
        }

        for (p, c, k) in [
            ("org:o1", "g:g1", Aggregation),
            ("org:o1", "g:g2", Aggregation),
            ("org:o1", "u:u1", Aggregation),
            ("org:o1", "u:u2", Aggregation),
            ("g:g1", "u:u1", Aggregation),
            ("g:g1", "u:u2", Aggregation),
            ("g:g2", "u:u2", Aggregation),
            ("org:o1", "top:t1", Composition),
            ("top:t1", "reg:r1", Composition),
            ("top:t1", "reg:r2", Composition),
            ("reg:r1", "c:c1", Composition),
            ("reg:r1", "c:c2", Composition),
            ("reg:r2", "c:c3", Composition),
            ("reg:r2", "c:c4", Composition),
            ("c:c1", "node:1", Composition),
            ("c:c2", "node:2", Composition),
            ("c:c3", "node:3", Composition),
            ("c:c4", "node:4", Composition),
        ] {
            e.add_dependency(&rid(p), &rid(c), k).unwrap();
        }

        e.register_subject(Some(sid("s:u1")), &rid("u:u1"), None, None).unwrap();
        e.register_subject(Some(sid("s:u2")), &rid("u:u2"), None, None).unwrap();

        e.create_assignment(
            "p1",
            "freenode.list",
            PermissionType::Allow,
            "true",
            scope(&["root"]),
            scope(&["root"]),
        )
        .unwrap();
        e.create_assignment(
            "p2",
            "node.get",
            PermissionType::Allow,
            "true",
            scope(&["org:o1"]),
            scope(&["org:o1"]),
        )
        .unwrap();
        e.create_assignment(
            "p3",
            "node.get",
            PermissionType::Deny,
            "true",
            scope(&["g:g1", "g:g2"]),
            scope(&["c:c1"]),
        )
        .unwrap();
        e
    }

    #[test]
    fn fixture_parent_sets() {
        let e = micro_cloud(Strategy::Direct);
        assert_eq!(
            e.graph().ancestors(&rid("u:u2")).unwrap(),
            scope(&["root", "org:o1", "g:g1", "g:g2"])
        );
        assert_eq!(
            e.graph().ancestors(&rid("node:1")).unwrap(),
            scope(&["root", "org:o1", "top:t1", "reg:r1", "c:c1"])
        );
        assert!(e.graph().ancestors(&rid("root")).unwrap().is_empty());
    }

    #[test]
    fn fixture_composition_children() {
        let e = micro_cloud(Strategy::Direct);
        assert_eq!(
            e.graph().composition_descendants(&rid("top:t1")).unwrap(),
            scope(&["reg:r1", "reg:r2", "c:c1", "c:c2", "c:c3", "c:c4", "node:1", "node:2", "node:3", "node:4"])
        );
        assert!(e.graph().composition_descendants(&rid("node:1")).unwrap().is_empty());
        // group members hang on aggregation edges, so deletion never cascades
        assert!(e.graph().composition_descendants(&rid("g:g1")).unwrap().is_empty());
    }

    #[test]
    fn fixture_distances_in_reduction() {
        let e = micro_cloud(Strategy::Direct);
        // the direct org -> u:u2 membership edge is redundant in the
        // reduction; distance runs through the groups
        assert_eq!(e.graph().dist(&rid("org:o1"), &rid("u:u2")).unwrap(), Some(2));
        assert_eq!(e.graph().dist(&rid("g:g1"), &rid("u:u2")).unwrap(), Some(1));
        assert_eq!(e.graph().dist(&rid("u:u2"), &rid("org:o1")).unwrap(), None);
        assert_eq!(e.graph().dist(&rid("root"), &rid("u:u2")).unwrap(), Some(3));
    }

    fn worked_example(strategy: Strategy) {
        let e = micro_cloud(strategy);
        let (outcome, trace) = e.explain(&sid("s:u2"), &rid("node:1"), "node.get").unwrap();
        assert_eq!(outcome.decision, Decision::Denied);
        assert!(outcome.default_applied.is_none());

        let p2 = trace.iter().find(|t| t.assignment_id == "p2").unwrap();
        let p3 = trace.iter().find(|t| t.assignment_id == "p3").unwrap();
        assert_eq!(p2.subject_priority, -2);
        assert_eq!(p3.subject_priority, -1);
        assert_eq!(p2.eliminated_at, Some(crate::authz::EliminationStage::SubjectPriority));
        assert_eq!(p3.eliminated_at, None);
    }

    #[test]
    fn worked_example_direct() {
        worked_example(Strategy::Direct);
    }

    #[test]
    fn worked_example_materialized() {
        worked_example(Strategy::Materialized);
    }

    #[test]
    fn effective_sets_match_the_fixture() {
        let e = micro_cloud(Strategy::Direct);
        let ids = |subject: &str, object: &str, op: &str| {
            let mut v: Vec<String> = e
                .effective_policies(&sid(subject), &rid(object), op)
                .unwrap()
                .into_iter()
                .map(|ea| ea.stored.assignment.id.clone())
                .collect();
            v.sort();
            v
        };
        assert_eq!(ids("s:u2", "node:1", "node.get"), ["p2", "p3"]);
        // u:u1 is not a member of g:g2
        assert_eq!(ids("s:u1", "node:1", "node.get"), ["p2"]);
        assert!(ids("s:u1", "fnode:1", "node.get").is_empty());
    }

    #[test]
    fn root_scope_grants_all_users() {
        let e = micro_cloud(Strategy::Direct);
        for s in ["s:u1", "s:u2"] {
            let outcome = e.authorize(&sid(s), &rid("fnode:1"), "freenode.list").unwrap();
            assert_eq!(outcome.decision, Decision::Allowed);
        }
    }

    #[test]
    fn undefined_gets_the_configured_default() {
        let e = micro_cloud(Strategy::Direct);
        let outcome = e.authorize(&sid("s:u1"), &rid("fnode:1"), "node.get").unwrap();
        assert_eq!(outcome.decision, Decision::Undefined);
        assert_eq!(outcome.default_applied, Some(crate::config::DefaultDecision::Deny));
    }

    #[test]
    fn removing_p3_flips_the_worked_example() {
        let mut e = micro_cloud(Strategy::Direct);
        e.remove_assignment("p3").unwrap();
        let outcome = e.authorize(&sid("s:u2"), &rid("node:1"), "node.get").unwrap();
        assert_eq!(outcome.decision, Decision::Allowed);
        assert!(matches!(
            e.remove_assignment("p3").unwrap_err(),
            EngineError::UnknownAssignment(_)
        ));
        // key freed: identical assignment can be recreated
        e.create_assignment(
            "p3",
            "node.get",
            PermissionType::Deny,
            "true",
            scope(&["g:g1", "g:g2"]),
            scope(&["c:c1"]),
        )
        .unwrap();
    }

    #[test]
    fn duplicate_assignment_key_excludes_condition() {
        let mut e = micro_cloud(Strategy::Direct);
        let err = e
            .create_assignment(
                "p1-again",
                "freenode.list",
                PermissionType::Allow,
                "exists(subject.role)",
                scope(&["root"]),
                scope(&["root"]),
            )
            .unwrap_err();
        assert_eq!(err.code(), "DuplicateAssignment");
    }

    #[test]
    fn cascading_delete_of_the_topology() {
        let mut e = micro_cloud(Strategy::Direct);
        let (deleted, removed) = e.delete_resource(&rid("top:t1")).unwrap();
        assert_eq!(deleted.len(), 11);
        assert_eq!(removed.len(), 1);
        assert_eq!(removed[0].assignment.id, "p3");

        let err = e.authorize(&sid("s:u2"), &rid("node:1"), "node.get").unwrap_err();
        assert_eq!(err.code(), "UnknownResource");

        // no surviving edge or scope mentions a deleted id
        for (p, c, _) in e.graph().edges() {
            assert!(!deleted.contains(&p) && !deleted.contains(&c));
        }
        for s in e.store().iter() {
            for r in s.assignment.subject_scope.iter().chain(s.assignment.object_scope.iter()) {
                assert!(!deleted.contains(r));
            }
        }
    }

    #[test]
    fn delete_leaf_and_root_guard() {
        let mut e = micro_cloud(Strategy::Direct);
        let (deleted, _) = e.delete_resource(&rid("node:4")).unwrap();
        assert_eq!(deleted, scope(&["node:4"]));
        assert_eq!(e.delete_resource(&rid("root")).unwrap_err().code(), "CannotDeleteRoot");
        assert_eq!(e.delete_resource(&rid("ghost")).unwrap_err().code(), "UnknownResource");
    }

    #[test]
    fn materialized_rows_follow_edge_changes() {
        let mut e = micro_cloud(Strategy::Materialized);
        let (subj, _) = e.store().materialized_rows("p3").unwrap();
        assert_eq!(subj.keys().map(|k| k.as_str()).collect::<Vec<_>>(), ["u:u2"]);

        // u:u1 joins g:g2 and becomes subject to p3
        e.add_dependency(&rid("g:g2"), &rid("u:u1"), DependencyKind::Aggregation).unwrap();
        let (subj, _) = e.store().materialized_rows("p3").unwrap();
        assert_eq!(subj.keys().map(|k| k.as_str()).collect::<Vec<_>>(), ["u:u1", "u:u2"]);

        // p1 is root-scoped: every user has a subject row
        let (subj, obj) = e.store().materialized_rows("p1").unwrap();
        assert_eq!(subj.keys().map(|k| k.as_str()).collect::<Vec<_>>(), ["u:u1", "u:u2"]);
        assert_eq!(obj.len(), e.registry().resources().count());
    }

    #[test]
    fn materialized_query_does_zero_traversals() {
        let e = micro_cloud(Strategy::Materialized);
        // subjects already registered; warm nothing, just measure the query
        let before = e.traversal_count();
        let effective = e.effective_policies(&sid("s:u2"), &rid("node:1"), "node.get").unwrap();
        assert_eq!(effective.len(), 2);
        let outcome = e.authorize(&sid("s:u2"), &rid("node:1"), "node.get").unwrap();
        assert_eq!(outcome.decision, Decision::Denied);
        assert_eq!(e.traversal_count(), before);
    }

    #[test]
    fn restricted_subject_parent_subset_narrows_scope() {
        let mut e = micro_cloud(Strategy::Direct);
        // subject of u:u2 that kept only g:g1 (not g:g2): p3 no longer applies
        e.register_subject(
            Some(sid("s:narrow")),
            &rid("u:u2"),
            None,
            Some(scope(&["root", "org:o1", "g:g1"])),
        )
        .unwrap();
        let outcome = e.authorize(&sid("s:narrow"), &rid("node:1"), "node.get").unwrap();
        assert_eq!(outcome.decision, Decision::Allowed);
    }

    #[test]
    fn subject_priority_is_zero_for_self_scope() {
        let mut e = micro_cloud(Strategy::Direct);
        e.create_assignment(
            "p-self",
            "node.get",
            PermissionType::Allow,
            "true",
            scope(&["u:u2"]),
            scope(&["root"]),
        )
        .unwrap();
        let (_, trace) = e.explain(&sid("s:u2"), &rid("node:1"), "node.get").unwrap();
        let entry = trace.iter().find(|t| t.assignment_id == "p-self").unwrap();
        assert_eq!(entry.subject_priority, 0);
    }

    #[test]
    fn state_roundtrip_preserves_decisions() {
        for strategy in [Strategy::Direct, Strategy::Materialized] {
            let e = micro_cloud(strategy);
            let state = e.state();
            let restored =
                Engine::from_state(state.clone(), e.config().clone()).unwrap();
            assert_eq!(restored.state(), state);
            let outcome = restored.authorize(&sid("s:u2"), &rid("node:1"), "node.get").unwrap();
            assert_eq!(outcome.decision, Decision::Denied);
        }
    }

    #[test]
    fn unknown_referents_error() {
        let e = micro_cloud(Strategy::Direct);
        assert_eq!(
            e.authorize(&sid("nobody"), &rid("node:1"), "node.get").unwrap_err().code(),
            "UnknownSubject"
        );
        assert_eq!(
            e.authorize(&sid("s:u1"), &rid("ghost"), "node.get").unwrap_err().code(),
            "UnknownResource"
        );
    }

    #[test]
    fn assignment_scope_must_exist() {
        let mut e = micro_cloud(Strategy::Direct);
        let err = e
            .create_assignment(
                "px",
                "node.get",
                PermissionType::Allow,
                "true",
                scope(&["ghost"]),
                scope(&["root"]),
            )
            .unwrap_err();
        assert_eq!(err.code(), "UnknownScopeResource");
    }

    #[test]
    fn condition_errors_surface_at_assignment_time() {
        let mut e = micro_cloud(Strategy::Direct);
        let err = e
            .create_assignment(
                "px",
                "node.get",
                PermissionType::Allow,
                "subject.role =",
                scope(&["root"]),
                scope(&["root"]),
            )
            .unwrap_err();
        assert_eq!(err.code(), "ConditionSyntaxError");
    }
}
