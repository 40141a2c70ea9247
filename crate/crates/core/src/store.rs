//! Policy assignment storage. Enforces the (operation, type, scopes)
//! uniqueness constraint and answers the effective-policy query under two
//! interchangeable strategies: direct graph traversal, or materialized
//! per-resource rows with precomputed priorities.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::config::Strategy;
use crate::error::{EngineError, Result};
use crate::graph::Rdg;
use crate::model::{PolicyAssignment, Registry, ResourceId, ResourceKind, Subject};

/// An assignment at rest, with the key the uniqueness constraint hangs on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoredAssignment {
    pub assignment: PolicyAssignment,
    pub canonical_key: String,
}

/// An assignment that applies to a concrete (subject, object) pair, with
/// the distance-derived priorities the conflict resolution uses.
#[derive(Debug, Clone)]
pub struct EffectiveAssignment {
    pub stored: Arc<StoredAssignment>,
    pub subject_priority: i64,
    pub object_priority: i64,
}

fn canonical_key(pa: &PolicyAssignment) -> String {
    // scopes are BTreeSets, so iteration order is already canonical
    serde_json::to_string(&(
        &pa.policy.permission.operation,
        &pa.policy.permission.permission_type,
        &pa.subject_scope,
        &pa.object_scope,
    ))
    .expect("assignment key serializes")
}

/// Materialized rows: assignment id -> applicable resource -> priority.
/// Subject-side rows exist for users, object-side rows for every resource.
#[derive(Debug, Default, Clone)]
struct Materialized {
    subject_side: BTreeMap<String, BTreeMap<ResourceId, i64>>,
    object_side: BTreeMap<String, BTreeMap<ResourceId, i64>>,
}

#[derive(Debug, Default, Clone)]
pub struct PolicyStore {
    assignments: BTreeMap<String, Arc<StoredAssignment>>,
    by_key: BTreeMap<String, String>,
    by_operation: BTreeMap<String, BTreeSet<String>>,
    materialized: Option<Materialized>,
}

impl PolicyStore {
    pub fn new(strategy: Strategy) -> Self {
        PolicyStore {
            materialized: match strategy {
                Strategy::Direct => None,
                Strategy::Materialized => Some(Materialized::default()),
            },
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<&Arc<StoredAssignment>> {
        self.assignments
            .get(id)
            .ok_or_else(|| EngineError::UnknownAssignment(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<StoredAssignment>> {
        self.assignments.values()
    }

    pub fn insert(
        &mut self,
        pa: PolicyAssignment,
        registry: &Registry,
        graph: &Rdg,
    ) -> Result<Arc<StoredAssignment>> {
        for id in pa.subject_scope.iter().chain(pa.object_scope.iter()) {
            if !registry.contains(id) {
                return Err(EngineError::UnknownScopeResource(id.to_string()));
            }
        }
        let key = canonical_key(&pa);
        if self.by_key.contains_key(&key) {
            return Err(EngineError::DuplicateAssignment(key));
        }
        if self.assignments.contains_key(&pa.id) {
            return Err(EngineError::DuplicateAssignment(format!(
                "assignment id `{}` is taken",
                pa.id
            )));
        }
        let id = pa.id.clone();
        let operation = pa.policy.permission.operation.clone();
        let stored = Arc::new(StoredAssignment { assignment: pa, canonical_key: key.clone() });

        if let Some(mat) = self.materialized.as_mut() {
            let (subj, obj) = materialize_assignment(&stored.assignment, registry, graph);
            mat.subject_side.insert(id.clone(), subj);
            mat.object_side.insert(id.clone(), obj);
        }
        self.by_key.insert(key, id.clone());
        self.by_operation.entry(operation).or_default().insert(id.clone());
        self.assignments.insert(id.clone(), stored);
        Ok(self.assignments[&id].clone())
    }

    pub fn remove(&mut self, id: &str) -> Result<Arc<StoredAssignment>> {
        let stored = self
            .assignments
            .remove(id)
            .ok_or_else(|| EngineError::UnknownAssignment(id.to_string()))?;
        self.by_key.remove(&stored.canonical_key);
        let op = &stored.assignment.policy.permission.operation;
        if let Some(set) = self.by_operation.get_mut(op) {
            set.remove(id);
            if set.is_empty() {
                self.by_operation.remove(op);
            }
        }
        if let Some(mat) = self.materialized.as_mut() {
            mat.subject_side.remove(id);
            mat.object_side.remove(id);
        }
        Ok(stored)
    }

    /// Removes every assignment whose subject or object scope mentions one
    /// of `ids`. Returns the removed assignments.
    pub fn remove_referencing(&mut self, ids: &BTreeSet<ResourceId>) -> Vec<Arc<StoredAssignment>> {
        let doomed: Vec<String> = self
            .assignments
            .values()
            .filter(|s| {
                s.assignment.subject_scope.iter().any(|r| ids.contains(r))
                    || s.assignment.object_scope.iter().any(|r| ids.contains(r))
            })
            .map(|s| s.assignment.id.clone())
            .collect();
        doomed
            .iter()
            .map(|id| self.remove(id).expect("assignment listed above"))
            .collect()
    }

    /// Effective policies for (subject, object, operation): the operation
    /// matches and both scopes are fully satisfied. Every subject-scope
    /// element must be a (retained) parent of the subject's user or the user
    /// itself; every object-scope element an ancestor of the object or the
    /// object itself.
    pub fn effective(
        &self,
        subject: &Subject,
        object: &ResourceId,
        operation: &str,
        graph: &Rdg,
    ) -> Vec<EffectiveAssignment> {
        let Some(candidates) = self.by_operation.get(operation) else {
            return Vec::new();
        };
        match self.materialized.as_ref() {
            Some(mat) => {
                let mut out = Vec::new();
                for id in candidates {
                    let Some(subject_priority) =
                        mat.subject_side[id].get(&subject.user).copied()
                    else {
                        continue;
                    };
                    let Some(object_priority) = mat.object_side[id].get(object).copied() else {
                        continue;
                    };
                    let stored = &self.assignments[id];
                    // subjects may be registered with a restricted parent
                    // subset; that restriction is a query-time filter
                    let scope_ok = stored.assignment.subject_scope.iter().all(|e| {
                        *e == subject.user || subject.parents.contains(e)
                    });
                    if scope_ok {
                        out.push(EffectiveAssignment {
                            stored: stored.clone(),
                            subject_priority,
                            object_priority,
                        });
                    }
                }
                out
            }
            None => {
                let user_ancestors = graph
                    .ancestors(&subject.user)
                    .expect("subject user exists in graph");
                let object_ancestors =
                    graph.ancestors(object).expect("object exists in graph");
                let mut out = Vec::new();
                for id in candidates {
                    let stored = &self.assignments[id];
                    let pa = &stored.assignment;
                    let subj_ok = pa.subject_scope.iter().all(|e| {
                        *e == subject.user
                            || (subject.parents.contains(e) && user_ancestors.contains(e))
                    });
                    if !subj_ok {
                        continue;
                    }
                    let obj_ok = pa
                        .object_scope
                        .iter()
                        .all(|e| e == object || object_ancestors.contains(e));
                    if !obj_ok {
                        continue;
                    }
                    out.push(EffectiveAssignment {
                        stored: stored.clone(),
                        subject_priority: scope_priority(&pa.subject_scope, &subject.user, graph),
                        object_priority: scope_priority(&pa.object_scope, object, graph),
                    });
                }
                out
            }
        }
    }

    /// Recomputes materialized rows. `affected = None` rebuilds everything;
    /// otherwise only rows targeting the affected resources are redone.
    /// No-op under the direct strategy.
    pub fn rematerialize(
        &mut self,
        affected: Option<&BTreeSet<ResourceId>>,
        registry: &Registry,
        graph: &Rdg,
    ) {
        let Some(mat) = self.materialized.as_mut() else {
            return;
        };
        match affected {
            None => {
                mat.subject_side.clear();
                mat.object_side.clear();
                for stored in self.assignments.values() {
                    let (subj, obj) = materialize_assignment(&stored.assignment, registry, graph);
                    mat.subject_side.insert(stored.assignment.id.clone(), subj);
                    mat.object_side.insert(stored.assignment.id.clone(), obj);
                }
            }
            Some(affected) => {
                for rows in mat.subject_side.values_mut() {
                    rows.retain(|r, _| !affected.contains(r));
                }
                for rows in mat.object_side.values_mut() {
                    rows.retain(|r, _| !affected.contains(r));
                }
                for target in affected {
                    let Ok(resource) = registry.resource(target) else {
                        continue; // deleted; rows were just dropped
                    };
                    let ancestors = graph.ancestors(target).expect("resource is in the graph");
                    for stored in self.assignments.values() {
                        let pa = &stored.assignment;
                        if resource.kind == ResourceKind::User {
                            if let Some(p) =
                                scope_priority_checked(&pa.subject_scope, target, &ancestors, graph)
                            {
                                mat.subject_side
                                    .get_mut(&pa.id)
                                    .expect("rows exist per assignment")
                                    .insert(target.clone(), p);
                            }
                        }
                        if let Some(p) =
                            scope_priority_checked(&pa.object_scope, target, &ancestors, graph)
                        {
                            mat.object_side
                                .get_mut(&pa.id)
                                .expect("rows exist per assignment")
                                .insert(target.clone(), p);
                        }
                    }
                }
            }
        }
    }

    /// Materialized priorities for an assignment, keyed by resource.
    /// Test/diagnostic accessor.
    pub fn materialized_rows(
        &self,
        id: &str,
    ) -> Option<(BTreeMap<ResourceId, i64>, BTreeMap<ResourceId, i64>)> {
        let mat = self.materialized.as_ref()?;
        Some((mat.subject_side.get(id)?.clone(), mat.object_side.get(id)?.clone()))
    }
}

/// Priority of `target` against a scope: the maximum over scope elements of
/// the negated reduction distance from the element down to `target`; an
/// element equal to the target contributes 0.
fn scope_priority(scope: &BTreeSet<ResourceId>, target: &ResourceId, graph: &Rdg) -> i64 {
    scope
        .iter()
        .filter_map(|e| {
            graph
                .dist(e, target)
                .expect("scope and target resources exist")
                .map(|d| -(d as i64))
        })
        .max()
        .expect("effective scope has at least one reachable element")
}

/// Scope check plus priority in one pass, given precomputed ancestors.
/// Returns None when the scope is not fully satisfied.
fn scope_priority_checked(
    scope: &BTreeSet<ResourceId>,
    target: &ResourceId,
    ancestors: &BTreeSet<ResourceId>,
    graph: &Rdg,
) -> Option<i64> {
    if !scope.iter().all(|e| e == target || ancestors.contains(e)) {
        return None;
    }
    Some(scope_priority(scope, target, graph))
}

fn materialize_assignment(
    pa: &PolicyAssignment,
    registry: &Registry,
    graph: &Rdg,
) -> (BTreeMap<ResourceId, i64>, BTreeMap<ResourceId, i64>) {
    let mut subject_side = BTreeMap::new();
    let mut object_side = BTreeMap::new();
    for resource in registry.resources() {
        let ancestors = graph.ancestors(&resource.id).expect("registered resource is in graph");
        if resource.kind == ResourceKind::User {
            if let Some(p) = scope_priority_checked(&pa.subject_scope, &resource.id, &ancestors, graph)
            {
                subject_side.insert(resource.id.clone(), p);
            }
        }
        if let Some(p) = scope_priority_checked(&pa.object_scope, &resource.id, &ancestors, graph) {
            object_side.insert(resource.id.clone(), p);
        }
    }
    (subject_side, object_side)
}
