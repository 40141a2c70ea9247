//! The decision pipeline: per-assignment evaluation, max-subject-priority
//! filtering, then max-object-priority filtering, then deny-overrides.
//! Undefined means no surviving policy had a true condition; the configured
//! default is reported alongside, never folded in.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::condition::EvaluationContext;
use crate::config::DefaultDecision;
use crate::model::{AttrValue, Decision, PermissionType, PolicyAssignment};
use crate::store::EffectiveAssignment;

/// Pipeline stage at which an assignment dropped out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EliminationStage {
    ConditionUndefined,
    SubjectPriority,
    ObjectPriority,
}

/// One effective assignment as the pipeline saw it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub assignment_id: String,
    pub operation: String,
    pub permission_type: PermissionType,
    pub decision: Decision,
    pub subject_priority: i64,
    pub object_priority: i64,
    pub eliminated_at: Option<EliminationStage>,
}

/// Decision plus the default that applies when it is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuthzOutcome {
    pub decision: Decision,
    pub default_applied: Option<DefaultDecision>,
}

/// Condition evaluation mapped onto the three-valued decision: a true
/// condition yields the permission's polarity, a false one yields undefined.
pub fn pol_eval(assignment: &PolicyAssignment, ctx: &EvaluationContext<'_>) -> Decision {
    if assignment.policy.condition.evaluate(ctx) {
        match assignment.policy.permission.permission_type {
            PermissionType::Allow => Decision::Allowed,
            PermissionType::Deny => Decision::Denied,
        }
    } else {
        Decision::Undefined
    }
}

/// Runs the conflict-resolution pipeline over the effective set and returns
/// the decision together with the full elimination trace.
pub fn decide(
    effective: Vec<EffectiveAssignment>,
    subject_attrs: &BTreeMap<String, AttrValue>,
    object_attrs: &BTreeMap<String, AttrValue>,
    request_attrs: &BTreeMap<String, AttrValue>,
    default_decision: DefaultDecision,
) -> (AuthzOutcome, Vec<TraceEntry>) {
    let ctx = EvaluationContext { subject_attrs, object_attrs, request_attrs };

    // each condition is evaluated exactly once
    let mut trace: Vec<TraceEntry> = effective
        .iter()
        .map(|e| {
            let decision = pol_eval(&e.stored.assignment, &ctx);
            TraceEntry {
                assignment_id: e.stored.assignment.id.clone(),
                operation: e.stored.assignment.policy.permission.operation.clone(),
                permission_type: e.stored.assignment.policy.permission.permission_type,
                decision,
                subject_priority: e.subject_priority,
                object_priority: e.object_priority,
                eliminated_at: if decision == Decision::Undefined {
                    Some(EliminationStage::ConditionUndefined)
                } else {
                    None
                },
            }
        })
        .collect();

    let max_subject = trace
        .iter()
        .filter(|t| t.eliminated_at.is_none())
        .map(|t| t.subject_priority)
        .max();
    if let Some(max_subject) = max_subject {
        for t in trace.iter_mut() {
            if t.eliminated_at.is_none() && t.subject_priority < max_subject {
                t.eliminated_at = Some(EliminationStage::SubjectPriority);
            }
        }
    }

    let max_object = trace
        .iter()
        .filter(|t| t.eliminated_at.is_none())
        .map(|t| t.object_priority)
        .max();
    if let Some(max_object) = max_object {
        for t in trace.iter_mut() {
            if t.eliminated_at.is_none() && t.object_priority < max_object {
                t.eliminated_at = Some(EliminationStage::ObjectPriority);
            }
        }
    }

    let survivors: Vec<&TraceEntry> =
        trace.iter().filter(|t| t.eliminated_at.is_none()).collect();
    let decision = if survivors.is_empty() {
        Decision::Undefined
    } else if survivors.iter().any(|t| t.decision == Decision::Denied) {
        Decision::Denied
    } else {
        Decision::Allowed
    };

    let outcome = AuthzOutcome {
        decision,
        default_applied: (decision == Decision::Undefined).then_some(default_decision),
    };
    (outcome, trace)
}
