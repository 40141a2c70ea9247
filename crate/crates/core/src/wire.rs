//! Wire request/response types, payload schemas and the administrative
//! dispatcher. The same dispatcher backs synchronous handling, asynchronous
//! consumption and log replay, so all three agree on semantics byte for
//! byte. Payload schemas are documented in `docs/wire.md`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::engine::Engine;
use crate::error::{EngineError, Result};
use crate::graph::DependencyKind;
use crate::model::{
    AttrValue, AttributeValue, PermissionType, Resource, ResourceId, ResourceKind, Subject,
    SubjectId,
};

pub const OPERATIONS: &[&str] = &[
    "resource.create",
    "resource.delete",
    "attribute.set",
    "attribute.remove",
    "dependency.add",
    "dependency.remove",
    "subject.register",
    "subject.request_attrs",
    "policy.assign",
    "policy.remove",
    "authz.authorize",
    "authz.explain",
    "admin.snapshot",
];

/// Operations that mutate engine state and therefore go through the writer
/// and the persistence log.
pub fn is_admin_op(op: &str) -> bool {
    matches!(
        op,
        "resource.create"
            | "resource.delete"
            | "attribute.set"
            | "attribute.remove"
            | "dependency.add"
            | "dependency.remove"
            | "subject.register"
            | "subject.request_attrs"
            | "policy.assign"
            | "policy.remove"
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub op: String,
    #[serde(default)]
    pub payload: Value,
    #[serde(default)]
    pub request_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub request_id: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<WireError>,
}

impl WireResponse {
    pub fn success(request_id: impl Into<String>, result: Value) -> Self {
        WireResponse { request_id: request_id.into(), ok: true, result: Some(result), error: None }
    }

    pub fn failure(request_id: impl Into<String>, err: &EngineError) -> Self {
        WireResponse {
            request_id: request_id.into(),
            ok: false,
            result: None,
            error: Some(WireError { code: err.code().to_string(), message: err.to_string(), detail: None }),
        }
    }
}

// ---- payload schemas ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttrPair {
    pub name: String,
    pub value: AttrValue,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResourceCreate {
    id: String,
    kind: ResourceKind,
    #[serde(default)]
    attributes: Vec<AttrPair>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResourceDelete {
    id: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeSet {
    resource: String,
    name: String,
    value: AttrValue,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeRemove {
    resource: String,
    name: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DependencyAdd {
    parent: String,
    child: String,
    kind: DependencyKind,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DependencyRemove {
    parent: String,
    child: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubjectRegister {
    user: String,
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    attributes: Option<Vec<String>>,
    #[serde(default)]
    parents: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubjectRequestAttrs {
    subject: String,
    #[serde(default)]
    attributes: Vec<AttrPair>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyAssign {
    id: String,
    operation: String,
    permission_type: PermissionType,
    condition: String,
    subject_scope: Vec<String>,
    object_scope: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyRemove {
    id: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuthzRequest {
    pub subject: String,
    pub object: String,
    pub operation: String,
}

fn parse_payload<T: serde::de::DeserializeOwned>(payload: &Value) -> Result<T> {
    serde_json::from_value(payload.clone())
        .map_err(|e| EngineError::MalformedPayload(e.to_string()))
}

fn rid(s: &str) -> Result<ResourceId> {
    ResourceId::new(s)
}

fn rid_set(ids: &[String]) -> Result<BTreeSet<ResourceId>> {
    ids.iter().map(|s| rid(s)).collect()
}

fn attr_values(pairs: Vec<AttrPair>) -> Result<Vec<AttributeValue>> {
    pairs.into_iter().map(|p| AttributeValue::new(p.name, p.value)).collect()
}

fn attrs_json(attrs: &BTreeMap<String, AttrValue>) -> Value {
    Value::Object(
        attrs
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::to_value(v).expect("attr value serializes")))
            .collect(),
    )
}

pub fn resource_view(r: &Resource) -> Value {
    json!({
        "id": r.id,
        "kind": r.kind,
        "attributes": attrs_json(&r.attributes),
    })
}

pub fn subject_view(s: &Subject) -> Value {
    json!({
        "id": s.id,
        "user": s.user,
        "attributes": attrs_json(&s.attributes),
        "parents": s.parents,
        "request_attributes": attrs_json(&s.request_attributes),
    })
}

/// Applies one administrative operation. Returns the result document and
/// the payload to log, which is the input payload with engine-assigned
/// identifiers filled in so that replay is deterministic.
pub fn apply_admin(engine: &mut Engine, op: &str, payload: &Value) -> Result<(Value, Value)> {
    match op {
        "resource.create" => {
            let p: ResourceCreate = parse_payload(payload)?;
            let resource =
                engine.create_resource(rid(&p.id)?, p.kind, attr_values(p.attributes)?)?;
            Ok((resource_view(&resource), payload.clone()))
        }
        "resource.delete" => {
            let p: ResourceDelete = parse_payload(payload)?;
            let (deleted, removed) = engine.delete_resource(&rid(&p.id)?)?;
            let removed_ids: Vec<&str> =
                removed.iter().map(|a| a.assignment.id.as_str()).collect();
            Ok((json!({ "deleted": deleted, "removed_assignments": removed_ids }), payload.clone()))
        }
        "attribute.set" => {
            let p: AttributeSet = parse_payload(payload)?;
            let resource =
                engine.set_attribute(&rid(&p.resource)?, AttributeValue::new(p.name, p.value)?)?;
            Ok((resource_view(&resource), payload.clone()))
        }
        "attribute.remove" => {
            let p: AttributeRemove = parse_payload(payload)?;
            let resource = engine.remove_attribute(&rid(&p.resource)?, &p.name)?;
            Ok((resource_view(&resource), payload.clone()))
        }
        "dependency.add" => {
            let p: DependencyAdd = parse_payload(payload)?;
            engine.add_dependency(&rid(&p.parent)?, &rid(&p.child)?, p.kind)?;
            Ok((json!({}), payload.clone()))
        }
        "dependency.remove" => {
            let p: DependencyRemove = parse_payload(payload)?;
            engine.remove_dependency(&rid(&p.parent)?, &rid(&p.child)?)?;
            Ok((json!({}), payload.clone()))
        }
        "subject.register" => {
            let p: SubjectRegister = parse_payload(payload)?;
            let id = p.id.as_deref().map(SubjectId::new).transpose()?;
            let attributes = p.attributes.map(|v| v.into_iter().collect());
            let parents = p.parents.as_deref().map(rid_set).transpose()?;
            let subject = engine.register_subject(id, &rid(&p.user)?, attributes, parents)?;
            // log the assigned id so replay regenerates nothing
            let mut logged = payload.clone();
            logged["id"] = json!(subject.id);
            Ok((subject_view(&subject), logged))
        }
        "subject.request_attrs" => {
            let p: SubjectRequestAttrs = parse_payload(payload)?;
            let subject = engine
                .set_request_attributes(&SubjectId::new(p.subject)?, attr_values(p.attributes)?)?;
            Ok((subject_view(&subject), payload.clone()))
        }
        "policy.assign" => {
            let p: PolicyAssign = parse_payload(payload)?;
            let stored = engine.create_assignment(
                &p.id,
                &p.operation,
                p.permission_type,
                &p.condition,
                rid_set(&p.subject_scope)?,
                rid_set(&p.object_scope)?,
            )?;
            Ok((serde_json::to_value(&*stored).expect("assignment serializes"), payload.clone()))
        }
        "policy.remove" => {
            let p: PolicyRemove = parse_payload(payload)?;
            let removed = engine.remove_assignment(&p.id)?;
            Ok((serde_json::to_value(&*removed).expect("assignment serializes"), payload.clone()))
        }
        other => Err(EngineError::UnknownOperation(other.to_string())),
    }
}

fn rid_set_from_slice(ids: &[String]) -> Result<BTreeSet<ResourceId>> {
    ids.iter().map(|s| ResourceId::new(s.as_str())).collect()
}

/// Parses an `authz.authorize` / `authz.explain` payload.
pub fn parse_authz(payload: &Value) -> Result<(SubjectId, ResourceId, String)> {
    let p: AuthzRequest = parse_payload(payload)?;
    Ok((SubjectId::new(p.subject)?, ResourceId::new(p.object)?, p.operation))
}
