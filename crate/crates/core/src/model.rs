//! Domain vocabulary: resources, attributes, subjects, permissions, policies
//! and decisions, together with their local invariants. Graph structure and
//! evaluation live elsewhere.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::condition::Condition;
use crate::error::{EngineError, Result};

/// Identifier of the distinguished root resource every engine starts with.
pub const ROOT_ID: &str = "root";

/// Opaque, caller-supplied resource identifier. Non-empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceId(String);

impl ResourceId {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if value.is_empty() {
            return Err(EngineError::InvalidIdentifier(
                value,
                "resource id must be non-empty".into(),
            ));
        }
        Ok(ResourceId(value))
    }

    pub fn root() -> Self {
        ResourceId(ROOT_ID.to_string())
    }

    pub fn is_root(&self) -> bool {
        self.0 == ROOT_ID
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for ResourceId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Opaque subject (session) identifier. Non-empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubjectId(String);

impl SubjectId {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if value.is_empty() {
            return Err(EngineError::InvalidIdentifier(
                value,
                "subject id must be non-empty".into(),
            ));
        }
        Ok(SubjectId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SubjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    User,
    Object,
}

/// An attribute value. Text, 64-bit signed integer, 64-bit float or boolean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Bool(b) => write!(f, "{b}"),
            AttrValue::Int(i) => write!(f, "{i}"),
            AttrValue::Float(x) => {
                let s = format!("{x}");
                // keep the float/integer distinction visible in round trips
                if s.contains(['.', 'e', 'E', 'n', 'i']) {
                    f.write_str(&s)
                } else {
                    write!(f, "{s}.0")
                }
            }
            AttrValue::Text(t) => {
                f.write_str("\"")?;
                for c in t.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        '\r' => f.write_str("\\r")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

/// A named attribute. Names follow `[A-Za-z_][A-Za-z0-9_.-]*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeValue {
    pub name: String,
    pub value: AttrValue,
}

impl AttributeValue {
    pub fn new(name: impl Into<String>, value: AttrValue) -> Result<Self> {
        let name = name.into();
        validate_attr_name(&name)?;
        Ok(AttributeValue { name, value })
    }
}

pub fn validate_attr_name(name: &str) -> Result<()> {
    let mut chars = name.chars();
    let ok = match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {
            chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
        }
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(EngineError::InvalidIdentifier(
            name.to_string(),
            "attribute names match [A-Za-z_][A-Za-z0-9_.-]*".into(),
        ))
    }
}

/// Operation names are dot-separated identifier segments, e.g. `node.get`.
pub fn validate_operation_name(op: &str) -> Result<()> {
    let valid_segment = |s: &str| {
        let mut chars = s.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-'))
            }
            _ => false,
        }
    };
    if !op.is_empty() && op.split('.').all(valid_segment) {
        Ok(())
    } else {
        Err(EngineError::InvalidIdentifier(
            op.to_string(),
            "operation names are dot-separated identifiers, e.g. `node.get`".into(),
        ))
    }
}

/// Collects attributes into a name-keyed map, rejecting duplicate names.
pub fn attrs_to_map(attrs: Vec<AttributeValue>) -> Result<BTreeMap<String, AttrValue>> {
    let mut map = BTreeMap::new();
    for attr in attrs {
        if map.insert(attr.name.clone(), attr.value).is_some() {
            return Err(EngineError::DuplicateAttributeName(attr.name));
        }
    }
    Ok(map)
}

/// A user or object node. Attributes are keyed by name, so a resource holds
/// at most one attribute per name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resource {
    pub id: ResourceId,
    pub kind: ResourceKind,
    pub attributes: BTreeMap<String, AttrValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PermissionType {
    Allow,
    Deny,
}

impl fmt::Display for PermissionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PermissionType::Allow => f.write_str("allow"),
            PermissionType::Deny => f.write_str("deny"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Permission {
    pub operation: String,
    pub permission_type: PermissionType,
}

impl Permission {
    pub fn new(operation: impl Into<String>, permission_type: PermissionType) -> Result<Self> {
        let operation = operation.into();
        validate_operation_name(&operation)?;
        Ok(Permission { operation, permission_type })
    }
}

/// A permission guarded by a condition over subject, object and request
/// attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub permission: Permission,
    pub condition: Condition,
}

/// A policy scoped to subjects and objects. Both scopes are non-empty;
/// multiple scope elements conjoin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAssignment {
    pub id: String,
    pub policy: Policy,
    pub subject_scope: BTreeSet<ResourceId>,
    pub object_scope: BTreeSet<ResourceId>,
}

impl PolicyAssignment {
    pub fn new(
        id: impl Into<String>,
        policy: Policy,
        subject_scope: BTreeSet<ResourceId>,
        object_scope: BTreeSet<ResourceId>,
    ) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(EngineError::InvalidIdentifier(
                id,
                "assignment id must be non-empty".into(),
            ));
        }
        if subject_scope.is_empty() || object_scope.is_empty() {
            return Err(EngineError::InvalidIdentifier(
                id,
                "subject and object scopes must be non-empty".into(),
            ));
        }
        Ok(PolicyAssignment { id, policy, subject_scope, object_scope })
    }
}

/// Three-valued authorization outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Allowed,
    Denied,
    Undefined,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Allowed => f.write_str("allowed"),
            Decision::Denied => f.write_str("denied"),
            Decision::Undefined => f.write_str("undefined"),
        }
    }
}

/// A user's session-like proxy. Attribute and parent sets are snapshots taken
/// at registration; only request attributes change afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: SubjectId,
    pub user: ResourceId,
    pub attributes: BTreeMap<String, AttrValue>,
    pub parents: BTreeSet<ResourceId>,
    pub request_attributes: BTreeMap<String, AttrValue>,
}

/// Resource and subject storage. Holds only per-entity invariants; graph
/// placement and scope bookkeeping are the engine's job.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
pub struct Registry {
    resources: BTreeMap<ResourceId, Resource>,
    subjects: BTreeMap<SubjectId, Subject>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create_resource(
        &mut self,
        id: ResourceId,
        kind: ResourceKind,
        attributes: Vec<AttributeValue>,
    ) -> Result<&Resource> {
        if self.resources.contains_key(&id) {
            return Err(EngineError::DuplicateId(id.to_string()));
        }
        let attributes = attrs_to_map(attributes)?;
        let resource = Resource { id: id.clone(), kind, attributes };
        Ok(self.resources.entry(id).or_insert(resource))
    }

    pub fn resource(&self, id: &ResourceId) -> Result<&Resource> {
        self.resources
            .get(id)
            .ok_or_else(|| EngineError::UnknownResource(id.to_string()))
    }

    pub fn contains(&self, id: &ResourceId) -> bool {
        self.resources.contains_key(id)
    }

    pub fn resources(&self) -> impl Iterator<Item = &Resource> {
        self.resources.values()
    }

    pub fn user_ids(&self) -> impl Iterator<Item = &ResourceId> {
        self.resources
            .values()
            .filter(|r| r.kind == ResourceKind::User)
            .map(|r| &r.id)
    }

    pub fn set_attribute(&mut self, id: &ResourceId, attr: AttributeValue) -> Result<&Resource> {
        let resource = self
            .resources
            .get_mut(id)
            .ok_or_else(|| EngineError::UnknownResource(id.to_string()))?;
        resource.attributes.insert(attr.name, attr.value);
        Ok(resource)
    }

    /// Removing an absent name is a no-op.
    pub fn remove_attribute(&mut self, id: &ResourceId, name: &str) -> Result<&Resource> {
        let resource = self
            .resources
            .get_mut(id)
            .ok_or_else(|| EngineError::UnknownResource(id.to_string()))?;
        resource.attributes.remove(name);
        Ok(resource)
    }

    /// Registers a subject for `user`. `user_parents` is the user's current
    /// parent set, supplied by the caller; omitted subsets default to the
    /// full attribute/parent sets. The subject snapshots both.
    pub fn register_subject(
        &mut self,
        id: SubjectId,
        user: &ResourceId,
        attribute_subset: Option<BTreeSet<String>>,
        parent_subset: Option<BTreeSet<ResourceId>>,
        user_parents: &BTreeSet<ResourceId>,
    ) -> Result<&Subject> {
        let resource = self
            .resources
            .get(user)
            .ok_or_else(|| EngineError::UnknownUser(user.to_string()))?;
        if resource.kind != ResourceKind::User {
            return Err(EngineError::UnknownUser(user.to_string()));
        }
        if self.subjects.contains_key(&id) {
            return Err(EngineError::DuplicateId(id.to_string()));
        }

        let attributes = match attribute_subset {
            None => resource.attributes.clone(),
            Some(names) => {
                let mut subset = BTreeMap::new();
                for name in names {
                    match resource.attributes.get(&name) {
                        Some(value) => {
                            subset.insert(name, value.clone());
                        }
                        None => {
                            return Err(EngineError::NotASubset {
                                kind: "attribute",
                                offending: name,
                            })
                        }
                    }
                }
                subset
            }
        };
        let parents = match parent_subset {
            None => user_parents.clone(),
            Some(requested) => {
                if let Some(extra) = requested.difference(user_parents).next() {
                    return Err(EngineError::NotASubset {
                        kind: "parent",
                        offending: extra.to_string(),
                    });
                }
                requested
            }
        };

        let subject = Subject {
            id: id.clone(),
            user: user.clone(),
            attributes,
            parents,
            request_attributes: BTreeMap::new(),
        };
        Ok(self.subjects.entry(id).or_insert(subject))
    }

    pub fn subject(&self, id: &SubjectId) -> Result<&Subject> {
        self.subjects
            .get(id)
            .ok_or_else(|| EngineError::UnknownSubject(id.to_string()))
    }

    pub fn subjects(&self) -> impl Iterator<Item = &Subject> {
        self.subjects.values()
    }

    /// Replaces the subject's request attributes wholesale.
    pub fn set_request_attributes(
        &mut self,
        id: &SubjectId,
        attrs: Vec<AttributeValue>,
    ) -> Result<&Subject> {
        let map = attrs_to_map(attrs)?;
        let subject = self
            .subjects
            .get_mut(id)
            .ok_or_else(|| EngineError::UnknownSubject(id.to_string()))?;
        subject.request_attributes = map;
        Ok(subject)
    }

    /// State-restore path: trusts the caller, no invariant re-checks.
    pub(crate) fn insert_resource_unchecked(&mut self, resource: Resource) {
        self.resources.insert(resource.id.clone(), resource);
    }

    pub(crate) fn insert_subject_unchecked(&mut self, subject: Subject) {
        self.subjects.insert(subject.id.clone(), subject);
    }

    /// Removes the given resources, subjects created by them, and prunes them
    /// from surviving subjects' parent snapshots.
    pub fn remove_resources(&mut self, ids: &BTreeSet<ResourceId>) {
        self.resources.retain(|id, _| !ids.contains(id));
        self.subjects.retain(|_, s| !ids.contains(&s.user));
        for subject in self.subjects.values_mut() {
            subject.parents.retain(|p| !ids.contains(p));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attr(name: &str, value: AttrValue) -> AttributeValue {
        AttributeValue::new(name, value).unwrap()
    }

    fn rid(s: &str) -> ResourceId {
        ResourceId::new(s).unwrap()
    }

    #[test]
    fn create_resource_with_attributes() {
        let mut reg = Registry::new();
        let r = reg
            .create_resource(
                rid("u:u1"),
                ResourceKind::User,
                vec![attr("role", AttrValue::Text("admin".into()))],
            )
            .unwrap();
        assert_eq!(r.attributes.len(), 1);

        let r = reg
            .create_resource(rid("node:9"), ResourceKind::Object, vec![])
            .unwrap();
        assert!(r.attributes.is_empty());

        let err = reg
            .create_resource(rid("u:u1"), ResourceKind::User, vec![])
            .unwrap_err();
        assert_eq!(err.code(), "DuplicateId");
    }

    #[test]
    fn duplicate_attribute_names_rejected() {
        let mut reg = Registry::new();
        let err = reg
            .create_resource(
                rid("n"),
                ResourceKind::Object,
                vec![attr("cpu", AttrValue::Int(8)), attr("cpu", AttrValue::Int(16))],
            )
            .unwrap_err();
        assert_eq!(err.code(), "DuplicateAttributeName");
    }

    #[test]
    fn set_attribute_upserts() {
        let mut reg = Registry::new();
        reg.create_resource(rid("node:1"), ResourceKind::Object, vec![])
            .unwrap();
        reg.set_attribute(&rid("node:1"), attr("cpu", AttrValue::Int(8)))
            .unwrap();
        let r = reg
            .set_attribute(&rid("node:1"), attr("cpu", AttrValue::Int(16)))
            .unwrap();
        assert_eq!(r.attributes.len(), 1);
        assert_eq!(r.attributes["cpu"], AttrValue::Int(16));

        let r = reg
            .set_attribute(&rid("node:1"), attr("region", AttrValue::Text("eu".into())))
            .unwrap();
        assert_eq!(r.attributes.len(), 2);

        let err = reg
            .set_attribute(&rid("ghost"), attr("x", AttrValue::Int(1)))
            .unwrap_err();
        assert_eq!(err.code(), "UnknownResource");
    }

    #[test]
    fn remove_attribute_is_idempotent() {
        let mut reg = Registry::new();
        reg.create_resource(
            rid("node:1"),
            ResourceKind::Object,
            vec![attr("cpu", AttrValue::Int(8))],
        )
        .unwrap();
        let r = reg.remove_attribute(&rid("node:1"), "cpu").unwrap();
        assert!(r.attributes.is_empty());
        let r = reg.remove_attribute(&rid("node:1"), "nonexistent").unwrap();
        assert!(r.attributes.is_empty());
        assert!(reg.remove_attribute(&rid("ghost"), "cpu").is_err());
    }

    #[test]
    fn subject_defaults_and_subsets() {
        let mut reg = Registry::new();
        reg.create_resource(
            rid("u:u2"),
            ResourceKind::User,
            vec![
                attr("role", AttrValue::Text("dev".into())),
                attr("team", AttrValue::Text("core".into())),
            ],
        )
        .unwrap();
        let parents: BTreeSet<_> = [rid("root"), rid("g:g1")].into();

        let s = reg
            .register_subject(SubjectId::new("s1").unwrap(), &rid("u:u2"), None, None, &parents)
            .unwrap();
        assert_eq!(s.attributes.len(), 2);
        assert_eq!(s.parents, parents);

        let s = reg
            .register_subject(
                SubjectId::new("s2").unwrap(),
                &rid("u:u2"),
                Some(["role".to_string()].into()),
                Some([rid("g:g1")].into()),
                &parents,
            )
            .unwrap();
        assert_eq!(s.attributes.len(), 1);
        assert_eq!(s.parents.len(), 1);

        let err = reg
            .register_subject(
                SubjectId::new("s3").unwrap(),
                &rid("u:u2"),
                Some(["notOwned".to_string()].into()),
                None,
                &parents,
            )
            .unwrap_err();
        assert_eq!(err.code(), "NotASubset");
    }

    #[test]
    fn subject_requires_user_kind() {
        let mut reg = Registry::new();
        reg.create_resource(rid("node:1"), ResourceKind::Object, vec![])
            .unwrap();
        let err = reg
            .register_subject(
                SubjectId::new("s1").unwrap(),
                &rid("node:1"),
                None,
                None,
                &BTreeSet::new(),
            )
            .unwrap_err();
        assert_eq!(err.code(), "UnknownUser");
    }

    #[test]
    fn subject_snapshots_do_not_track_user_changes() {
        let mut reg = Registry::new();
        reg.create_resource(
            rid("u:u1"),
            ResourceKind::User,
            vec![attr("role", AttrValue::Text("dev".into()))],
        )
        .unwrap();
        reg.register_subject(
            SubjectId::new("s1").unwrap(),
            &rid("u:u1"),
            None,
            None,
            &BTreeSet::new(),
        )
        .unwrap();
        reg.set_attribute(&rid("u:u1"), attr("role", AttrValue::Text("admin".into())))
            .unwrap();
        let s = reg.subject(&SubjectId::new("s1").unwrap()).unwrap();
        assert_eq!(s.attributes["role"], AttrValue::Text("dev".into()));
    }

    #[test]
    fn request_attributes_replace_wholesale() {
        let mut reg = Registry::new();
        reg.create_resource(rid("u:u1"), ResourceKind::User, vec![])
            .unwrap();
        let sid = SubjectId::new("s1").unwrap();
        reg.register_subject(sid.clone(), &rid("u:u1"), None, None, &BTreeSet::new())
            .unwrap();

        let s = reg
            .set_request_attributes(
                &sid,
                vec![
                    attr("ip", AttrValue::Text("10.0.0.4".into())),
                    attr("hour", AttrValue::Int(14)),
                ],
            )
            .unwrap();
        assert_eq!(s.request_attributes.len(), 2);

        let s = reg.set_request_attributes(&sid, vec![]).unwrap();
        assert!(s.request_attributes.is_empty());

        let err = reg
            .set_request_attributes(&SubjectId::new("nope").unwrap(), vec![])
            .unwrap_err();
        assert_eq!(err.code(), "UnknownSubject");
    }

    #[test]
    fn identifier_syntax() {
        assert!(validate_attr_name("role").is_ok());
        assert!(validate_attr_name("_x.y-z1").is_ok());
        assert!(validate_attr_name("9lives").is_err());
        assert!(validate_attr_name("").is_err());
        assert!(validate_attr_name("sp ace").is_err());

        assert!(validate_operation_name("node.get").is_ok());
        assert!(validate_operation_name("freenode.list").is_ok());
        assert!(validate_operation_name("deploy").is_ok());
        assert!(validate_operation_name("node..get").is_err());
        assert!(validate_operation_name(".get").is_err());
        assert!(validate_operation_name("").is_err());
    }
}
