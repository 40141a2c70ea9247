//! Engine-wide error type. Every variant maps onto a stable wire code
//! (see `docs/wire.md` for the registry).

use crate::condition::ParseError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("resource `{0}` is already registered")]
    DuplicateId(String),
    #[error("attribute name `{0}` appears more than once")]
    DuplicateAttributeName(String),
    #[error("invalid identifier `{0}`: {1}")]
    InvalidIdentifier(String, String),
    #[error("unknown resource `{0}`")]
    UnknownResource(String),
    #[error("`{0}` does not name a user resource")]
    UnknownUser(String),
    #[error("requested {kind} subset is not a subset of the user's {kind}s: `{offending}`")]
    NotASubset { kind: &'static str, offending: String },
    #[error("unknown subject `{0}`")]
    UnknownSubject(String),

    #[error("dependency endpoints must differ (`{0}`)")]
    SelfLoop(String),
    #[error("adding dependency {parent} -> {child} would create a cycle")]
    CycleDetected { parent: String, child: String },
    #[error("dependency {parent} -> {child} conflicts with an existing edge of the other kind")]
    MixedKindConflict { parent: String, child: String },
    #[error("dependency {parent} -> {child} already exists")]
    DuplicateEdge { parent: String, child: String },
    #[error("no dependency {parent} -> {child}")]
    UnknownEdge { parent: String, child: String },
    #[error("removing dependency {parent} -> {child} would cut `{child}` off from the root")]
    WouldOrphan { parent: String, child: String },
    #[error("the root resource cannot be deleted")]
    CannotDeleteRoot,

    #[error(transparent)]
    Condition(#[from] ParseError),

    #[error("an assignment with the same (operation, type, scopes) already exists: {0}")]
    DuplicateAssignment(String),
    #[error("scope references unknown resource `{0}`")]
    UnknownScopeResource(String),
    #[error("unknown policy assignment `{0}`")]
    UnknownAssignment(String),

    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("malformed payload: {0}")]
    MalformedPayload(String),

    #[error("storage full: {0}")]
    StorageFull(String),
    #[error("corrupt log after sequence {last_valid}: {reason}")]
    CorruptLog { last_valid: u64, reason: String },
    #[error("snapshot covers sequence {snapshot} but the log ends at {log_tail}")]
    SnapshotLogMismatch { snapshot: u64, log_tail: u64 },
    #[error("message sink unavailable: {0}")]
    SinkUnavailable(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("scenario script error at line {line}: {reason}")]
    ScriptParse { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl EngineError {
    /// Stable wire code for this error. The set of codes is closed; clients
    /// may match on them.
    pub fn code(&self) -> &'static str {
        use EngineError::*;
        match self {
            DuplicateId(_) => "DuplicateId",
            DuplicateAttributeName(_) => "DuplicateAttributeName",
            InvalidIdentifier(..) => "InvalidIdentifier",
            UnknownResource(_) => "UnknownResource",
            UnknownUser(_) => "UnknownUser",
            NotASubset { .. } => "NotASubset",
            UnknownSubject(_) => "UnknownSubject",
            SelfLoop(_) => "SelfLoop",
            CycleDetected { .. } => "CycleDetected",
            MixedKindConflict { .. } => "MixedKindConflict",
            DuplicateEdge { .. } => "DuplicateEdge",
            UnknownEdge { .. } => "UnknownEdge",
            WouldOrphan { .. } => "WouldOrphan",
            CannotDeleteRoot => "CannotDeleteRoot",
            Condition(e) => e.code(),
            DuplicateAssignment(_) => "DuplicateAssignment",
            UnknownScopeResource(_) => "UnknownScopeResource",
            UnknownAssignment(_) => "UnknownAssignment",
            UnknownOperation(_) => "UnknownOperation",
            MalformedPayload(_) => "MalformedPayload",
            StorageFull(_) => "StorageFull",
            CorruptLog { .. } => "CorruptLog",
            SnapshotLogMismatch { .. } => "SnapshotLogMismatch",
            SinkUnavailable(_) => "SinkUnavailable",
            InvalidConfig(_) => "InvalidConfig",
            ScriptParse { .. } => "ScriptParseError",
            Io(_) => "IoError",
        }
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
