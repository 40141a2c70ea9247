//! The policy condition language: boolean expressions over subject, object
//! and request attributes.
//!
//! Grammar:
//!
//! ```text
//! expr       = or ;
//! or         = and { "||" and } ;
//! and        = unary { "&&" unary } ;
//! unary      = "!" unary | primary ;
//! primary    = "(" expr ")" | "true" | "false" | "exists" "(" attr ")" | comparison ;
//! comparison = operand ("==" | "!=" | "<" | "<=" | ">" | ">=") operand ;
//! operand    = attr | literal ;
//! attr       = ("subject" | "object" | "request") "." identifier ;
//! literal    = quoted-text | integer | float | "true" | "false" ;
//! ```
//!
//! Evaluation is total: a comparison referencing an absent attribute is
//! false, as is a comparison between incomparable types. Integers promote to
//! floats when compared against them; text compares byte-wise. `exists`
//! tests attribute presence. Nesting depth is parser-limited.

mod eval;
mod parser;
mod token;

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use eval::EvaluationContext;

/// Default bound on expression nesting depth.
pub const DEFAULT_DEPTH_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Namespace {
    Subject,
    Object,
    Request,
}

impl fmt::Display for Namespace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Namespace::Subject => f.write_str("subject"),
            Namespace::Object => f.write_str("object"),
            Namespace::Request => f.write_str("request"),
        }
    }
}

/// A namespaced attribute reference such as `subject.role`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttrRef {
    pub namespace: Namespace,
    pub name: String,
}

impl fmt::Display for AttrRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.namespace, self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        })
    }
}

use crate::model::AttrValue;

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Attr(AttrRef),
    Literal(AttrValue),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(bool),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Exists(AttrRef),
    Compare(Operand, CmpOp, Operand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownNamespace,
}

/// Parse failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at {line}:{col}: {message}", kind = match .kind {
    ParseErrorKind::Syntax => "syntax error",
    ParseErrorKind::UnknownNamespace => "unknown namespace",
})]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self.kind {
            ParseErrorKind::Syntax => "ConditionSyntaxError",
            ParseErrorKind::UnknownNamespace => "UnknownNamespace",
        }
    }
}

/// A parsed condition. Keeps the original source alongside the expression
/// tree; equality is structural over the tree.
#[derive(Debug, Clone)]
pub struct Condition {
    source: String,
    ast: Expr,
}

impl Condition {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        Self::parse_with_limit(source, DEFAULT_DEPTH_LIMIT)
    }

    pub fn parse_with_limit(source: &str, depth_limit: usize) -> Result<Self, ParseError> {
        let ast = parser::parse(source, depth_limit)?;
        Ok(Condition { source: source.to_string(), ast })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    /// Whitespace-normalized, fully parenthesized form. Re-parsing it yields
    /// a structurally equal condition.
    pub fn canonical(&self) -> String {
        canonical_expr(&self.ast)
    }

    pub fn evaluate(&self, ctx: &EvaluationContext<'_>) -> bool {
        eval::evaluate(&self.ast, ctx)
    }
}

impl PartialEq for Condition {
    fn eq(&self, other: &Self) -> bool {
        self.ast == other.ast
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl Serialize for Condition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical())
    }
}

impl<'de> Deserialize<'de> for Condition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let source = String::deserialize(deserializer)?;
        Condition::parse(&source).map_err(D::Error::custom)
    }
}

fn canonical_operand(op: &Operand) -> String {
    match op {
        Operand::Attr(a) => a.to_string(),
        Operand::Literal(v) => v.to_string(),
    }
}

fn canonical_expr(expr: &Expr) -> String {
    match expr {
        Expr::Literal(b) => b.to_string(),
        Expr::Not(inner) => format!("!{}", canonical_expr(inner)),
        Expr::And(l, r) => format!("({} && {})", canonical_expr(l), canonical_expr(r)),
        Expr::Or(l, r) => format!("({} || {})", canonical_expr(l), canonical_expr(r)),
        Expr::Exists(a) => format!("exists({a})"),
        Expr::Compare(l, op, r) => {
            format!("({} {} {})", canonical_operand(l), op, canonical_operand(r))
        }
    }
}
