//! Total evaluation semantics. Missing attributes and incomparable types
//! collapse comparisons to false; evaluation never fails.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::{AttrRef, CmpOp, Expr, Namespace, Operand};
use crate::model::AttrValue;

/// Attribute sets a condition is evaluated against.
#[derive(Debug, Clone, Copy)]
pub struct EvaluationContext<'a> {
    pub subject_attrs: &'a BTreeMap<String, AttrValue>,
    pub object_attrs: &'a BTreeMap<String, AttrValue>,
    pub request_attrs: &'a BTreeMap<String, AttrValue>,
}

impl<'a> EvaluationContext<'a> {
    fn resolve(&self, attr: &AttrRef) -> Option<&'a AttrValue> {
        let map = match attr.namespace {
            Namespace::Subject => self.subject_attrs,
            Namespace::Object => self.object_attrs,
            Namespace::Request => self.request_attrs,
        };
        map.get(&attr.name)
    }
}

pub(super) fn evaluate(expr: &Expr, ctx: &EvaluationContext<'_>) -> bool {
    match expr {
        Expr::Literal(b) => *b,
        Expr::Not(inner) => !evaluate(inner, ctx),
        Expr::And(l, r) => evaluate(l, ctx) && evaluate(r, ctx),
        Expr::Or(l, r) => evaluate(l, ctx) || evaluate(r, ctx),
        Expr::Exists(attr) => ctx.resolve(attr).is_some(),
        Expr::Compare(lhs, op, rhs) => {
            match (operand_value(lhs, ctx), operand_value(rhs, ctx)) {
                (Some(l), Some(r)) => apply_cmp(l, *op, r),
                // an absent attribute makes any comparison false
                _ => false,
            }
        }
    }
}

fn operand_value<'a>(op: &'a Operand, ctx: &EvaluationContext<'a>) -> Option<&'a AttrValue> {
    match op {
        Operand::Attr(a) => ctx.resolve(a),
        Operand::Literal(v) => Some(v),
    }
}

/// Integers promote to floats in mixed numeric comparisons; text compares
/// byte-wise; booleans support equality only; anything else is incomparable
/// and yields false.
fn apply_cmp(lhs: &AttrValue, op: CmpOp, rhs: &AttrValue) -> bool {
    use AttrValue::*;
    let ordering = match (lhs, rhs) {
        (Int(a), Int(b)) => Some(a.cmp(b)),
        (Float(a), Float(b)) => a.partial_cmp(b),
        (Int(a), Float(b)) => (*a as f64).partial_cmp(b),
        (Float(a), Int(b)) => a.partial_cmp(&(*b as f64)),
        (Text(a), Text(b)) => Some(a.cmp(b)),
        (Bool(a), Bool(b)) => {
            return match op {
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
                _ => false,
            }
        }
        _ => None,
    };
    match ordering {
        Some(ordering) => match op {
            CmpOp::Eq => ordering == Ordering::Equal,
            CmpOp::Ne => ordering != Ordering::Equal,
            CmpOp::Lt => ordering == Ordering::Less,
            CmpOp::Le => ordering != Ordering::Greater,
            CmpOp::Gt => ordering == Ordering::Greater,
            CmpOp::Ge => ordering != Ordering::Less,
        },
        None => false,
    }
}
