//! Static typing of monitor-side expressions.
//!
//! Event parameters arrive as untyped wire strings (`Text`). Text coerces to
//! whatever its partner in an operation requires: an int next to an int, a
//! bool in a logical context, a string next to a string.

use std::fmt;

use super::ast::{Expr, Locale, ScalarKind, UnaryOp, UponBlock, Value, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticType {
    Bool,
    Int,
    Str,
    Text,
    Map(ScalarKind),
}

impl StaticType {
    pub fn of_scalar(k: ScalarKind) -> Self {
        match k {
            ScalarKind::Bool => StaticType::Bool,
            ScalarKind::Int => StaticType::Int,
            ScalarKind::Str => StaticType::Str,
        }
    }

    pub fn of_kind(k: ValueKind) -> Self {
        match k {
            ValueKind::Scalar(s) => Self::of_scalar(s),
            ValueKind::Map(s) => StaticType::Map(s),
        }
    }

    pub fn is_boolish(self) -> bool {
        matches!(self, StaticType::Bool | StaticType::Text)
    }

    /// Whether a value of type `self` may be stored into a slot of kind `target`.
    pub fn assignable_to(self, target: ScalarKind) -> bool {
        self == StaticType::Text || self == Self::of_scalar(target)
    }
}

impl fmt::Display for StaticType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StaticType::Bool => f.write_str("bool"),
            StaticType::Int => f.write_str("int"),
            StaticType::Str => f.write_str("string"),
            StaticType::Text => f.write_str("parameter"),
            StaticType::Map(k) => write!(f, "{}[]", k.keyword()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeIssue {
    Undeclared(String),
    Mismatch(String),
}

/// Names visible inside one condition or action body.
pub struct Scope<'a> {
    pub block: &'a UponBlock,
    pub params: &'a [String],
}

impl Scope<'_> {
    fn state(&self, name: &str) -> Option<ValueKind> {
        self.block
            .state
            .iter()
            .find(|s| s.name == name && s.locale == Locale::MonitorSide)
            .map(|s| s.kind)
    }
}

fn literal_type(v: &Value) -> StaticType {
    StaticType::of_kind(v.kind())
}

pub fn eq_compatible(l: StaticType, r: StaticType) -> bool {
    use StaticType::*;
    match (l, r) {
        (Text, Map(_)) | (Map(_), _) => false,
        (Text, _) | (_, Text) => true,
        (a, b) => a == b,
    }
}

pub fn rel_compatible(l: StaticType, r: StaticType) -> bool {
    use StaticType::*;
    matches!(
        (l, r),
        (Int | Text, Int | Text) | (Str, Str | Text) | (Text, Str)
    )
}

pub fn check(e: &Expr, scope: &Scope<'_>) -> Result<StaticType, TypeIssue> {
    use StaticType::*;
    match e {
        Expr::Literal(v) => Ok(literal_type(v)),
        Expr::Var(n) => scope.state(n).map(StaticType::of_kind).ok_or_else(|| TypeIssue::Undeclared(n.clone())),
        Expr::Param(n) => {
            if scope.params.contains(n) {
                Ok(Text)
            } else {
                Err(TypeIssue::Undeclared(n.clone()))
            }
        }
        Expr::Index(base, key) => {
            let b = check(base, scope)?;
            let k = check(key, scope)?;
            let Map(elem) = b else {
                return Err(TypeIssue::Mismatch(format!("cannot index a {b}")));
            };
            if !matches!(k, Str | Text | Int) {
                return Err(TypeIssue::Mismatch(format!("map key must be a string, found {k}")));
            }
            Ok(StaticType::of_scalar(elem))
        }
        Expr::Unary(UnaryOp::Not, inner) => {
            let t = check(inner, scope)?;
            if t.is_boolish() {
                Ok(Bool)
            } else {
                Err(TypeIssue::Mismatch(format!("`!` applied to {t}")))
            }
        }
        Expr::Binary(op, l, r) => {
            let lt = check(l, scope)?;
            let rt = check(r, scope)?;
            let ok = if op.is_logical() {
                lt.is_boolish() && rt.is_boolish()
            } else if op.is_relational() {
                rel_compatible(lt, rt)
            } else {
                eq_compatible(lt, rt)
            };
            if ok {
                Ok(Bool)
            } else {
                Err(TypeIssue::Mismatch(format!("`{}` between {lt} and {rt}", op.symbol())))
            }
        }
        Expr::Assign(n, v) => {
            let target = scope.state(n).ok_or_else(|| TypeIssue::Undeclared(n.clone()))?;
            let ValueKind::Scalar(k) = target else {
                return Err(TypeIssue::Mismatch(format!("cannot assign a whole map `{n}`")));
            };
            let vt = check(v, scope)?;
            if vt.assignable_to(k) {
                Ok(StaticType::of_scalar(k))
            } else {
                Err(TypeIssue::Mismatch(format!("cannot assign {vt} to {} `{n}`", k.keyword())))
            }
        }
        Expr::AssignIndex(n, key, v) => {
            let target = scope.state(n).ok_or_else(|| TypeIssue::Undeclared(n.clone()))?;
            let ValueKind::Map(elem) = target else {
                return Err(TypeIssue::Mismatch(format!("`{n}` is not a map")));
            };
            let kt = check(key, scope)?;
            if !matches!(kt, Str | Text | Int) {
                return Err(TypeIssue::Mismatch(format!("map key must be a string, found {kt}")));
            }
            let vt = check(v, scope)?;
            if vt.assignable_to(elem) {
                Ok(StaticType::of_scalar(elem))
            } else {
                Err(TypeIssue::Mismatch(format!("cannot store {vt} in {}[] `{n}`", elem.keyword())))
            }
        }
        Expr::Seq(items) => {
            let mut last = Bool;
            for item in items {
                last = check(item, scope)?;
            }
            Ok(last)
        }
    }
}
