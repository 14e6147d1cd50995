//! Evaluation of monitor-side bodies over an instance's state.
//!
//! Declaration parameters are wire strings and evaluate to `Text`, which
//! takes on the type its partner in an operation requires: numeric next to
//! an int, boolean next to a bool or in a logical context, textual next to a
//! string. Between two texts, ordering is numeric when both parse as ints and
//! lexical otherwise; equality is always textual.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::spec::{BinaryOp, Expr, MapValue, ScalarKind, UnaryOp, Value, ValueKind};

/// Monitor-side state of one instance.
pub type Env = BTreeMap<String, Value>;

/// Declaration parameter name to wire value.
pub type Bindings = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("type error: {0}")]
pub struct EvalError(pub String);

fn fail<T>(msg: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError(msg.into()))
}

/// A value produced during evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rt {
    Bool(bool),
    Int(i64),
    Str(String),
    /// Untyped wire string from a parameter.
    Text(String),
    Map(MapValue),
}

impl From<Value> for Rt {
    fn from(v: Value) -> Self {
        match v {
            Value::Bool(b) => Rt::Bool(b),
            Value::Int(i) => Rt::Int(i),
            Value::Str(s) => Rt::Str(s),
            Value::Map(m) => Rt::Map(m),
        }
    }
}

impl fmt::Display for Rt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rt::Bool(b) => write!(f, "{b}"),
            Rt::Int(i) => write!(f, "{i}"),
            Rt::Str(s) | Rt::Text(s) => write!(f, "{s:?}"),
            Rt::Map(m) => write!(f, "{}", Value::Map(m.clone())),
        }
    }
}

pub fn text_to_int(s: &str) -> Result<i64, EvalError> {
    s.parse().or_else(|_| fail(format!("parameter value {s:?} is not an int")))
}

pub fn text_to_bool(s: &str) -> Result<bool, EvalError> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => fail(format!("parameter value {s:?} is not a bool")),
    }
}

fn truth(v: &Rt) -> Result<bool, EvalError> {
    match v {
        Rt::Bool(b) => Ok(*b),
        Rt::Text(s) => text_to_bool(s),
        other => fail(format!("expected a bool, found {other}")),
    }
}

fn map_key(v: &Rt) -> Result<String, EvalError> {
    match v {
        Rt::Str(s) | Rt::Text(s) => Ok(s.clone()),
        Rt::Int(i) => Ok(i.to_string()),
        other => fail(format!("map key must be a string, found {other}")),
    }
}

/// Converts a value for storage in a slot of `kind`.
pub fn coerce(v: Rt, kind: ScalarKind) -> Result<Value, EvalError> {
    match (v, kind) {
        (Rt::Bool(b), ScalarKind::Bool) => Ok(Value::Bool(b)),
        (Rt::Int(i), ScalarKind::Int) => Ok(Value::Int(i)),
        (Rt::Str(s), ScalarKind::Str) => Ok(Value::Str(s)),
        (Rt::Text(s), ScalarKind::Bool) => text_to_bool(&s).map(Value::Bool),
        (Rt::Text(s), ScalarKind::Int) => text_to_int(&s).map(Value::Int),
        (Rt::Text(s), ScalarKind::Str) => Ok(Value::Str(s)),
        (v, k) => fail(format!("cannot store {v} in a {} slot", k.keyword())),
    }
}

fn equal(l: &Rt, r: &Rt) -> Result<bool, EvalError> {
    use Rt::*;
    match (l, r) {
        (Int(a), Int(b)) => Ok(a == b),
        (Int(a), Text(t)) | (Text(t), Int(a)) => Ok(*a == text_to_int(t)?),
        (Bool(a), Bool(b)) => Ok(a == b),
        (Bool(a), Text(t)) | (Text(t), Bool(a)) => Ok(*a == text_to_bool(t)?),
        (Str(a) | Text(a), Str(b) | Text(b)) => Ok(a == b),
        _ => fail(format!("cannot compare {l} with {r}")),
    }
}

fn order(l: &Rt, r: &Rt) -> Result<Ordering, EvalError> {
    use Rt::*;
    match (l, r) {
        (Int(a), Int(b)) => Ok(a.cmp(b)),
        (Int(a), Text(t)) => Ok(a.cmp(&text_to_int(t)?)),
        (Text(t), Int(b)) => Ok(text_to_int(t)?.cmp(b)),
        (Text(a), Text(b)) => match (a.parse::<i64>(), b.parse::<i64>()) {
            (Ok(x), Ok(y)) => Ok(x.cmp(&y)),
            _ => Ok(a.cmp(b)),
        },
        (Str(a), Str(b) | Text(b)) | (Text(a), Str(b)) => Ok(a.cmp(b)),
        _ => fail(format!("cannot order {l} and {r}")),
    }
}

fn state<'a>(env: &'a Env, name: &str) -> Result<&'a Value, EvalError> {
    env.get(name).ok_or_else(|| EvalError(format!("unknown state `{name}`")))
}

/// Evaluates `e`, applying any assignments to `env`.
pub fn eval_expr(e: &Expr, env: &mut Env, params: &Bindings) -> Result<Rt, EvalError> {
    match e {
        Expr::Literal(v) => Ok(v.clone().into()),
        Expr::Var(n) => Ok(state(env, n)?.clone().into()),
        Expr::Param(n) => params
            .get(n)
            .map(|s| Rt::Text(s.clone()))
            .ok_or_else(|| EvalError(format!("unbound parameter `{n}`"))),
        Expr::Index(base, key) => {
            let b = eval_expr(base, env, params)?;
            let k = map_key(&eval_expr(key, env, params)?)?;
            match b {
                Rt::Map(m) => Ok(m.get(&k).into()),
                other => fail(format!("cannot index {other}")),
            }
        }
        Expr::Unary(UnaryOp::Not, inner) => Ok(Rt::Bool(!truth(&eval_expr(inner, env, params)?)?)),
        Expr::Binary(BinaryOp::And, l, r) => {
            if !truth(&eval_expr(l, env, params)?)? {
                return Ok(Rt::Bool(false));
            }
            Ok(Rt::Bool(truth(&eval_expr(r, env, params)?)?))
        }
        Expr::Binary(BinaryOp::Or, l, r) => {
            if truth(&eval_expr(l, env, params)?)? {
                return Ok(Rt::Bool(true));
            }
            Ok(Rt::Bool(truth(&eval_expr(r, env, params)?)?))
        }
        Expr::Binary(op, l, r) => {
            let lv = eval_expr(l, env, params)?;
            let rv = eval_expr(r, env, params)?;
            let b = match op {
                BinaryOp::Eq => equal(&lv, &rv)?,
                BinaryOp::Ne => !equal(&lv, &rv)?,
                BinaryOp::Lt => order(&lv, &rv)? == Ordering::Less,
                BinaryOp::Gt => order(&lv, &rv)? == Ordering::Greater,
                BinaryOp::Le => order(&lv, &rv)? != Ordering::Greater,
                BinaryOp::Ge => order(&lv, &rv)? != Ordering::Less,
                BinaryOp::And | BinaryOp::Or => unreachable!("handled above"),
            };
            Ok(Rt::Bool(b))
        }
        Expr::Assign(n, v) => {
            let ValueKind::Scalar(kind) = state(env, n)?.kind() else {
                return fail(format!("cannot assign a whole map `{n}`"));
            };
            let value = coerce(eval_expr(v, env, params)?, kind)?;
            env.insert(n.clone(), value.clone());
            Ok(value.into())
        }
        Expr::AssignIndex(n, key, v) => {
            let elem = match state(env, n)? {
                Value::Map(m) => m.elem,
                other => return fail(format!("`{n}` holds {other}, not a map")),
            };
            let k = map_key(&eval_expr(key, env, params)?)?;
            let value = coerce(eval_expr(v, env, params)?, elem)?;
            if let Some(Value::Map(m)) = env.get_mut(n) {
                m.entries.insert(k, value.clone());
            }
            Ok(value.into())
        }
        Expr::Seq(items) => {
            let mut last = Rt::Bool(true);
            for item in items {
                last = eval_expr(item, env, params)?;
            }
            Ok(last)
        }
    }
}

/// Evaluates a condition body. `env` is left untouched.
pub fn eval_condition(e: &Expr, env: &Env, params: &Bindings) -> Result<bool, EvalError> {
    if e.has_assignment() {
        return fail("condition assigns to state");
    }
    let mut scratch = env.clone();
    truth(&eval_expr(e, &mut scratch, params)?)
}
