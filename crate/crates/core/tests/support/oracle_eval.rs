//! Independent tree-walking evaluator used as an oracle for the monitor's
//! expression evaluation. Errors carry no detail: only their presence is
//! compared.

use std::collections::BTreeMap;

use polyrv::spec::{BinaryOp, Expr, MapValue, ScalarKind, UnaryOp, Value, ValueKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ov {
    B(bool),
    I(i64),
    S(String),
    /// Parameter text.
    T(String),
    M(MapValue),
}

pub type Fail = ();

fn int_of(v: &Ov) -> Result<i64, Fail> {
    match v {
        Ov::I(i) => Ok(*i),
        Ov::T(t) => t.parse().map_err(|_| ()),
        _ => Err(()),
    }
}

fn bool_of(v: &Ov) -> Result<bool, Fail> {
    match v {
        Ov::B(b) => Ok(*b),
        Ov::T(t) if t == "true" => Ok(true),
        Ov::T(t) if t == "false" => Ok(false),
        _ => Err(()),
    }
}

fn text_of(v: &Ov) -> Result<&str, Fail> {
    match v {
        Ov::S(s) | Ov::T(s) => Ok(s),
        _ => Err(()),
    }
}

fn is_map(v: &Ov) -> bool {
    matches!(v, Ov::M(_))
}

fn lift(v: Value) -> Ov {
    match v {
        Value::Bool(b) => Ov::B(b),
        Value::Int(i) => Ov::I(i),
        Value::Str(s) => Ov::S(s),
        Value::Map(m) => Ov::M(m),
    }
}

pub fn equals(l: &Ov, r: &Ov) -> Result<bool, Fail> {
    if is_map(l) || is_map(r) {
        return Err(());
    }
    let has = |f: fn(&Ov) -> bool| f(l) || f(r);
    if has(|v| matches!(v, Ov::I(_))) {
        if has(|v| matches!(v, Ov::B(_) | Ov::S(_))) {
            return Err(());
        }
        return Ok(int_of(l)? == int_of(r)?);
    }
    if has(|v| matches!(v, Ov::B(_))) {
        if has(|v| matches!(v, Ov::S(_))) {
            return Err(());
        }
        return Ok(bool_of(l)? == bool_of(r)?);
    }
    Ok(text_of(l)? == text_of(r)?)
}

pub fn less(l: &Ov, r: &Ov) -> Result<std::cmp::Ordering, Fail> {
    let has = |f: fn(&Ov) -> bool| f(l) || f(r);
    if has(|v| matches!(v, Ov::M(_) | Ov::B(_))) {
        return Err(());
    }
    if has(|v| matches!(v, Ov::I(_))) {
        if has(|v| matches!(v, Ov::S(_))) {
            return Err(());
        }
        return Ok(int_of(l)?.cmp(&int_of(r)?));
    }
    if let (Ov::T(a), Ov::T(b)) = (l, r) {
        if let (Ok(x), Ok(y)) = (a.parse::<i64>(), b.parse::<i64>()) {
            return Ok(x.cmp(&y));
        }
    }
    Ok(text_of(l)?.cmp(text_of(r)?))
}

fn slot(v: Ov, kind: ScalarKind) -> Result<Value, Fail> {
    Ok(match (kind, v) {
        (ScalarKind::Bool, v @ (Ov::B(_) | Ov::T(_))) => Value::Bool(bool_of(&v)?),
        (ScalarKind::Int, v @ (Ov::I(_) | Ov::T(_))) => Value::Int(int_of(&v)?),
        (ScalarKind::Str, Ov::S(s) | Ov::T(s)) => Value::Str(s),
        _ => return Err(()),
    })
}

fn key_of(v: &Ov) -> Result<String, Fail> {
    match v {
        Ov::I(i) => Ok(format!("{i}")),
        _ => text_of(v).map(str::to_string),
    }
}

pub fn eval(e: &Expr, env: &mut BTreeMap<String, Value>, params: &BTreeMap<String, String>) -> Result<Ov, Fail> {
    match e {
        Expr::Literal(v) => Ok(lift(v.clone())),
        Expr::Var(n) => env.get(n).cloned().map(lift).ok_or(()),
        Expr::Param(n) => params.get(n).cloned().map(Ov::T).ok_or(()),
        Expr::Index(b, k) => {
            let Ov::M(m) = eval(b, env, params)? else { return Err(()) };
            let key = key_of(&eval(k, env, params)?)?;
            Ok(lift(match m.entries.get(&key) {
                Some(v) => v.clone(),
                None => m.elem.default_value(),
            }))
        }
        Expr::Unary(UnaryOp::Not, x) => Ok(Ov::B(!bool_of(&eval(x, env, params)?)?)),
        Expr::Binary(op, l, r) => {
            let a = eval(l, env, params)?;
            match op {
                BinaryOp::And | BinaryOp::Or => {
                    let first = bool_of(&a)?;
                    if first == (*op == BinaryOp::Or) {
                        return Ok(Ov::B(first));
                    }
                    Ok(Ov::B(bool_of(&eval(r, env, params)?)?))
                }
                _ => {
                    let b = eval(r, env, params)?;
                    use std::cmp::Ordering::*;
                    Ok(Ov::B(match op {
                        BinaryOp::Eq => equals(&a, &b)?,
                        BinaryOp::Ne => !equals(&a, &b)?,
                        BinaryOp::Lt => less(&a, &b)? == Less,
                        BinaryOp::Le => less(&a, &b)? != Greater,
                        BinaryOp::Gt => less(&a, &b)? == Greater,
                        BinaryOp::Ge => less(&a, &b)? != Less,
                        _ => unreachable!(),
                    }))
                }
            }
        }
        Expr::Assign(n, x) => {
            let ValueKind::Scalar(kind) = env.get(n).ok_or(())?.kind() else { return Err(()) };
            let v = slot(eval(x, env, params)?, kind)?;
            env.insert(n.clone(), v.clone());
            Ok(lift(v))
        }
        Expr::AssignIndex(n, k, x) => {
            let ValueKind::Map(elem) = env.get(n).ok_or(())?.kind() else { return Err(()) };
            let key = key_of(&eval(k, env, params)?)?;
            let v = slot(eval(x, env, params)?, elem)?;
            if let Some(Value::Map(m)) = env.get_mut(n) {
                m.entries.insert(key, v.clone());
            }
            Ok(lift(v))
        }
        Expr::Seq(items) => {
            let mut last = Ov::B(true);
            for i in items {
                last = eval(i, env, params)?;
            }
            Ok(last)
        }
    }
}

/// Truth of a condition body.
pub fn holds(e: &Expr, env: &BTreeMap<String, Value>, params: &BTreeMap<String, String>) -> Result<bool, Fail> {
    let mut scratch = env.clone();
    bool_of(&eval(e, &mut scratch, params)?)
}
