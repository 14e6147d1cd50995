//! Random scripts, event sequences and component replies.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::Rng;

use polyrv::monitor::{Event, Reply, Request, RequestKind, SystemFailure};
use polyrv::spec::*;
use polyrv::wire::{Body as WireBody, Params, Severity, WireMessage};

pub const SYSTEM_LABEL: &str = "sys";

fn pick<'a, T, R: Rng>(rng: &mut R, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty choice")
}

fn var(n: &str) -> Box<Expr> {
    Box::new(Expr::Var(n.into()))
}

fn param(n: &str) -> Box<Expr> {
    Box::new(Expr::Param(n.into()))
}

fn lit(v: Value) -> Box<Expr> {
    Box::new(Expr::Literal(v))
}

fn bin(op: BinaryOp, l: Box<Expr>, r: Box<Expr>) -> Expr {
    Expr::Binary(op, l, r)
}

/// Monitor-side state every generated block may use.
fn state_decls<R: Rng>(rng: &mut R) -> Vec<StateDecl> {
    let mut out = Vec::new();
    let mut add = |name: &str, kind: ValueKind, initial: Value| {
        out.push(StateDecl { name: name.into(), kind, locale: Locale::MonitorSide, initial: Some(initial) })
    };
    add("n", ValueKind::Scalar(ScalarKind::Int), Value::Int(rng.gen_range(0..3)));
    add("f", ValueKind::Scalar(ScalarKind::Bool), Value::Bool(rng.gen()));
    add("m", ValueKind::Map(ScalarKind::Bool), Value::Map(MapValue::empty(ScalarKind::Bool)));
    add("s", ValueKind::Scalar(ScalarKind::Str), Value::Str(String::new()));
    out
}

/// A condition body over state and the parameter `x`.
fn condition_body<R: Rng>(rng: &mut R) -> Expr {
    let atom = |rng: &mut R| -> Expr {
        match rng.gen_range(0..8) {
            0 => bin(BinaryOp::Eq, var("n"), param("x")),
            1 => bin(BinaryOp::Lt, var("n"), param("x")),
            2 => bin(BinaryOp::Ge, param("x"), lit(Value::Int(1))),
            3 => Expr::Index(var("m"), param("x")),
            4 => Expr::Unary(UnaryOp::Not, Box::new(Expr::Index(var("m"), param("x")))),
            5 => Expr::Var("f".into()),
            6 => bin(BinaryOp::Eq, var("s"), param("x")),
            _ => bin(BinaryOp::Ne, param("x"), lit(Value::Str("1".into()))),
        }
    };
    match rng.gen_range(0..4) {
        0 => bin(BinaryOp::And, Box::new(atom(rng)), Box::new(atom(rng))),
        1 => bin(BinaryOp::Or, Box::new(atom(rng)), Box::new(atom(rng))),
        _ => atom(rng),
    }
}

fn action_body<R: Rng>(rng: &mut R) -> Expr {
    let one = |rng: &mut R| -> Expr {
        match rng.gen_range(0..5) {
            0 => Expr::Assign("n".into(), param("x")),
            1 => Expr::AssignIndex("m".into(), param("x"), lit(Value::Bool(true))),
            2 => Expr::Assign("f".into(), Box::new(Expr::Unary(UnaryOp::Not, var("f")))),
            3 => Expr::Assign("s".into(), param("x")),
            _ => Expr::Assign("f".into(), Box::new(bin(BinaryOp::Le, var("n"), param("x")))),
        }
    };
    if rng.gen_bool(0.3) {
        Expr::Seq(vec![one(rng), one(rng)])
    } else {
        one(rng)
    }
}

fn callable(name: &str, locale: Locale, body: Body) -> CallableDecl {
    CallableDecl { name: name.into(), params: vec!["x".into()], locale, body }
}

fn event(name: &str, params: &[&str]) -> EventDecl {
    EventDecl {
        name: name.into(),
        params: params.iter().map(|s| s.to_string()).collect(),
        component: DEFAULT_COMPONENT.into(),
        trigger: Trigger { callable: format!("app.{name}"), args: params.iter().map(|s| s.to_string()).collect() },
    }
}

/// A valid script with at most 3 events and 3 rules in total, spread over
/// one or two blocks. Every event carries the context variable `k` first.
pub fn small_spec<R: Rng>(rng: &mut R) -> SpecAst {
    let two_blocks = rng.gen_bool(0.25);
    let names = ["e0", "e1", "e2"];
    let mut upons = Vec::new();
    if two_blocks {
        // e0 opens block 0, e1 opens block 1, e2 (if present) lives in both.
        let shared = rng.gen_bool(0.5);
        for b in 0..2 {
            let mut events = vec![event(names[b], &["k", "x"])];
            if shared {
                events.push(event("e2", &["k", "x"]));
            }
            upons.push(block(rng, &events, 1 + (b == 0 && !shared) as usize));
        }
        // Keep the total rule count within bounds.
        let total: usize = upons.iter().map(|u: &UponBlock| u.rules.len()).sum();
        assert!(total <= 3);
    } else {
        let n_events = rng.gen_range(1..=3);
        let events: Vec<EventDecl> = names[..n_events].iter().map(|n| event(n, &["k", "x"])).collect();
        let n_rules = rng.gen_range(1..=3);
        upons.push(block(rng, &events, n_rules));
    }
    let uses_system = upons.iter().any(|u| {
        u.conditions.iter().chain(&u.actions).any(|d| matches!(d.locale, Locale::SystemSide(_)))
    });
    SpecAst { components: if uses_system { vec![SYSTEM_LABEL.into()] } else { vec![] }, upons }
}

fn block<R: Rng>(rng: &mut R, events: &[EventDecl], n_rules: usize) -> UponBlock {
    let conditions = vec![
        callable("c0", Locale::MonitorSide, Body::Expr(condition_body(rng))),
        callable("c1", Locale::MonitorSide, Body::Expr(condition_body(rng))),
        callable("q", Locale::SystemSide(SYSTEM_LABEL.into()), Body::Opaque),
    ];
    let actions = vec![
        callable("a0", Locale::MonitorSide, Body::Expr(action_body(rng))),
        callable("a1", Locale::MonitorSide, Body::Expr(action_body(rng))),
        callable("rep", Locale::MonitorSide, Body::Opaque),
        callable("sa", Locale::SystemSide(SYSTEM_LABEL.into()), Body::Opaque),
    ];
    let mut rules = Vec::new();
    for i in 0..n_rules {
        let ev = pick(rng, events);
        let condition = match rng.gen_range(0..4) {
            0 => None,
            _ => Some(CondRef {
                negated: rng.gen_bool(0.3),
                name: pick(rng, &["c0", "c1", "q"]).to_string(),
                args: if rng.gen_bool(0.5) { None } else { Some(vec!["x".into()]) },
            }),
        };
        // The last rule closes the context so every block can end.
        let action = if i + 1 == n_rules || rng.gen_bool(0.2) {
            ActionRef::Done
        } else {
            ActionRef::Invoke {
                name: pick(rng, &["a0", "a1", "rep", "sa"]).to_string(),
                args: if rng.gen_bool(0.5) { None } else { Some(vec!["x".into()]) },
            }
        };
        rules.push(Rule {
            label: None,
            event: ev.name.clone(),
            bindings: if rng.gen_bool(0.5) { None } else { Some(ev.params.clone()) },
            condition,
            action,
        });
    }
    // Keep only declarations some rule uses, so generated scripts stay small.
    let used_cond: Vec<String> = rules.iter().filter_map(|r| r.condition.as_ref().map(|c| c.name.clone())).collect();
    let used_act: Vec<String> = rules
        .iter()
        .filter_map(|r| match &r.action {
            ActionRef::Invoke { name, .. } => Some(name.clone()),
            ActionRef::Done => None,
        })
        .collect();
    UponBlock {
        replication_event: events[0].name.clone(),
        context_var: "k".into(),
        state: state_decls(rng),
        events: events.to_vec(),
        conditions: conditions.into_iter().filter(|c| used_cond.contains(&c.name)).collect(),
        actions: actions.into_iter().filter(|a| used_act.contains(&a.name)).collect(),
        rules,
    }
}

/// Events over `keys`, drawn from the script's event names plus an
/// occasional undeclared one.
pub fn events_for<R: Rng>(rng: &mut R, ast: &SpecAst, keys: &[&str], len: usize) -> Vec<Event> {
    let mut names: Vec<String> = ast.upons.iter().flat_map(|u| u.events.iter().map(|e| e.name.clone())).collect();
    names.sort();
    names.dedup();
    (0..len)
        .map(|_| {
            let key = *pick(rng, keys);
            let name = if rng.gen_bool(0.05) { "zz".to_string() } else { pick(rng, &names).clone() };
            let mut params = Params::new();
            params.insert("k", key);
            params.insert("x", *pick(rng, &["0", "1", "2"]));
            Event::new(name, key, params)
        })
        .collect()
}

/// Replies that depend only on the request and a seed, never on timing.
pub fn responder(seed: u64) -> impl FnMut(&Request) -> Reply {
    move |req: &Request| {
        let mut h = DefaultHasher::new();
        (seed, &req.name, &req.args, &req.context_key).hash(&mut h);
        let roll = h.finish() % 10;
        match req.kind {
            RequestKind::Condition if roll == 0 => Reply::Condition(Err(SystemFailure::Timeout)),
            RequestKind::Condition => Reply::Condition(Ok(roll % 2 == 0)),
            RequestKind::Action if roll == 0 => {
                Reply::Action(Err(SystemFailure::Disconnected(req.component.clone())))
            }
            RequestKind::Action => Reply::Action(Ok(())),
        }
    }
}

/// An arbitrary well-formed (not necessarily valid) script, for printer and
/// parser round trips.
pub fn any_ast<R: Rng>(rng: &mut R) -> SpecAst {
    let components = (0..rng.gen_range(0..3)).map(|i| format!("comp{i}")).collect();
    let upons = (0..rng.gen_range(1..3)).map(|_| any_block(rng)).collect();
    SpecAst { components, upons }
}

fn ident<R: Rng>(rng: &mut R, prefix: &str, n: usize) -> String {
    format!("{prefix}{}", rng.gen_range(0..n))
}

fn any_string<R: Rng>(rng: &mut R) -> String {
    let alphabet: Vec<char> = "ab yZ09\"\\\n\t_-".chars().collect();
    (0..rng.gen_range(0..6)).map(|_| *pick(rng, &alphabet)).collect()
}

fn any_literal<R: Rng>(rng: &mut R) -> Value {
    match rng.gen_range(0..3) {
        0 => Value::Bool(rng.gen()),
        1 => Value::Int(rng.gen_range(-1000..1000)),
        _ => Value::Str(any_string(rng)),
    }
}

fn any_locale<R: Rng>(rng: &mut R) -> Locale {
    match rng.gen_range(0..3) {
        0 => Locale::MonitorSide,
        1 => Locale::SystemSide(DEFAULT_COMPONENT.into()),
        _ => Locale::SystemSide(ident(rng, "comp", 3)),
    }
}

/// Expression without assignments; `params` become `Param`, other names `Var`.
fn any_expr<R: Rng>(rng: &mut R, params: &[String], depth: u32) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..3) {
            0 => Expr::Literal(any_literal(rng)),
            1 if !params.is_empty() => Expr::Param(pick(rng, params).clone()),
            _ => Expr::Var(ident(rng, "v", 3)),
        };
    }
    match rng.gen_range(0..3) {
        0 => Expr::Index(var(&ident(rng, "v", 3)), Box::new(any_expr(rng, params, depth - 1))),
        1 => Expr::Unary(UnaryOp::Not, Box::new(any_expr(rng, params, depth - 1))),
        _ => {
            let ops = [
                BinaryOp::Eq,
                BinaryOp::Ne,
                BinaryOp::Lt,
                BinaryOp::Gt,
                BinaryOp::Le,
                BinaryOp::Ge,
                BinaryOp::And,
                BinaryOp::Or,
            ];
            Expr::Binary(
                *pick(rng, &ops),
                Box::new(any_expr(rng, params, depth - 1)),
                Box::new(any_expr(rng, params, depth - 1)),
            )
        }
    }
}

fn any_statement<R: Rng>(rng: &mut R, params: &[String]) -> Expr {
    match rng.gen_range(0..3) {
        0 => Expr::Assign(ident(rng, "v", 3), Box::new(any_expr(rng, params, 2))),
        1 => Expr::AssignIndex(
            ident(rng, "v", 3),
            Box::new(any_expr(rng, params, 1)),
            Box::new(any_expr(rng, params, 2)),
        ),
        _ => any_expr(rng, params, 3),
    }
}

fn any_params<R: Rng>(rng: &mut R) -> Vec<String> {
    let mut p: Vec<String> = (0..rng.gen_range(0..3)).map(|i| format!("p{i}")).collect();
    p.shuffle(rng);
    p
}

fn any_body<R: Rng>(rng: &mut R, params: &[String], locale: &Locale) -> Body {
    match (locale, rng.gen_range(0..3)) {
        (_, 0) => Body::Opaque,
        (Locale::MonitorSide, _) if rng.gen_bool(0.3) => {
            Body::Expr(Expr::Seq((0..rng.gen_range(2..4)).map(|_| any_statement(rng, params)).collect()))
        }
        (Locale::MonitorSide, _) => Body::Expr(any_statement(rng, params)),
        _ => {
            let words = ["select", "x", "from", "blacklist", "where", "id", "=", "?"];
            let n = rng.gen_range(0..5);
            Body::Native((0..n).map(|_| *pick(rng, &words)).collect::<Vec<_>>().join(" "))
        }
    }
}

fn any_block<R: Rng>(rng: &mut R) -> UponBlock {
    let state = (0..rng.gen_range(0..4))
        .map(|i| {
            let scalar = *pick(rng, &[ScalarKind::Bool, ScalarKind::Int, ScalarKind::Str]);
            let kind = if rng.gen_bool(0.3) { ValueKind::Map(scalar) } else { ValueKind::Scalar(scalar) };
            let locale = any_locale(rng);
            let initial = match (&locale, kind) {
                (Locale::MonitorSide, ValueKind::Map(_)) => Some(kind.default_value()),
                (Locale::MonitorSide, ValueKind::Scalar(_)) if rng.gen_bool(0.5) => Some(kind.default_value()),
                (Locale::MonitorSide, ValueKind::Scalar(k)) => Some(match k {
                    ScalarKind::Bool => Value::Bool(rng.gen()),
                    ScalarKind::Int => Value::Int(rng.gen_range(-50..50)),
                    ScalarKind::Str => Value::Str(any_string(rng)),
                }),
                (_, ValueKind::Scalar(_)) if rng.gen_bool(0.2) => Some(kind.default_value()),
                _ => None,
            };
            StateDecl { name: format!("st{i}"), kind, locale, initial }
        })
        .collect();
    let events: Vec<EventDecl> = (0..rng.gen_range(1..4))
        .map(|i| {
            let params = any_params(rng);
            EventDecl {
                name: format!("ev{i}"),
                params: params.clone(),
                component: if rng.gen_bool(0.5) { DEFAULT_COMPONENT.into() } else { ident(rng, "comp", 3) },
                trigger: Trigger {
                    callable: (0..rng.gen_range(1..3)).map(|j| format!("t{j}")).collect::<Vec<_>>().join("."),
                    args: params,
                },
            }
        })
        .collect();
    let callables = |rng: &mut R, prefix: &str| -> Vec<CallableDecl> {
        (0..rng.gen_range(0..3))
            .map(|i| {
                let params = any_params(rng);
                let locale = any_locale(rng);
                let body = any_body(rng, &params, &locale);
                CallableDecl { name: format!("{prefix}{i}"), params, locale, body }
            })
            .collect()
    };
    let conditions = callables(rng, "cond");
    let actions = callables(rng, "act");
    let arg_list = |rng: &mut R| -> Option<Vec<String>> {
        if rng.gen_bool(0.5) {
            None
        } else {
            Some((0..rng.gen_range(0..3)).map(|_| ident(rng, "p", 3)).collect())
        }
    };
    let rules = (0..rng.gen_range(0..4))
        .map(|_| Rule {
            label: if rng.gen_bool(0.2) { Some(ident(rng, "label", 3)) } else { None },
            event: pick(rng, &events).name.clone(),
            bindings: arg_list(rng),
            condition: if rng.gen_bool(0.5) {
                Some(CondRef { negated: rng.gen(), name: ident(rng, "cond", 3), args: arg_list(rng) })
            } else {
                None
            },
            action: if rng.gen_bool(0.3) {
                ActionRef::Done
            } else {
                ActionRef::Invoke { name: ident(rng, "act", 3), args: arg_list(rng) }
            },
        })
        .collect();
    UponBlock {
        replication_event: events[0].name.clone(),
        context_var: events[0].params.first().cloned().unwrap_or_else(|| "ctx".into()),
        state,
        events,
        conditions,
        actions,
        rules,
    }
}

fn wire_text<R: Rng>(rng: &mut R, min: usize) -> String {
    let pool: Vec<char> = "azAZ09_-. \"\\/\n\t\u{0}\u{1f}é中😀".chars().collect();
    (0..rng.gen_range(min..min + 8)).map(|_| *pick(rng, &pool)).collect()
}

/// A message that passes `WireMessage::check`.
pub fn any_message<R: Rng>(rng: &mut R) -> WireMessage {
    let seq = if rng.gen_bool(0.1) { u64::MAX >> rng.gen_range(0..12) } else { rng.gen_range(1..10_000) };
    let id = |rng: &mut R| if rng.gen_bool(0.1) { u64::MAX } else { rng.gen_range(0..1000) };
    let args = |rng: &mut R| (0..rng.gen_range(0..4)).map(|_| wire_text(rng, 0)).collect::<Vec<_>>();
    let body = match rng.gen_range(0..8) {
        0 => WireBody::Hello { component_label: wire_text(rng, 1), protocol_version: wire_text(rng, 0) },
        1 => {
            let mut params = Params::new();
            for i in 0..rng.gen_range(0..5) {
                params.insert(format!("{}{i}", wire_text(rng, 0)), wire_text(rng, 0));
            }
            WireBody::Event { event_name: wire_text(rng, 1), context_key: wire_text(rng, 1), params }
        }
        2 => WireBody::CondReq {
            request_id: id(rng),
            condition_name: wire_text(rng, 0),
            context_key: wire_text(rng, 1),
            args: args(rng),
        },
        3 => WireBody::CondResp { request_id: id(rng), result: rng.gen() },
        4 => WireBody::ActReq {
            request_id: id(rng),
            action_name: wire_text(rng, 0),
            context_key: wire_text(rng, 1),
            args: args(rng),
        },
        5 => WireBody::ActAck { request_id: id(rng) },
        6 => WireBody::Verdict {
            context_key: wire_text(rng, 0),
            text: wire_text(rng, 0),
            severity: if rng.gen() { Severity::Info } else { Severity::Violation },
        },
        _ => WireBody::Bye,
    };
    WireMessage::new(seq, body)
}

/// Byte soup built from mangled valid frames and raw noise.
pub fn fuzz_input<R: Rng>(rng: &mut R) -> Vec<u8> {
    let mut bytes = polyrv::wire::encode(&any_message(rng)).expect("generated messages encode");
    match rng.gen_range(0..6) {
        0 => {
            for _ in 0..rng.gen_range(1..4) {
                let i = rng.gen_range(0..bytes.len());
                bytes[i] ^= 1 << rng.gen_range(0..8);
            }
        }
        1 => bytes.truncate(rng.gen_range(0..bytes.len())),
        2 => {
            let len = (rng.gen::<u32>() >> rng.gen_range(0..32)).to_be_bytes();
            bytes[..4].copy_from_slice(&len);
        }
        3 => {
            let payload: &[u8] = pick(
                rng,
                &[
                    b"{}".as_slice(),
                    b"[]",
                    b"{\"kind\":\"BYE\"}",
                    b"{\"kind\":\"NOPE\",\"seq\":1}",
                    b"{\"kind\":\"BYE\",\"seq\":-1}",
                    b"{\"kind\":\"EVENT\",\"seq\":1,\"context_key\":\"\",\"event_name\":\"e\",\"params\":{}}",
                    b"{\"kind\":\"BYE\",\"seq\":1}{\"kind\":\"BYE\",\"seq\":2}",
                    b"\xff\xfe{",
                ],
            );
            bytes = (payload.len() as u32).to_be_bytes().to_vec();
            bytes.extend_from_slice(payload);
        }
        4 => bytes = (0..rng.gen_range(0..64)).map(|_| rng.gen()).collect(),
        _ => {
            let extra = polyrv::wire::encode(&any_message(rng)).unwrap();
            let cut = rng.gen_range(0..extra.len());
            bytes.extend_from_slice(&extra[..cut]);
        }
    }
    bytes
}
