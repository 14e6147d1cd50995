//! Brute-force reference interpreter: walks the parsed script directly and
//! keeps every instance ever created in one flat list.

use std::collections::BTreeMap;

use polyrv::monitor::{Event, Reply, Request, RequestKind, Verdict};
use polyrv::spec::{ActionRef, Body, Locale, SpecAst, Value};

use super::oracle_eval::{eval, holds};

struct Instance {
    block: usize,
    key: String,
    env: BTreeMap<String, Value>,
    alive: bool,
}

pub struct Reference<'a> {
    ast: &'a SpecAst,
    instances: Vec<Instance>,
}

fn type_error(name: &str) -> String {
    format!("{name}: type error")
}

impl<'a> Reference<'a> {
    pub fn new(ast: &'a SpecAst) -> Self {
        Reference { ast, instances: Vec::new() }
    }

    fn live(&self, block: usize, key: &str) -> Option<usize> {
        self.instances.iter().position(|i| i.block == block && i.key == key && i.alive)
    }

    pub fn feed(&mut self, ev: &Event, respond: &mut dyn FnMut(&Request) -> Reply) -> Vec<Verdict> {
        let mut out = Vec::new();
        let key = ev.context_key.as_str();
        let blocks: Vec<usize> =
            (0..self.ast.upons.len()).filter(|b| self.ast.upons[*b].event(&ev.name).is_some()).collect();
        if blocks.is_empty() {
            out.push(Verdict::info(key, format!("unknown event {}", ev.name)));
        }
        'blocks: for b in blocks {
            let upon = &self.ast.upons[b];
            let decl = upon.event(&ev.name).unwrap();
            for p in &decl.params {
                match ev.params.get(p) {
                    Some(v) if *p == upon.context_var && v != key => {
                        out.push(Verdict::info(
                            key,
                            format!("{}: parameter {p}={v} disagrees with the context key", ev.name),
                        ));
                        continue 'blocks;
                    }
                    None if *p != upon.context_var => {
                        out.push(Verdict::info(key, format!("{}: missing parameter {p}", ev.name)));
                        continue 'blocks;
                    }
                    _ => {}
                }
            }
            let value_of = |p: &String| ev.params.get(p).unwrap_or(key).to_string();
            if upon.replication_event == ev.name {
                if self.live(b, key).is_none() {
                    let env = upon
                        .state
                        .iter()
                        .filter(|s| s.locale == Locale::MonitorSide)
                        .map(|s| (s.name.clone(), s.initial.clone().unwrap_or_else(|| s.kind.default_value())))
                        .collect();
                    self.instances.push(Instance { block: b, key: key.to_string(), env, alive: true });
                } else {
                    out.push(Verdict::info(
                        key,
                        format!("{}: replication event for a live instance, treated as ordinary", ev.name),
                    ));
                }
            } else if self.live(b, key).is_none() {
                out.push(Verdict::info(key, format!("event outside instance lifetime: {}", ev.name)));
                continue;
            }

            for rule in &upon.rules {
                let Some(idx) = self.live(b, key) else { break };
                if rule.event != ev.name {
                    continue;
                }
                let names = rule.bindings.clone().unwrap_or_else(|| decl.params.clone());
                let vars: BTreeMap<String, String> =
                    names.iter().cloned().zip(decl.params.iter().map(value_of)).collect();

                if let Some(c) = &rule.condition {
                    let cd = upon.condition(&c.name).unwrap();
                    let argv: Vec<String> =
                        c.args.clone().unwrap_or_else(|| cd.params.clone()).iter().map(|a| vars[a].clone()).collect();
                    let result = match (&cd.locale, &cd.body) {
                        (Locale::MonitorSide, Body::Expr(body)) => {
                            let params = cd.params.iter().cloned().zip(argv.iter().cloned()).collect();
                            match holds(body, &self.instances[idx].env, &params) {
                                Ok(h) => h,
                                Err(()) => {
                                    out.push(Verdict::violation(key, type_error(&c.name)));
                                    self.instances[idx].alive = false;
                                    break;
                                }
                            }
                        }
                        (Locale::SystemSide(label), _) => {
                            let req = Request {
                                kind: RequestKind::Condition,
                                component: label.clone(),
                                name: c.name.clone(),
                                context_key: key.to_string(),
                                args: argv.clone(),
                            };
                            match respond(&req) {
                                Reply::Condition(Ok(h)) => h,
                                Reply::Condition(Err(f)) => {
                                    out.push(Verdict::violation(key, format!("{}: {f}", c.name)));
                                    continue;
                                }
                                other => panic!("bad reply {other:?}"),
                            }
                        }
                        _ => unreachable!("validated"),
                    };
                    if result == c.negated {
                        continue;
                    }
                }

                match &rule.action {
                    ActionRef::Done => {
                        self.instances[idx].alive = false;
                        break;
                    }
                    ActionRef::Invoke { name, args } => {
                        let ad = upon.action(name).unwrap();
                        let argv: Vec<String> =
                            args.clone().unwrap_or_else(|| ad.params.clone()).iter().map(|a| vars[a].clone()).collect();
                        match (&ad.locale, &ad.body) {
                            (Locale::MonitorSide, Body::Expr(body)) => {
                                let params = ad.params.iter().cloned().zip(argv.iter().cloned()).collect();
                                if eval(body, &mut self.instances[idx].env, &params).is_err() {
                                    out.push(Verdict::violation(key, type_error(name)));
                                    self.instances[idx].alive = false;
                                    break;
                                }
                            }
                            (Locale::MonitorSide, Body::Opaque) => {
                                let shown: Vec<String> =
                                    ad.params.iter().zip(&argv).map(|(p, v)| format!("{p}={v}")).collect();
                                out.push(Verdict::violation(key, format!("{name}({})", shown.join(", "))));
                            }
                            (Locale::SystemSide(label), _) => {
                                let req = Request {
                                    kind: RequestKind::Action,
                                    component: label.clone(),
                                    name: name.clone(),
                                    context_key: key.to_string(),
                                    args: argv.clone(),
                                };
                                match respond(&req) {
                                    Reply::Action(Ok(())) => {}
                                    Reply::Action(Err(f)) => out.push(Verdict::violation(key, format!("{name}: {f}"))),
                                    other => panic!("bad reply {other:?}"),
                                }
                            }
                            _ => unreachable!("validated"),
                        }
                    }
                }
            }
        }
        out
    }

    pub fn run(ast: &SpecAst, events: &[Event], respond: &mut dyn FnMut(&Request) -> Reply) -> Vec<Verdict> {
        let mut r = Reference::new(ast);
        events.iter().flat_map(|e| r.feed(e, respond)).collect()
    }
}

/// Type-error verdict texts carry evaluator-specific detail; keep only the
/// declaration name.
pub fn normalise(v: &Verdict) -> Verdict {
    let mut v = v.clone();
    if let Some(i) = v.text.find(": type error") {
        v.text.truncate(i + ": type error".len());
    }
    v
}
