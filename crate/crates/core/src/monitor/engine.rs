//! Rule evaluation over parametric instances.
//!
//! Instances are keyed by (block index, context key). An [`Evaluation`] walks
//! one event through every block that declares it; when a rule needs a
//! component to answer, [`Engine::advance`] returns [`Poll::Pending`] and the
//! caller resumes it with the [`Reply`]. [`step`] drives an evaluation to
//! completion with a synchronous responder.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::eval::{eval_condition, eval_expr, Bindings, Env, EvalError};
use crate::compiler::{CentralConfig, CompiledAction, CompiledRule, CompiledUpon, Implementation};
use crate::wire::{Params, Severity};

/// An event as the monitor receives it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    pub name: String,
    pub context_key: String,
    pub params: Params,
}

impl Event {
    pub fn new(name: impl Into<String>, context_key: impl Into<String>, params: Params) -> Self {
        Event { name: name.into(), context_key: context_key.into(), params }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Verdict {
    pub context_key: String,
    pub severity: Severity,
    pub text: String,
}

impl Verdict {
    pub fn info(context_key: &str, text: impl Into<String>) -> Self {
        Verdict { context_key: context_key.to_string(), severity: Severity::Info, text: text.into() }
    }

    pub fn violation(context_key: &str, text: impl Into<String>) -> Self {
        Verdict { context_key: context_key.to_string(), severity: Severity::Violation, text: text.into() }
    }

    pub fn is_violation(&self) -> bool {
        self.severity == Severity::Violation
    }
}

/// Output line format: `VERDICT <severity> <context_key> <text>`.
impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VERDICT {} {} {}", self.severity, self.context_key, self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Directive {
    /// Ask component `component` to evaluate a system-side condition.
    QueryCondition { context_key: String, component: String, name: String, args: Vec<String> },
    /// Ask component `component` to run a system-side action.
    RunAction { context_key: String, component: String, name: String, args: Vec<String> },
    /// A monitor-side action ran against the instance.
    LocalAction { context_key: String, name: String, args: Vec<String> },
    EmitVerdict(Verdict),
    /// The instance ended.
    Terminate { context_key: String },
}

impl Directive {
    pub fn context_key(&self) -> &str {
        match self {
            Directive::QueryCondition { context_key, .. }
            | Directive::RunAction { context_key, .. }
            | Directive::LocalAction { context_key, .. }
            | Directive::Terminate { context_key } => context_key,
            Directive::EmitVerdict(v) => &v.context_key,
        }
    }

    pub fn verdict(&self) -> Option<&Verdict> {
        match self {
            Directive::EmitVerdict(v) => Some(v),
            _ => None,
        }
    }
}

/// Why a component could not answer a request.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SystemFailure {
    /// No connection carries the label.
    Unavailable(String),
    Timeout,
    Disconnected(String),
}

impl fmt::Display for SystemFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemFailure::Unavailable(l) => write!(f, "component unavailable: {l}"),
            SystemFailure::Timeout => f.write_str("no reply before the deadline"),
            SystemFailure::Disconnected(l) => write!(f, "component {l} disconnected"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RequestKind {
    Condition,
    Action,
}

/// Work a component must do before the evaluation can continue.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Request {
    pub kind: RequestKind,
    pub component: String,
    pub name: String,
    pub context_key: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    Condition(Result<bool, SystemFailure>),
    Action(Result<(), SystemFailure>),
}

impl Reply {
    pub fn failure(kind: RequestKind, failure: SystemFailure) -> Self {
        match kind {
            RequestKind::Condition => Reply::Condition(Err(failure)),
            RequestKind::Action => Reply::Action(Err(failure)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Poll {
    Pending(Request),
    Complete,
}

#[derive(Debug, Clone)]
struct Cursor {
    block: usize,
    next_rule: usize,
}

#[derive(Debug, Clone)]
enum Awaiting {
    Condition { rule: usize, vars: Bindings },
    Action { rule: usize },
}

/// One event's progress through the blocks that declare it.
#[derive(Debug, Clone)]
pub struct Evaluation {
    event: Event,
    started: bool,
    blocks: VecDeque<usize>,
    cursor: Option<Cursor>,
    awaiting: Option<Awaiting>,
}

impl Evaluation {
    pub fn event(&self) -> &Event {
        &self.event
    }

    pub fn context_key(&self) -> &str {
        &self.event.context_key
    }
}

enum Flow {
    Continue,
    Wait(Request),
}

pub struct Engine {
    config: CentralConfig,
    instances: BTreeMap<(usize, String), Env>,
}

impl Engine {
    pub fn new(config: CentralConfig) -> Self {
        Engine { config, instances: BTreeMap::new() }
    }

    pub fn config(&self) -> &CentralConfig {
        &self.config
    }

    /// Whether block `block` has a live instance for `context_key`.
    pub fn is_live(&self, block: usize, context_key: &str) -> bool {
        self.instances.contains_key(&(block, context_key.to_string()))
    }

    /// Live instances as (block index, context key), in key order.
    pub fn live(&self) -> impl Iterator<Item = (usize, &str)> {
        self.instances.keys().map(|(b, k)| (*b, k.as_str()))
    }

    pub fn state(&self, block: usize, context_key: &str) -> Option<&Env> {
        self.instances.get(&(block, context_key.to_string()))
    }

    pub fn begin(&self, event: Event) -> Evaluation {
        let blocks = self.config.blocks_for_event(&event.name).map(|(i, _)| i).collect();
        Evaluation { event, started: false, blocks, cursor: None, awaiting: None }
    }

    /// Runs `eval` until it needs a reply or finishes, appending directives
    /// to `out`. `reply` answers the request from the previous `Pending`.
    pub fn advance(&mut self, eval: &mut Evaluation, reply: Option<Reply>, out: &mut Vec<Directive>) -> Poll {
        if !eval.started {
            eval.started = true;
            if eval.blocks.is_empty() {
                out.push(Directive::EmitVerdict(Verdict::info(
                    &eval.event.context_key,
                    format!("unknown event {}", eval.event.name),
                )));
            }
        }
        if let Some(awaiting) = eval.awaiting.take() {
            let reply = reply.expect("a pending evaluation is resumed with its reply");
            if let Flow::Wait(req) = self.resume(eval, awaiting, reply, out) {
                return Poll::Pending(req);
            }
        }
        loop {
            let Some(cursor) = eval.cursor.clone() else {
                let Some(block) = eval.blocks.pop_front() else {
                    return Poll::Complete;
                };
                if self.enter_block(block, &eval.event, out) {
                    eval.cursor = Some(Cursor { block, next_rule: 0 });
                }
                continue;
            };
            let upon = &self.config.upons[cursor.block];
            let key = (cursor.block, eval.event.context_key.clone());
            if cursor.next_rule >= upon.rules.len() || !self.instances.contains_key(&key) {
                eval.cursor = None;
                continue;
            }
            let index = cursor.next_rule;
            eval.cursor.as_mut().expect("cursor set").next_rule += 1;
            let rule = &upon.rules[index];
            if rule.event != eval.event.name {
                continue;
            }
            let vars = rule_vars(upon, rule, &eval.event);
            if let Flow::Wait(req) = self.check_rule(eval, index, vars, out) {
                return Poll::Pending(req);
            }
        }
    }

    fn enter_block(&mut self, block: usize, event: &Event, out: &mut Vec<Directive>) -> bool {
        let upon = &self.config.upons[block];
        let key = &event.context_key;
        let sig = upon.event(&event.name).expect("block declares the event");
        for p in &sig.params {
            if *p == upon.context_var {
                if let Some(v) = event.params.get(p) {
                    if v != key {
                        out.push(Directive::EmitVerdict(Verdict::info(
                            key,
                            format!("{}: parameter {p}={v} disagrees with the context key", event.name),
                        )));
                        return false;
                    }
                }
            } else if event.params.get(p).is_none() {
                out.push(Directive::EmitVerdict(Verdict::info(
                    key,
                    format!("{}: missing parameter {p}", event.name),
                )));
                return false;
            }
        }
        let live = self.is_live(block, key);
        let replication = upon.replication_event == event.name;
        match (replication, live) {
            (true, false) => {
                let env = upon.state.iter().map(|s| (s.name.clone(), s.initial.clone())).collect();
                self.instances.insert((block, key.clone()), env);
            }
            (true, true) => out.push(Directive::EmitVerdict(Verdict::info(
                key,
                format!("{}: replication event for a live instance, treated as ordinary", event.name),
            ))),
            (false, false) => {
                out.push(Directive::EmitVerdict(Verdict::info(
                    key,
                    format!("event outside instance lifetime: {}", event.name),
                )));
                return false;
            }
            (false, true) => {}
        }
        true
    }

    fn block_of(eval: &Evaluation) -> usize {
        eval.cursor.as_ref().expect("rule evaluation has a cursor").block
    }

    fn rule(&self, eval: &Evaluation, rule: usize) -> CompiledRule {
        self.config.upons[Self::block_of(eval)].rules[rule].clone()
    }

    fn check_rule(&mut self, eval: &mut Evaluation, rule: usize, vars: Bindings, out: &mut Vec<Directive>) -> Flow {
        let block = Self::block_of(eval);
        let r = self.rule(eval, rule);
        let key = eval.event.context_key.clone();
        let Some(cond) = r.condition else {
            return self.fire(eval, rule, &vars, out);
        };
        let decl = self.config.upons[block].condition(&cond.name).expect("compiled conditions resolve").clone();
        let args: Vec<String> = cond.args.iter().map(|a| vars[a].clone()).collect();
        match decl.implementation {
            Implementation::Monitor { body } => {
                let params = decl.params.iter().cloned().zip(args).collect();
                let env = &self.instances[&(block, key)];
                match eval_condition(&body, env, &params) {
                    Ok(holds) if holds != cond.negated => self.fire(eval, rule, &vars, out),
                    Ok(_) => Flow::Continue,
                    Err(e) => {
                        self.type_error(eval, &cond.name, e, out);
                        Flow::Continue
                    }
                }
            }
            Implementation::System { component } => {
                out.push(Directive::QueryCondition {
                    context_key: key.clone(),
                    component: component.clone(),
                    name: cond.name.clone(),
                    args: args.clone(),
                });
                eval.awaiting = Some(Awaiting::Condition { rule, vars });
                Flow::Wait(Request { kind: RequestKind::Condition, component, name: cond.name, context_key: key, args })
            }
            Implementation::Report => unreachable!("conditions always have a body"),
        }
    }

    fn fire(&mut self, eval: &mut Evaluation, rule: usize, vars: &Bindings, out: &mut Vec<Directive>) -> Flow {
        let block = Self::block_of(eval);
        let key = eval.event.context_key.clone();
        let (name, arg_names) = match self.rule(eval, rule).action {
            CompiledAction::Done => {
                self.instances.remove(&(block, key.clone()));
                out.push(Directive::Terminate { context_key: key });
                eval.cursor = None;
                return Flow::Continue;
            }
            CompiledAction::Invoke { name, args } => (name, args),
        };
        let decl = self.config.upons[block].action(&name).expect("compiled actions resolve").clone();
        let args: Vec<String> = arg_names.iter().map(|a| vars[a].clone()).collect();
        match decl.implementation {
            Implementation::Monitor { body } => {
                let params: Bindings = decl.params.iter().cloned().zip(args.iter().cloned()).collect();
                out.push(Directive::LocalAction { context_key: key.clone(), name: name.clone(), args });
                let env = self.instances.get_mut(&(block, key)).expect("live instance");
                if let Err(e) = eval_expr(&body, env, &params) {
                    self.type_error(eval, &name, e, out);
                }
                Flow::Continue
            }
            Implementation::Report => {
                let shown: Vec<String> = decl.params.iter().zip(&args).map(|(p, v)| format!("{p}={v}")).collect();
                out.push(Directive::LocalAction { context_key: key.clone(), name: name.clone(), args });
                out.push(Directive::EmitVerdict(Verdict::violation(&key, format!("{name}({})", shown.join(", ")))));
                Flow::Continue
            }
            Implementation::System { component } => {
                out.push(Directive::RunAction {
                    context_key: key.clone(),
                    component: component.clone(),
                    name: name.clone(),
                    args: args.clone(),
                });
                eval.awaiting = Some(Awaiting::Action { rule });
                Flow::Wait(Request { kind: RequestKind::Action, component, name, context_key: key, args })
            }
        }
    }

    fn resume(&mut self, eval: &mut Evaluation, awaiting: Awaiting, reply: Reply, out: &mut Vec<Directive>) -> Flow {
        let key = eval.event.context_key.clone();
        match (awaiting, reply) {
            (Awaiting::Condition { rule, vars }, Reply::Condition(result)) => {
                let cond = self.rule(eval, rule).condition.expect("queried rule has a condition");
                match result {
                    Ok(holds) if holds != cond.negated => self.fire(eval, rule, &vars, out),
                    Ok(_) => Flow::Continue,
                    Err(failure) => {
                        out.push(Directive::EmitVerdict(Verdict::violation(&key, format!("{}: {failure}", cond.name))));
                        Flow::Continue
                    }
                }
            }
            (Awaiting::Action { rule }, Reply::Action(result)) => {
                if let Err(failure) = result {
                    if let CompiledAction::Invoke { name, .. } = self.rule(eval, rule).action {
                        out.push(Directive::EmitVerdict(Verdict::violation(&key, format!("{name}: {failure}"))));
                    }
                }
                Flow::Continue
            }
            (awaiting, reply) => panic!("reply {reply:?} does not answer {awaiting:?}"),
        }
    }

    fn type_error(&mut self, eval: &mut Evaluation, name: &str, e: EvalError, out: &mut Vec<Directive>) {
        let block = Self::block_of(eval);
        let key = eval.event.context_key.clone();
        out.push(Directive::EmitVerdict(Verdict::violation(&key, format!("{name}: {e}"))));
        self.instances.remove(&(block, key.clone()));
        out.push(Directive::Terminate { context_key: key });
        eval.cursor = None;
    }
}

/// Binds the rule's variables to the event's parameter values; the context
/// variable falls back to the context key.
fn rule_vars(upon: &CompiledUpon, rule: &CompiledRule, event: &Event) -> Bindings {
    let sig = upon.event(&event.name).expect("block declares the event");
    sig.params
        .iter()
        .zip(&rule.bindings)
        .map(|(p, var)| {
            let value = event.params.get(p).unwrap_or(&event.context_key);
            (var.clone(), value.to_string())
        })
        .collect()
}

/// Answers requests synchronously.
pub trait Responder {
    fn respond(&mut self, request: &Request) -> Reply;
}

impl<F: FnMut(&Request) -> Reply> Responder for F {
    fn respond(&mut self, request: &Request) -> Reply {
        self(request)
    }
}

/// Processes one event to completion.
pub fn step(engine: &mut Engine, event: Event, responder: &mut dyn Responder) -> Vec<Directive> {
    let mut out = Vec::new();
    let mut eval = engine.begin(event);
    let mut reply = None;
    while let Poll::Pending(req) = engine.advance(&mut eval, reply.take(), &mut out) {
        reply = Some(responder.respond(&req));
    }
    out
}

/// Responder for configurations without system-side declarations.
pub fn no_components(request: &Request) -> Reply {
    Reply::failure(request.kind, SystemFailure::Unavailable(request.component.clone()))
}
