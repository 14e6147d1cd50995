//! Well-formedness checks over a parsed script.

use std::collections::BTreeSet;
use std::fmt;

use super::ast::*;
use super::typeck::{self, Scope, TypeIssue};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    NoUponBlocks,
    DuplicateReplicationEvent,
    UndeclaredReplicationEvent,
    ContextVarNotBound,
    DuplicateDeclaration,
    DuplicateParameter(String),
    EmptyComponentLabel,
    UnresolvedEvent(String),
    UnresolvedCondition(String),
    UnresolvedAction(String),
    ArityMismatch { expected: usize, found: usize },
    UnboundVariable(String),
    MissingDone,
    UnanchoredComponent(String),
    UndeclaredName(String),
    TypeError(String),
    ConditionNotBoolean(String),
    AssignmentInCondition,
    OpaqueMonitorCondition,
    ExprOnSystemSide,
    NativeOnMonitorSide,
    MapInitialNotEmpty,
    SystemStateHasInitial,
    MissingInitial,
    InitialKindMismatch,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ViolationKind::*;
        match self {
            NoUponBlocks => f.write_str("script has no upon block"),
            DuplicateReplicationEvent => f.write_str("replication event used by more than one upon block"),
            UndeclaredReplicationEvent => f.write_str("replication event is not declared in the events block"),
            ContextVarNotBound => f.write_str("event does not bind context variable"),
            DuplicateDeclaration => f.write_str("duplicate declaration"),
            DuplicateParameter(p) => write!(f, "duplicate parameter `{p}`"),
            EmptyComponentLabel => f.write_str("empty component label"),
            UnresolvedEvent(n) => write!(f, "unresolved event reference `{n}`"),
            UnresolvedCondition(n) => write!(f, "unresolved condition reference `{n}`"),
            UnresolvedAction(n) => write!(f, "unresolved action reference `{n}`"),
            ArityMismatch { expected, found } => write!(f, "arity mismatch: expected {expected} arguments, found {found}"),
            UnboundVariable(v) => write!(f, "unbound rule variable `{v}`"),
            MissingDone => f.write_str("no rule ends the context with Done"),
            UnanchoredComponent(l) => write!(f, "component `{l}` has no event and is not declared in the header"),
            UndeclaredName(n) => write!(f, "body references undeclared name `{n}`"),
            TypeError(m) => write!(f, "type error: {m}"),
            ConditionNotBoolean(t) => write!(f, "condition has type {t}, expected bool"),
            AssignmentInCondition => f.write_str("condition contains an assignment"),
            OpaqueMonitorCondition => f.write_str("monitor-side condition needs an expression body"),
            ExprOnSystemSide => f.write_str("system-side body carries a monitor expression"),
            NativeOnMonitorSide => f.write_str("monitor-side body carries native code"),
            MapInitialNotEmpty => f.write_str("map state must start empty"),
            SystemStateHasInitial => f.write_str("system-side state carries an initial value"),
            MissingInitial => f.write_str("monitor-side state has no initial value"),
            InitialKindMismatch => f.write_str("initial value does not match declared type"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Replication event of the offending block, if the violation is block-local.
    pub upon: Option<String>,
    /// The offending declaration, e.g. `event register` or `rule 2`.
    pub item: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.upon {
            Some(u) => write!(f, "upon {u}: {}: {}", self.item, self.kind),
            None => write!(f, "{}: {}", self.item, self.kind),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Labels a system-side locale may name: every event's component plus the
/// header declarations.
pub fn anchored_components(ast: &SpecAst) -> BTreeSet<&str> {
    let mut set: BTreeSet<&str> = ast.components.iter().map(String::as_str).collect();
    for upon in &ast.upons {
        for e in &upon.events {
            set.insert(e.component.as_str());
        }
    }
    set
}

pub fn validate_spec(ast: &SpecAst) -> ValidationReport {
    let mut report = Vec::new();
    if ast.upons.is_empty() {
        report.push(Violation { upon: None, item: "script".into(), kind: ViolationKind::NoUponBlocks });
    }
    let mut seen = BTreeSet::new();
    for upon in &ast.upons {
        if !seen.insert(upon.replication_event.as_str()) {
            report.push(Violation {
                upon: None,
                item: format!("upon {}", upon.replication_event),
                kind: ViolationKind::DuplicateReplicationEvent,
            });
        }
    }
    let anchored = anchored_components(ast);
    for upon in &ast.upons {
        BlockChecker { upon, anchored: &anchored, out: &mut report }.run();
    }
    ValidationReport { violations: report }
}

struct BlockChecker<'a, 'r> {
    upon: &'a UponBlock,
    anchored: &'a BTreeSet<&'a str>,
    out: &'r mut Vec<Violation>,
}

impl BlockChecker<'_, '_> {
    fn push(&mut self, item: impl Into<String>, kind: ViolationKind) {
        self.out.push(Violation { upon: Some(self.upon.replication_event.clone()), item: item.into(), kind });
    }

    fn run(&mut self) {
        let upon = self.upon;
        if upon.event(&upon.replication_event).is_none() {
            self.push(format!("upon {}", upon.replication_event), ViolationKind::UndeclaredReplicationEvent);
        }
        self.check_unique("state", upon.state.iter().map(|s| s.name.as_str()));
        self.check_unique("event", upon.events.iter().map(|s| s.name.as_str()));
        self.check_unique("condition", upon.conditions.iter().map(|s| s.name.as_str()));
        self.check_unique("action", upon.actions.iter().map(|s| s.name.as_str()));

        for s in &upon.state {
            self.check_state(s);
        }
        for e in &upon.events {
            let item = format!("event {}", e.name);
            if !e.params.contains(&upon.context_var) {
                self.push(item.clone(), ViolationKind::ContextVarNotBound);
            }
            if e.component.is_empty() {
                self.push(item.clone(), ViolationKind::EmptyComponentLabel);
            }
            self.check_params(&item, &e.params);
        }
        for c in &upon.conditions {
            self.check_callable("condition", c, true);
        }
        for a in &upon.actions {
            self.check_callable("action", a, false);
        }
        for (i, r) in upon.rules.iter().enumerate() {
            self.check_rule(i + 1, r);
        }
        if !upon.rules.iter().any(|r| r.action == ActionRef::Done) {
            self.push("rules", ViolationKind::MissingDone);
        }
    }

    fn check_unique<'n>(&mut self, what: &str, names: impl Iterator<Item = &'n str>) {
        let mut seen = BTreeSet::new();
        for n in names {
            if !seen.insert(n) {
                self.push(format!("{what} {n}"), ViolationKind::DuplicateDeclaration);
            }
        }
    }

    fn check_params(&mut self, item: &str, params: &[String]) {
        let mut seen = BTreeSet::new();
        for p in params {
            if !seen.insert(p) {
                self.push(item, ViolationKind::DuplicateParameter(p.clone()));
            }
        }
    }

    fn check_state(&mut self, s: &StateDecl) {
        let item = format!("state {}", s.name);
        match (&s.locale, &s.initial) {
            (Locale::SystemSide(_), Some(_)) => self.push(item, ViolationKind::SystemStateHasInitial),
            (Locale::SystemSide(label), None) => self.check_label(&item, label),
            (Locale::MonitorSide, None) => self.push(item, ViolationKind::MissingInitial),
            (Locale::MonitorSide, Some(v)) => {
                if v.kind() != s.kind {
                    self.push(item, ViolationKind::InitialKindMismatch);
                } else if let Value::Map(m) = v {
                    if !m.entries.is_empty() {
                        self.push(item, ViolationKind::MapInitialNotEmpty);
                    }
                }
            }
        }
    }

    fn check_label(&mut self, item: &str, label: &str) {
        if label.is_empty() {
            self.push(item, ViolationKind::EmptyComponentLabel);
        } else if !self.anchored.contains(label) {
            self.push(item, ViolationKind::UnanchoredComponent(label.to_string()));
        }
    }

    fn check_callable(&mut self, what: &str, d: &CallableDecl, is_condition: bool) {
        let item = format!("{what} {}", d.name);
        self.check_params(&item, &d.params);
        match (&d.locale, &d.body) {
            (Locale::SystemSide(label), body) => {
                self.check_label(&item, label);
                if matches!(body, Body::Expr(_)) {
                    self.push(item, ViolationKind::ExprOnSystemSide);
                }
            }
            (Locale::MonitorSide, Body::Native(_)) => self.push(item, ViolationKind::NativeOnMonitorSide),
            (Locale::MonitorSide, Body::Opaque) => {
                if is_condition {
                    self.push(item, ViolationKind::OpaqueMonitorCondition);
                }
            }
            (Locale::MonitorSide, Body::Expr(e)) => {
                let scope = Scope { block: self.upon, params: &d.params };
                match typeck::check(e, &scope) {
                    Err(TypeIssue::Undeclared(n)) => self.push(item, ViolationKind::UndeclaredName(n)),
                    Err(TypeIssue::Mismatch(m)) => self.push(item, ViolationKind::TypeError(m)),
                    Ok(t) => {
                        if is_condition {
                            if e.has_assignment() {
                                self.push(item.clone(), ViolationKind::AssignmentInCondition);
                            }
                            if !t.is_boolish() {
                                self.push(item, ViolationKind::ConditionNotBoolean(t.to_string()));
                            }
                        }
                    }
                }
            }
        }
    }

    fn check_rule(&mut self, index: usize, r: &Rule) {
        let item = match &r.label {
            Some(l) => format!("rule {index} ({l})"),
            None => format!("rule {index}"),
        };
        let Some(event) = self.upon.event(&r.event) else {
            self.push(item, ViolationKind::UnresolvedEvent(r.event.clone()));
            return;
        };
        let bound: Vec<String> = match &r.bindings {
            Some(b) => {
                if b.len() != event.params.len() {
                    self.push(item.clone(), ViolationKind::ArityMismatch { expected: event.params.len(), found: b.len() });
                }
                self.check_params(&item, b);
                b.clone()
            }
            None => event.params.clone(),
        };
        if let Some(c) = &r.condition {
            match self.upon.condition(&c.name) {
                None => self.push(item.clone(), ViolationKind::UnresolvedCondition(c.name.clone())),
                Some(decl) => self.check_args(&item, &decl.params, &c.args, &bound),
            }
        }
        if let ActionRef::Invoke { name, args } = &r.action {
            match self.upon.action(name) {
                None => self.push(item, ViolationKind::UnresolvedAction(name.clone())),
                Some(decl) => self.check_args(&item, &decl.params, args, &bound),
            }
        }
    }

    fn check_args(&mut self, item: &str, params: &[String], args: &Option<Vec<String>>, bound: &[String]) {
        let names = match args {
            Some(a) => {
                if a.len() != params.len() {
                    self.push(item, ViolationKind::ArityMismatch { expected: params.len(), found: a.len() });
                }
                a.as_slice()
            }
            None => params,
        };
        for n in names {
            if !bound.contains(n) {
                self.push(item, ViolationKind::UnboundVariable(n.clone()));
            }
        }
    }
}
