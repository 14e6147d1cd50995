use std::collections::BTreeMap;

use thiserror::Error;

use super::config::*;
use crate::spec::{anchored_components, ActionRef, Body, CallableDecl, Locale, SpecAst, UponBlock};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("upon {upon}: {item} names component `{label}`, which no event or header declaration anchors")]
    UnreachableComponent { upon: String, item: String, label: String },
    #[error("upon {upon}: rule {rule} references undeclared {what} `{name}`")]
    Unresolved { upon: String, rule: usize, what: &'static str, name: String },
    #[error("upon {upon}: rule {rule} passes {found} arguments to `{name}`, which takes {expected}")]
    Arity { upon: String, rule: usize, name: String, expected: usize, found: usize },
    #[error("upon {upon}: {item} has a body that does not fit its locale")]
    BodyLocale { upon: String, item: String },
}

/// Splits a script into the central monitor program and one manifest per
/// component label, sorted by label.
pub fn split_spec(ast: &SpecAst) -> Result<(CentralConfig, Vec<ComponentManifest>), CompileError> {
    let anchored = anchored_components(ast);
    let mut manifests: BTreeMap<String, ComponentManifest> = BTreeMap::new();
    for label in &anchored {
        manifests.insert(label.to_string(), ComponentManifest::new(*label));
    }

    let mut upons = Vec::with_capacity(ast.upons.len());
    for block in &ast.upons {
        let upon = &block.replication_event;
        let reach = |item: String, label: &str| {
            if anchored.contains(label) {
                Ok(())
            } else {
                Err(CompileError::UnreachableComponent { upon: upon.clone(), item, label: label.to_string() })
            }
        };

        let mut state = Vec::new();
        for s in &block.state {
            match &s.locale {
                Locale::MonitorSide => state.push(StateSlot {
                    name: s.name.clone(),
                    kind: s.kind,
                    initial: s.initial.clone().unwrap_or_else(|| s.kind.default_value()),
                }),
                Locale::SystemSide(label) => {
                    reach(format!("state {}", s.name), label)?;
                    manifests.get_mut(label).expect("anchored").systemside_state.push(StateDoc {
                        name: s.name.clone(),
                        upon: upon.clone(),
                        kind: s.kind.to_string(),
                    });
                }
            }
        }

        let mut events = Vec::new();
        for e in &block.events {
            events.push(EventSig { name: e.name.clone(), params: e.params.clone(), component: e.component.clone() });
            let manifest = manifests.get_mut(&e.component).expect("event labels are anchored");
            manifest.events.push(ManifestEvent {
                name: e.name.clone(),
                upon: upon.clone(),
                trigger: e.trigger.clone(),
                params: e.params.clone(),
                context_var: block.context_var.clone(),
                context_position: e.params.iter().position(|p| *p == block.context_var).unwrap_or(0),
            });
        }

        let mut compile_callables = |decls: &[CallableDecl], what: &str, conditions: bool| {
            let mut out = Vec::new();
            for d in decls {
                let item = format!("{what} {}", d.name);
                let implementation = match (&d.locale, &d.body) {
                    (Locale::MonitorSide, Body::Expr(body)) => Implementation::Monitor { body: body.clone() },
                    (Locale::MonitorSide, Body::Opaque) if !conditions => Implementation::Report,
                    (Locale::SystemSide(label), Body::Opaque | Body::Native(_)) => {
                        reach(item, label)?;
                        let callback = ManifestCallback {
                            name: d.name.clone(),
                            upon: upon.clone(),
                            params: d.params.clone(),
                            arity: d.params.len(),
                            native_body: match &d.body {
                                Body::Native(raw) => Some(raw.clone()),
                                _ => None,
                            },
                        };
                        let manifest = manifests.get_mut(label).expect("anchored");
                        if conditions {
                            manifest.systemside_conditions.push(callback);
                        } else {
                            manifest.systemside_actions.push(callback);
                        }
                        Implementation::System { component: label.clone() }
                    }
                    _ => return Err(CompileError::BodyLocale { upon: upon.clone(), item }),
                };
                out.push(CompiledCallable { name: d.name.clone(), params: d.params.clone(), implementation });
            }
            Ok(out)
        };
        let conditions = compile_callables(&block.conditions, "condition", true)?;
        let actions = compile_callables(&block.actions, "action", false)?;
        let rules = compile_rules(block)?;

        upons.push(CompiledUpon {
            replication_event: upon.clone(),
            context_var: block.context_var.clone(),
            state,
            events,
            conditions,
            actions,
            rules,
        });
    }

    let config = CentralConfig {
        version: FORMAT_VERSION,
        components: manifests.keys().cloned().collect(),
        upons,
    };
    Ok((config, manifests.into_values().collect()))
}

fn compile_rules(block: &UponBlock) -> Result<Vec<CompiledRule>, CompileError> {
    let upon = &block.replication_event;
    let mut rules = Vec::with_capacity(block.rules.len());
    for (i, r) in block.rules.iter().enumerate() {
        let index = i + 1;
        let unresolved = |what, name: &str| CompileError::Unresolved {
            upon: upon.clone(),
            rule: index,
            what,
            name: name.to_string(),
        };
        let event = block.event(&r.event).ok_or_else(|| unresolved("event", &r.event))?;
        let bindings = r.bindings.clone().unwrap_or_else(|| event.params.clone());
        if bindings.len() != event.params.len() {
            return Err(CompileError::Arity {
                upon: upon.clone(),
                rule: index,
                name: r.event.clone(),
                expected: event.params.len(),
                found: bindings.len(),
            });
        }
        let resolve_args = |name: &str, params: &[String], args: &Option<Vec<String>>| {
            let list = args.clone().unwrap_or_else(|| params.to_vec());
            if list.len() != params.len() {
                return Err(CompileError::Arity {
                    upon: upon.clone(),
                    rule: index,
                    name: name.to_string(),
                    expected: params.len(),
                    found: list.len(),
                });
            }
            if let Some(missing) = list.iter().find(|a| !bindings.contains(a)) {
                return Err(unresolved("rule variable", missing));
            }
            Ok(list)
        };
        let condition = match &r.condition {
            None => None,
            Some(c) => {
                let decl = block.condition(&c.name).ok_or_else(|| unresolved("condition", &c.name))?;
                let args = resolve_args(&c.name, &decl.params, &c.args)?;
                Some(CompiledCondition { negated: c.negated, name: c.name.clone(), args })
            }
        };
        let action = match &r.action {
            ActionRef::Done => CompiledAction::Done,
            ActionRef::Invoke { name, args } => {
                let decl = block.action(name).ok_or_else(|| unresolved("action", name))?;
                let args = resolve_args(name, &decl.params, args)?;
                CompiledAction::Invoke { name: name.clone(), args }
            }
        };
        rules.push(CompiledRule { label: r.label.clone(), event: r.event.clone(), bindings, condition, action });
    }
    Ok(rules)
}
