//! Canonical script printer. `parse_spec(&pretty_print(ast))` reproduces `ast`.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn pretty_print(ast: &SpecAst) -> String {
    let mut out = String::new();
    for c in &ast.components {
        let _ = writeln!(out, "component {c};");
    }
    for (i, upon) in ast.upons.iter().enumerate() {
        if i > 0 || !ast.components.is_empty() {
            out.push('\n');
        }
        print_upon(&mut out, upon);
    }
    out
}

fn line(out: &mut String, depth: usize, text: &str) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
    out.push_str(text);
    out.push('\n');
}

fn locale_header(locale: &Locale) -> String {
    match locale {
        Locale::MonitorSide => "monitorSide {".to_string(),
        Locale::SystemSide(label) if label == DEFAULT_COMPONENT => "systemSide {".to_string(),
        Locale::SystemSide(label) => format!("systemSide@{label} {{"),
    }
}

/// Emits consecutive items sharing a locale inside one tagged group, keeping
/// source order.
fn grouped<T>(out: &mut String, items: &[T], locale: impl Fn(&T) -> &Locale, render: impl Fn(&T) -> String) {
    let mut i = 0;
    while i < items.len() {
        let current = locale(&items[i]);
        line(out, 2, &locale_header(current));
        while i < items.len() && locale(&items[i]) == current {
            line(out, 3, &render(&items[i]));
            i += 1;
        }
        line(out, 2, "}");
    }
}

fn print_upon(out: &mut String, upon: &UponBlock) {
    line(out, 0, &format!("upon ({}({})) {{", upon.replication_event, upon.context_var));
    if !upon.state.is_empty() {
        line(out, 1, "state {");
        grouped(out, &upon.state, |s| &s.locale, render_state);
        line(out, 1, "}");
    }
    if !upon.events.is_empty() {
        line(out, 1, "events {");
        for e in &upon.events {
            let tag = if e.component == DEFAULT_COMPONENT { String::new() } else { format!("event@{} ", e.component) };
            line(out, 2, &format!("{tag}{}({}) = {{ {}; }}", e.name, e.params.join(", "), e.trigger));
        }
        line(out, 1, "}");
    }
    for (title, decls) in [("conditions", &upon.conditions), ("actions", &upon.actions)] {
        if decls.is_empty() {
            continue;
        }
        line(out, 1, &format!("{title} {{"));
        grouped(out, decls, |d| &d.locale, render_callable);
        line(out, 1, "}");
    }
    if !upon.rules.is_empty() {
        line(out, 1, "rules {");
        for r in &upon.rules {
            line(out, 2, &render_rule(r));
        }
        line(out, 1, "}");
    }
    line(out, 0, "}");
}

fn render_state(s: &StateDecl) -> String {
    match (&s.initial, s.kind) {
        (Some(v), ValueKind::Scalar(_)) => format!("{} {} = {};", s.kind, s.name, literal(v)),
        _ => format!("{} {};", s.kind, s.name),
    }
}

fn render_callable(d: &CallableDecl) -> String {
    let head = if d.params.is_empty() { d.name.clone() } else { format!("{}({})", d.name, d.params.join(", ")) };
    let body = match &d.body {
        Body::Opaque => "...".to_string(),
        Body::Native(raw) if raw.is_empty() => "{ }".to_string(),
        Body::Native(raw) => format!("{{ {raw} }}"),
        Body::Expr(Expr::Seq(items)) => {
            let parts: Vec<String> = items.iter().map(expr).collect();
            format!("{{ {} }}", parts.join("; "))
        }
        Body::Expr(e) => format!("{{ {} }}", expr(e)),
    };
    format!("{head} = {body};")
}

fn args(list: &Option<Vec<String>>) -> String {
    match list {
        Some(v) => format!("({})", v.join(", ")),
        None => String::new(),
    }
}

fn render_rule(r: &Rule) -> String {
    let mut s = String::new();
    if let Some(label) = &r.label {
        let _ = write!(s, "{label} = ");
    }
    let _ = write!(s, "{}{}", r.event, args(&r.bindings));
    if let Some(c) = &r.condition {
        let bang = if c.negated { "!" } else { "" };
        let _ = write!(s, " \\ {bang}{}{}", c.name, args(&c.args));
    }
    match &r.action {
        ActionRef::Done => s.push_str(" -> Done;"),
        ActionRef::Invoke { name, args: a } => {
            let _ = write!(s, " -> {name}{};", args(a));
        }
    }
    s
}

pub(crate) fn literal(v: &Value) -> String {
    match v {
        Value::Bool(b) => b.to_string(),
        Value::Int(i) => i.to_string(),
        Value::Str(s) => {
            let mut out = String::with_capacity(s.len() + 2);
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
            out
        }
        // Map literals do not exist in the surface syntax.
        Value::Map(_) => "{}".to_string(),
    }
}

/// Renders an expression with every binary operation parenthesised.
pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Literal(v) => literal(v),
        Expr::Var(n) | Expr::Param(n) => n.clone(),
        Expr::Index(base, key) => {
            let b = match **base {
                Expr::Unary(..) => format!("({})", expr(base)),
                _ => expr(base),
            };
            format!("{b}[{}]", expr(key))
        }
        Expr::Unary(UnaryOp::Not, inner) => format!("!{}", expr(inner)),
        Expr::Binary(op, l, r) => format!("({} {} {})", expr(l), op.symbol(), expr(r)),
        Expr::Assign(n, v) => format!("{n} := {}", expr(v)),
        Expr::AssignIndex(n, k, v) => format!("{n}[{}] := {}", expr(k), expr(v)),
        Expr::Seq(items) => items.iter().map(expr).collect::<Vec<_>>().join("; "),
    }
}
