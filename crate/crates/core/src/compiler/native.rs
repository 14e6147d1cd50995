//! `demo-native`: Rust wrapper functions over [`crate::adapter::Session`].

use std::fmt::Write;

use super::config::{ComponentManifest, ManifestCallback, ManifestEvent};
use super::plugin::StubPlugin;

pub struct NativePlugin;

const RUST_KEYWORDS: &[&str] = &[
    "as", "async", "await", "break", "const", "continue", "crate", "dyn", "else", "enum", "extern", "false", "fn",
    "for", "if", "impl", "in", "let", "loop", "match", "mod", "move", "mut", "pub", "ref", "return", "self", "Self",
    "static", "struct", "super", "trait", "true", "type", "unsafe", "use", "where", "while", "gen",
];

fn ident(name: &str) -> String {
    if RUST_KEYWORDS.contains(&name) {
        format!("r#{name}")
    } else {
        name.to_string()
    }
}

pub(super) fn interception(event: &ManifestEvent) -> String {
    let mut s = format!("before ( call ({}(...) )", event.trigger.callable);
    if !event.trigger.args.is_empty() {
        let _ = write!(s, " && args ({})", event.trigger.args.join(", "));
    }
    s.push(')');
    s
}

impl StubPlugin for NativePlugin {
    fn technology(&self) -> &str {
        "demo-native"
    }

    fn extension(&self) -> &str {
        "rs"
    }

    fn prologue(&self, manifest: &ComponentManifest) -> String {
        format!(
            "// Listener stub for component `{label}`, generated by polyrv. Do not edit.\n\
             #![allow(non_snake_case, dead_code)]\n\
             \n\
             use polyrv::adapter::{{AdapterError, Session}};\n\
             \n\
             pub const COMPONENT: &str = \"{label}\";\n",
            label = manifest.component_label
        )
    }

    fn epilogue(&self, _manifest: &ComponentManifest) -> String {
        String::new()
    }

    fn event_to_stub(&self, _manifest: &ComponentManifest, event: &ManifestEvent) -> Option<String> {
        let mut s = String::new();
        let _ = writeln!(s);
        let _ = writeln!(s, "/// intercept: {}", interception(event));
        let params: Vec<String> = event.params.iter().map(|p| format!("{}: &str", ident(p))).collect();
        let _ = writeln!(
            s,
            "pub fn on_{}(session: &Session, {}) -> Result<(), AdapterError> {{",
            event.name,
            params.join(", ")
        );
        let pairs: Vec<String> = event.params.iter().map(|p| format!("(\"{p}\", {})", ident(p))).collect();
        let _ = writeln!(
            s,
            "    session.emit_event(\"{}\", {}, &[{}])",
            event.name,
            ident(&event.context_var),
            pairs.join(", ")
        );
        let _ = writeln!(s, "}}");
        Some(s)
    }

    fn condition_to_stub(&self, _manifest: &ComponentManifest, c: &ManifestCallback) -> Option<String> {
        Some(format!(
            "\n/// system-side condition {name}({params})\n\
             pub fn register_{name}<F>(session: &Session, callback: F) -> Result<(), AdapterError>\n\
             where\n    F: Fn(&[String]) -> bool + Send + Sync + 'static,\n{{\n\
             \x20   session.register_condition(\"{name}\", callback)\n}}\n",
            name = c.name,
            params = c.params.join(", ")
        ))
    }

    fn action_to_stub(&self, _manifest: &ComponentManifest, a: &ManifestCallback) -> Option<String> {
        Some(format!(
            "\n/// system-side action {name}({params})\n\
             pub fn register_{name}<F>(session: &Session, callback: F) -> Result<(), AdapterError>\n\
             where\n    F: Fn(&[String]) + Send + Sync + 'static,\n{{\n\
             \x20   session.register_action(\"{name}\", callback)\n}}\n",
            name = a.name,
            params = a.params.join(", ")
        ))
    }
}
