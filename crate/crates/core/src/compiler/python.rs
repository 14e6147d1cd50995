//! `py`: Python wrapper functions for the Python component adapter.

use std::fmt::Write;

use super::config::{ComponentManifest, ManifestCallback, ManifestEvent};
use super::native::interception;
use super::plugin::StubPlugin;

pub struct PythonPlugin;

impl StubPlugin for PythonPlugin {
    fn technology(&self) -> &str {
        "py"
    }

    fn extension(&self) -> &str {
        "py"
    }

    fn prologue(&self, manifest: &ComponentManifest) -> String {
        format!(
            "# Listener stub for component `{label}`, generated by polyrv. Do not edit.\n\
             from polyrv_adapter import Session\n\
             \n\
             COMPONENT = \"{label}\"\n",
            label = manifest.component_label
        )
    }

    fn epilogue(&self, _manifest: &ComponentManifest) -> String {
        String::new()
    }

    fn event_to_stub(&self, _manifest: &ComponentManifest, event: &ManifestEvent) -> Option<String> {
        let mut s = String::new();
        let _ = writeln!(s, "\n");
        let _ = writeln!(s, "# intercept: {}", interception(event));
        let params: Vec<String> = event.params.iter().map(|p| format!("{p}: str")).collect();
        let _ = writeln!(s, "def on_{}(session: Session, {}) -> None:", event.name, params.join(", "));
        let pairs: Vec<String> = event.params.iter().map(|p| format!("\"{p}\": {p}")).collect();
        let _ = writeln!(
            s,
            "    session.emit_event(\"{}\", {}, {{{}}})",
            event.name,
            event.context_var,
            pairs.join(", ")
        );
        Some(s)
    }

    fn condition_to_stub(&self, _manifest: &ComponentManifest, c: &ManifestCallback) -> Option<String> {
        Some(format!(
            "\n\n# system-side condition {name}({params})\n\
             def register_{name}(session: Session, callback) -> None:\n\
             \x20   session.register_condition(\"{name}\", callback)\n",
            name = c.name,
            params = c.params.join(", ")
        ))
    }

    fn action_to_stub(&self, _manifest: &ComponentManifest, a: &ManifestCallback) -> Option<String> {
        Some(format!(
            "\n\n# system-side action {name}({params})\n\
             def register_{name}(session: Session, callback) -> None:\n\
             \x20   session.register_action(\"{name}\", callback)\n",
            name = a.name,
            params = a.params.join(", ")
        ))
    }
}
