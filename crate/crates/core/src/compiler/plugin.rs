//! Per-technology stub generation.
//!
//! A plugin turns a [`ComponentManifest`] into listener source for one
//! technology: an interception point per event that forwards to the adapter's
//! emit call, and a registration hook per system-side callback.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::config::{ComponentManifest, ManifestCallback, ManifestEvent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PluginError {
    #[error("a plugin for technology `{0}` is already registered")]
    Duplicate(String),
    #[error("unknown technology `{0}`")]
    UnknownTechnology(String),
    #[error("plugin `{technology}` cannot generate {kind} `{name}`")]
    Unsupported { technology: String, kind: &'static str, name: String },
}

/// Code generator for one technology. Returning `None` from a `*_to_stub`
/// method means the plugin does not support that declaration kind.
pub trait StubPlugin: Send + Sync {
    fn technology(&self) -> &str;

    /// File extension of generated stubs, without the dot.
    fn extension(&self) -> &str;

    fn prologue(&self, manifest: &ComponentManifest) -> String;

    fn epilogue(&self, manifest: &ComponentManifest) -> String;

    fn event_to_stub(&self, manifest: &ComponentManifest, event: &ManifestEvent) -> Option<String>;

    fn condition_to_stub(&self, manifest: &ComponentManifest, condition: &ManifestCallback) -> Option<String>;

    fn action_to_stub(&self, manifest: &ComponentManifest, action: &ManifestCallback) -> Option<String>;
}

/// Returned by [`PluginRegistry::register`]; names the registered technology.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PluginHandle(pub String);

#[derive(Default)]
pub struct PluginRegistry {
    plugins: BTreeMap<String, Box<dyn StubPlugin>>,
}

impl PluginRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry preloaded with the bundled `demo-native` and `py` plugins.
    pub fn with_builtins() -> Self {
        let mut registry = Self::new();
        registry.register(Box::new(super::native::NativePlugin)).expect("fresh registry");
        registry.register(Box::new(super::python::PythonPlugin)).expect("fresh registry");
        registry
    }

    pub fn register(&mut self, plugin: Box<dyn StubPlugin>) -> Result<PluginHandle, PluginError> {
        let name = plugin.technology().to_string();
        if self.plugins.contains_key(&name) {
            return Err(PluginError::Duplicate(name));
        }
        self.plugins.insert(name.clone(), plugin);
        Ok(PluginHandle(name))
    }

    pub fn get(&self, technology: &str) -> Result<&dyn StubPlugin, PluginError> {
        self.plugins
            .get(technology)
            .map(|p| p.as_ref())
            .ok_or_else(|| PluginError::UnknownTechnology(technology.to_string()))
    }

    pub fn technologies(&self) -> impl Iterator<Item = &str> {
        self.plugins.keys().map(String::as_str)
    }

    pub fn generate(&self, technology: &str, manifest: &ComponentManifest) -> Result<String, PluginError> {
        generate_stub(manifest, self.get(technology)?)
    }
}

/// Each declaration name is emitted once even when several blocks declare it.
pub fn generate_stub(manifest: &ComponentManifest, plugin: &dyn StubPlugin) -> Result<String, PluginError> {
    let unsupported = |kind, name: &str| PluginError::Unsupported {
        technology: plugin.technology().to_string(),
        kind,
        name: name.to_string(),
    };
    let mut out = plugin.prologue(manifest);
    let mut seen = BTreeSet::new();
    for event in &manifest.events {
        if seen.insert(("event", event.name.as_str())) {
            out.push_str(&plugin.event_to_stub(manifest, event).ok_or_else(|| unsupported("event", &event.name))?);
        }
    }
    for c in &manifest.systemside_conditions {
        if seen.insert(("condition", c.name.as_str())) {
            out.push_str(&plugin.condition_to_stub(manifest, c).ok_or_else(|| unsupported("condition", &c.name))?);
        }
    }
    for a in &manifest.systemside_actions {
        if seen.insert(("action", a.name.as_str())) {
            out.push_str(&plugin.action_to_stub(manifest, a).ok_or_else(|| unsupported("action", &a.name))?);
        }
    }
    out.push_str(&plugin.epilogue(manifest));
    Ok(out)
}
