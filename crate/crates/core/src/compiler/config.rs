//! Compilation outputs and their JSON file formats.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spec::{Expr, Trigger, Value, ValueKind};

/// Version written into every compiled file.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {found}, expected {FORMAT_VERSION}")]
    Version { found: u32 },
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("compiled outputs always serialise");
    text.push('\n');
    text
}

/// Everything the central monitor needs: one compiled program per `upon` block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CentralConfig {
    pub version: u32,
    /// Every component label known to the script, sorted.
    pub components: Vec<String>,
    pub upons: Vec<CompiledUpon>,
}

impl CentralConfig {
    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let config: CentralConfig = serde_json::from_str(text)?;
        if config.version != FORMAT_VERSION {
            return Err(FormatError::Version { found: config.version });
        }
        Ok(config)
    }

    /// Blocks declaring `event`, in script order.
    pub fn blocks_for_event<'a>(&'a self, event: &'a str) -> impl Iterator<Item = (usize, &'a CompiledUpon)> + 'a {
        self.upons.iter().enumerate().filter(move |(_, u)| u.event(event).is_some())
    }

    pub fn rule_count(&self) -> usize {
        self.upons.iter().map(|u| u.rules.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledUpon {
    pub replication_event: String,
    pub context_var: String,
    /// Monitor-side state with initial values.
    pub state: Vec<StateSlot>,
    pub events: Vec<EventSig>,
    pub conditions: Vec<CompiledCallable>,
    pub actions: Vec<CompiledCallable>,
    /// In source order.
    pub rules: Vec<CompiledRule>,
}

impl CompiledUpon {
    pub fn event(&self, name: &str) -> Option<&EventSig> {
        self.events.iter().find(|e| e.name == name)
    }

    pub fn condition(&self, name: &str) -> Option<&CompiledCallable> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&CompiledCallable> {
        self.actions.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSlot {
    pub name: String,
    pub kind: ValueKind,
    pub initial: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSig {
    pub name: String,
    pub params: Vec<String>,
    pub component: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledCallable {
    pub name: String,
    pub params: Vec<String>,
    pub implementation: Implementation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Implementation {
    /// Evaluated by the monitor over the instance state.
    Monitor { body: Expr },
    /// Opaque monitor-side action: reported as a violation verdict.
    Report,
    /// Evaluated by the named component through a request on its connection.
    System { component: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledRule {
    pub label: Option<String>,
    pub event: String,
    /// Rule variables, positionally aligned with the event parameters.
    pub bindings: Vec<String>,
    pub condition: Option<CompiledCondition>,
    pub action: CompiledAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledCondition {
    pub negated: bool,
    pub name: String,
    /// Rule variables passed for each declared parameter.
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompiledAction {
    Invoke { name: String, args: Vec<String> },
    Done,
}

/// The slice of a script one component needs to instrument itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentManifest {
    pub version: u32,
    pub component_label: String,
    pub events: Vec<ManifestEvent>,
    pub systemside_conditions: Vec<ManifestCallback>,
    pub systemside_actions: Vec<ManifestCallback>,
    /// System-side state declarations, recorded for documentation only.
    pub systemside_state: Vec<StateDoc>,
    pub monitor_address_placeholder: String,
}

/// Substituted by deployments; adapters read `POLYRV_MONITOR` or `--monitor`.
pub const MONITOR_ADDRESS_PLACEHOLDER: &str = "${POLYRV_MONITOR}";

impl ComponentManifest {
    pub fn new(label: impl Into<String>) -> Self {
        ComponentManifest {
            version: FORMAT_VERSION,
            component_label: label.into(),
            events: Vec::new(),
            systemside_conditions: Vec::new(),
            systemside_actions: Vec::new(),
            systemside_state: Vec::new(),
            monitor_address_placeholder: MONITOR_ADDRESS_PLACEHOLDER.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let manifest: ComponentManifest = serde_json::from_str(text)?;
        if manifest.version != FORMAT_VERSION {
            return Err(FormatError::Version { found: manifest.version });
        }
        Ok(manifest)
    }

    pub fn event(&self, name: &str) -> Option<&ManifestEvent> {
        self.events.iter().find(|e| e.name == name)
    }

    pub fn condition(&self, name: &str) -> Option<&ManifestCallback> {
        self.systemside_conditions.iter().find(|c| c.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ManifestCallback> {
        self.systemside_actions.iter().find(|a| a.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty() && self.systemside_conditions.is_empty() && self.systemside_actions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEvent {
    pub name: String,
    /// Replication event of the block declaring this event.
    pub upon: String,
    pub trigger: Trigger,
    pub params: Vec<String>,
    pub context_var: String,
    pub context_position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCallback {
    pub name: String,
    pub upon: String,
    pub params: Vec<String>,
    pub arity: usize,
    pub native_body: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDoc {
    pub name: String,
    pub upon: String,
    pub kind: String,
}
