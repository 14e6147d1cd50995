use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Violation,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Info => "info",
            Severity::Violation => "violation",
        })
    }
}

/// Event parameters: ordered, unique names mapped to wire strings. Encoded as
/// a JSON object in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Params(Vec<(String, String)>);

impl Params {
    pub fn new() -> Self {
        Params(Vec::new())
    }

    /// Inserts or replaces, keeping the original position on replace.
    pub fn insert(&mut self, name: impl Into<String>, value: impl Into<String>) {
        let name = name.into();
        let value = value.into();
        match self.0.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = value,
            None => self.0.push((name, value)),
        }
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(n, v)| (n.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Params {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut p = Params::new();
        for (k, v) in iter {
            p.insert(k, v);
        }
        p
    }
}

impl Serialize for Params {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Params {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ParamsVisitor;

        impl<'de> Visitor<'de> for ParamsVisitor {
            type Value = Params;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object of string parameters")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Params, A::Error> {
                let mut entries: Vec<(String, String)> = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, String>()? {
                    if entries.iter().any(|(n, _)| *n == k) {
                        return Err(serde::de::Error::custom(format!("duplicate parameter `{k}`")));
                    }
                    entries.push((k, v));
                }
                Ok(Params(entries))
            }
        }

        deserializer.deserialize_map(ParamsVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WireMessage {
    /// Strictly increasing per connection and direction.
    pub seq: u64,
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Body {
    Hello { component_label: String, protocol_version: String },
    Event { event_name: String, context_key: String, params: Params },
    CondReq { request_id: u64, condition_name: String, context_key: String, args: Vec<String> },
    CondResp { request_id: u64, result: bool },
    ActReq { request_id: u64, action_name: String, context_key: String, args: Vec<String> },
    ActAck { request_id: u64 },
    Verdict { context_key: String, text: String, severity: Severity },
    Bye,
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Hello { .. } => "HELLO",
            Body::Event { .. } => "EVENT",
            Body::CondReq { .. } => "COND_REQ",
            Body::CondResp { .. } => "COND_RESP",
            Body::ActReq { .. } => "ACT_REQ",
            Body::ActAck { .. } => "ACT_ACK",
            Body::Verdict { .. } => "VERDICT",
            Body::Bye => "BYE",
        }
    }

    /// Request id carried by a request or its reply.
    pub fn request_id(&self) -> Option<u64> {
        match self {
            Body::CondReq { request_id, .. }
            | Body::CondResp { request_id, .. }
            | Body::ActReq { request_id, .. }
            | Body::ActAck { request_id } => Some(*request_id),
            _ => None,
        }
    }
}

impl WireMessage {
    pub fn new(seq: u64, body: Body) -> Self {
        WireMessage { seq, body }
    }

    /// Field-level invariants that a single message can be checked for.
    pub fn check(&self) -> Result<(), String> {
        match &self.body {
            Body::Hello { component_label, .. } if component_label.is_empty() => {
                Err("HELLO with empty component label".into())
            }
            Body::Event { context_key, .. } | Body::CondReq { context_key, .. } | Body::ActReq { context_key, .. }
                if context_key.is_empty() =>
            {
                Err(format!("{} with empty context key", self.body.kind()))
            }
            Body::Event { event_name, .. } if event_name.is_empty() => Err("EVENT with empty event name".into()),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for WireMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {}", self.seq, self.body.kind())?;
        match &self.body {
            Body::Hello { component_label, protocol_version } => write!(f, " {component_label} v{protocol_version}"),
            Body::Event { event_name, context_key, params } => {
                write!(f, " {event_name} [{context_key}]")?;
                for (k, v) in params.iter() {
                    write!(f, " {k}={v}")?;
                }
                Ok(())
            }
            Body::CondReq { request_id, condition_name, context_key, args } => {
                write!(f, " #{request_id} {condition_name}({}) [{context_key}]", args.join(", "))
            }
            Body::CondResp { request_id, result } => write!(f, " #{request_id} {result}"),
            Body::ActReq { request_id, action_name, context_key, args } => {
                write!(f, " #{request_id} {action_name}({}) [{context_key}]", args.join(", "))
            }
            Body::ActAck { request_id } => write!(f, " #{request_id}"),
            Body::Verdict { context_key, text, severity } => write!(f, " {severity} [{context_key}] {text}"),
            Body::Bye => Ok(()),
        }
    }
}

/// JSON shape of a message: `kind`, `seq`, then body fields alphabetically.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub(super) enum Repr {
    #[serde(rename = "HELLO")]
    Hello { seq: u64, component_label: String, protocol_version: String },
    #[serde(rename = "EVENT")]
    Event { seq: u64, context_key: String, event_name: String, params: Params },
    #[serde(rename = "COND_REQ")]
    CondReq { seq: u64, args: Vec<String>, condition_name: String, context_key: String, request_id: u64 },
    #[serde(rename = "COND_RESP")]
    CondResp { seq: u64, request_id: u64, result: bool },
    #[serde(rename = "ACT_REQ")]
    ActReq { seq: u64, action_name: String, args: Vec<String>, context_key: String, request_id: u64 },
    #[serde(rename = "ACT_ACK")]
    ActAck { seq: u64, request_id: u64 },
    #[serde(rename = "VERDICT")]
    Verdict { seq: u64, context_key: String, severity: Severity, text: String },
    #[serde(rename = "BYE")]
    Bye { seq: u64 },
}

pub(super) const KINDS: &[&str] = &["HELLO", "EVENT", "COND_REQ", "COND_RESP", "ACT_REQ", "ACT_ACK", "VERDICT", "BYE"];

impl From<&WireMessage> for Repr {
    fn from(m: &WireMessage) -> Self {
        let seq = m.seq;
        match m.body.clone() {
            Body::Hello { component_label, protocol_version } => Repr::Hello { seq, component_label, protocol_version },
            Body::Event { event_name, context_key, params } => Repr::Event { seq, context_key, event_name, params },
            Body::CondReq { request_id, condition_name, context_key, args } => {
                Repr::CondReq { seq, args, condition_name, context_key, request_id }
            }
            Body::CondResp { request_id, result } => Repr::CondResp { seq, request_id, result },
            Body::ActReq { request_id, action_name, context_key, args } => {
                Repr::ActReq { seq, action_name, args, context_key, request_id }
            }
            Body::ActAck { request_id } => Repr::ActAck { seq, request_id },
            Body::Verdict { context_key, text, severity } => Repr::Verdict { seq, context_key, severity, text },
            Body::Bye => Repr::Bye { seq },
        }
    }
}

impl From<Repr> for WireMessage {
    fn from(r: Repr) -> Self {
        match r {
            Repr::Hello { seq, component_label, protocol_version } => {
                WireMessage::new(seq, Body::Hello { component_label, protocol_version })
            }
            Repr::Event { seq, context_key, event_name, params } => {
                WireMessage::new(seq, Body::Event { event_name, context_key, params })
            }
            Repr::CondReq { seq, args, condition_name, context_key, request_id } => {
                WireMessage::new(seq, Body::CondReq { request_id, condition_name, context_key, args })
            }
            Repr::CondResp { seq, request_id, result } => WireMessage::new(seq, Body::CondResp { request_id, result }),
            Repr::ActReq { seq, action_name, args, context_key, request_id } => {
                WireMessage::new(seq, Body::ActReq { request_id, action_name, context_key, args })
            }
            Repr::ActAck { seq, request_id } => WireMessage::new(seq, Body::ActAck { request_id }),
            Repr::Verdict { seq, context_key, severity, text } => {
                WireMessage::new(seq, Body::Verdict { context_key, text, severity })
            }
            Repr::Bye { seq } => WireMessage::new(seq, Body::Bye),
        }
    }
}
