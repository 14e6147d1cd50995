//! Technology-agnostic runtime verification.
//!
//! One property script describes rules of the form
//! `event \ condition -> action` inside replicated `upon` blocks. The
//! [`compiler`] splits it into a configuration for the central monitor and a
//! manifest per monitored component; the [`monitor`] evaluates rules over
//! events arriving on the [`wire`] protocol; the [`adapter`] is the client
//! library components embed to emit events and answer system-side queries.

extern crate self as polyrv;

pub mod adapter;
pub mod compiler;
pub mod monitor;
pub mod spec;
pub mod wire;


pub use spec::{parse_spec, pretty_print, validate_spec, SpecAst};
pub use compiler::{split_spec, CentralConfig, ComponentManifest};
