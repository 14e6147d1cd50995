//! Splits a script into a central monitor program and per-component
//! manifests, and generates listener stubs through technology plugins.

mod config;
mod native;
mod plugin;
mod python;
mod split;

pub use config::*;
pub use native::NativePlugin;
pub use plugin::{generate_stub, PluginError, PluginHandle, PluginRegistry, StubPlugin};
pub use python::PythonPlugin;
pub use split::{split_spec, CompileError};
