//! Client library for monitored components.

pub mod demo;
mod session;

pub use session::{AdapterError, Session};
