//! The central monitor: rule evaluation and the TCP service around it.

mod engine;
pub mod eval;
mod server;

pub use engine::{
    no_components, step, Directive, Engine, Evaluation, Event, Poll, Reply, Request, RequestKind, Responder,
    SystemFailure, Verdict,
};
pub use crate::wire::Severity;
pub use server::{
    run_monitor, Direction, Monitor, MonitorError, MonitorHandle, MonitorOptions, MonitorReport, StopHandle,
    TraceEntry, REQUEST_TIMEOUT,
};
