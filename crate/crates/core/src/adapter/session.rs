use std::collections::HashMap;
use std::io;
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use thiserror::Error;

use crate::compiler::ComponentManifest;
use crate::monitor::Verdict;
use crate::wire::{read_message, write_message, Body, Params, SeqCheck, SeqCounter, StreamError, PROTOCOL_VERSION};

const CONNECT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("cannot connect to {addr}: {source}")]
    Connect { addr: String, source: io::Error },
    #[error("{kind} `{name}` is not in the manifest of component `{component}`")]
    NotInManifest { component: String, kind: &'static str, name: String },
    #[error("a callback for `{0}` is already registered")]
    DuplicateRegistration(String),
    #[error("event `{event}` needs parameter `{param}`")]
    MissingParam { event: String, param: String },
    #[error("event `{event}` has no parameter `{param}`")]
    UnknownParam { event: String, param: String },
    #[error("event `{event}`: {param}={value} disagrees with context key `{context_key}`")]
    ContextMismatch { event: String, param: String, value: String, context_key: String },
    #[error("empty context key for event `{0}`")]
    EmptyContextKey(String),
    #[error("send failed: {0}")]
    Send(#[source] StreamError),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("session is closed")]
    Closed,
    #[error("session is already being served")]
    AlreadyServing,
}

type ConditionFn = Arc<dyn Fn(&[String]) -> bool + Send + Sync>;
type ActionFn = Arc<dyn Fn(&[String]) + Send + Sync>;

struct Writer {
    stream: TcpStream,
    seq: SeqCounter,
    said_bye: bool,
}

struct Inner {
    manifest: ComponentManifest,
    writer: Mutex<Writer>,
    reader: Mutex<Option<TcpStream>>,
    open: AtomicBool,
    conditions: RwLock<HashMap<String, ConditionFn>>,
    actions: RwLock<HashMap<String, ActionFn>>,
    verdicts: Mutex<Vec<Verdict>>,
}

/// A component's connection to the central monitor. Cloning shares the
/// connection, so one thread can [`serve`](Session::serve) while others emit.
#[derive(Clone)]
pub struct Session {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session").field("label", &self.label()).field("open", &self.is_open()).finish()
    }
}

impl Session {
    /// Connects and announces the manifest's component label.
    pub fn connect(addr: impl ToSocketAddrs, manifest: ComponentManifest) -> Result<Session, AdapterError> {
        let addrs: Vec<_> = addr
            .to_socket_addrs()
            .map_err(|source| AdapterError::Connect { addr: "<unresolved>".into(), source })?
            .collect();
        let mut last = io::Error::new(io::ErrorKind::NotFound, "no address");
        let mut stream = None;
        for a in &addrs {
            match TcpStream::connect_timeout(a, CONNECT_TIMEOUT) {
                Ok(s) => {
                    stream = Some(s);
                    break;
                }
                Err(e) => last = e,
            }
        }
        let shown = addrs.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ");
        let stream = stream.ok_or(AdapterError::Connect { addr: shown.clone(), source: last })?;
        let connect_err = |source| AdapterError::Connect { addr: shown.clone(), source };
        stream.set_nodelay(true).map_err(connect_err)?;
        let reader = stream.try_clone().map_err(connect_err)?;
        let session = Session {
            inner: Arc::new(Inner {
                writer: Mutex::new(Writer { stream, seq: SeqCounter::new(), said_bye: false }),
                reader: Mutex::new(Some(reader)),
                open: AtomicBool::new(true),
                conditions: RwLock::new(HashMap::new()),
                actions: RwLock::new(HashMap::new()),
                verdicts: Mutex::new(Vec::new()),
                manifest,
            }),
        };
        session.send(Body::Hello {
            component_label: session.label().to_string(),
            protocol_version: PROTOCOL_VERSION.to_string(),
        })?;
        Ok(session)
    }

    pub fn label(&self) -> &str {
        &self.inner.manifest.component_label
    }

    pub fn manifest(&self) -> &ComponentManifest {
        &self.inner.manifest
    }

    pub fn is_open(&self) -> bool {
        self.inner.open.load(Ordering::SeqCst)
    }

    /// Verdicts the monitor sent to this component.
    pub fn verdicts(&self) -> Vec<Verdict> {
        self.inner.verdicts.lock().expect("verdict lock").clone()
    }

    fn send(&self, body: Body) -> Result<(), AdapterError> {
        if !self.is_open() {
            return Err(AdapterError::Closed);
        }
        let mut w = self.inner.writer.lock().expect("writer lock");
        let msg = w.seq.stamp(body);
        write_message(&mut w.stream, &msg).map_err(|e| {
            self.inner.open.store(false, Ordering::SeqCst);
            AdapterError::Send(e)
        })
    }

    fn not_in_manifest(&self, kind: &'static str, name: &str) -> AdapterError {
        AdapterError::NotInManifest { component: self.label().to_string(), kind, name: name.to_string() }
    }

    /// Sends an event. The context parameter may be omitted from `params`,
    /// in which case it takes the value of `context_key`.
    pub fn emit_event(&self, name: &str, context_key: &str, params: &[(&str, &str)]) -> Result<(), AdapterError> {
        let event = self.inner.manifest.event(name).ok_or_else(|| self.not_in_manifest("event", name))?;
        if context_key.is_empty() {
            return Err(AdapterError::EmptyContextKey(name.to_string()));
        }
        if let Some((p, _)) = params.iter().find(|(p, _)| !event.params.iter().any(|d| d == p)) {
            return Err(AdapterError::UnknownParam { event: name.to_string(), param: p.to_string() });
        }
        let given = |p: &str| params.iter().rev().find(|(n, _)| *n == p).map(|(_, v)| *v);
        let mut wire = Params::new();
        for p in &event.params {
            let value = match given(p) {
                Some(v) if *p == event.context_var && v != context_key => {
                    return Err(AdapterError::ContextMismatch {
                        event: name.to_string(),
                        param: p.clone(),
                        value: v.to_string(),
                        context_key: context_key.to_string(),
                    });
                }
                Some(v) => v,
                None if *p == event.context_var => context_key,
                None => return Err(AdapterError::MissingParam { event: name.to_string(), param: p.clone() }),
            };
            wire.insert(p.clone(), value);
        }
        self.send(Body::Event { event_name: name.to_string(), context_key: context_key.to_string(), params: wire })
    }

    pub fn register_condition<F>(&self, name: &str, callback: F) -> Result<(), AdapterError>
    where
        F: Fn(&[String]) -> bool + Send + Sync + 'static,
    {
        if self.inner.manifest.condition(name).is_none() {
            return Err(self.not_in_manifest("condition", name));
        }
        let mut table = self.inner.conditions.write().expect("condition table");
        if table.contains_key(name) {
            return Err(AdapterError::DuplicateRegistration(name.to_string()));
        }
        table.insert(name.to_string(), Arc::new(callback));
        Ok(())
    }

    pub fn register_action<F>(&self, name: &str, callback: F) -> Result<(), AdapterError>
    where
        F: Fn(&[String]) + Send + Sync + 'static,
    {
        if self.inner.manifest.action(name).is_none() {
            return Err(self.not_in_manifest("action", name));
        }
        let mut table = self.inner.actions.write().expect("action table");
        if table.contains_key(name) {
            return Err(AdapterError::DuplicateRegistration(name.to_string()));
        }
        table.insert(name.to_string(), Arc::new(callback));
        Ok(())
    }

    /// Answers monitor requests one at a time until the monitor says BYE or
    /// the connection ends. Any protocol error closes the session.
    pub fn serve(&self) -> Result<(), AdapterError> {
        let mut stream = self.inner.reader.lock().expect("reader lock").take().ok_or(AdapterError::AlreadyServing)?;
        let mut seq = SeqCheck::new();
        let result = loop {
            let msg = match read_message(&mut stream) {
                Ok(Some(msg)) => msg,
                Ok(None) => break Ok(()),
                Err(e) => break Err(AdapterError::Protocol(e.to_string())),
            };
            if let Err(e) = seq.accept(&msg) {
                break Err(AdapterError::Protocol(e.to_string()));
            }
            match msg.body {
                Body::CondReq { request_id, condition_name, args, .. } => {
                    let callback = self.inner.conditions.read().expect("condition table").get(&condition_name).cloned();
                    let result = match callback {
                        Some(f) => f(&args),
                        None => {
                            log::error!("{}: no callback for condition `{condition_name}`, answering false", self.label());
                            false
                        }
                    };
                    if let Err(e) = self.send(Body::CondResp { request_id, result }) {
                        break Err(e);
                    }
                }
                Body::ActReq { request_id, action_name, args, .. } => {
                    let callback = self.inner.actions.read().expect("action table").get(&action_name).cloned();
                    match callback {
                        Some(f) => f(&args),
                        None => log::error!("{}: no callback for action `{action_name}`", self.label()),
                    }
                    if let Err(e) = self.send(Body::ActAck { request_id }) {
                        break Err(e);
                    }
                }
                Body::Verdict { context_key, text, severity } => {
                    log::info!("{}: verdict {severity} {context_key} {text}", self.label());
                    self.inner.verdicts.lock().expect("verdict lock").push(Verdict { context_key, severity, text });
                }
                Body::Bye => break Ok(()),
                other => break Err(AdapterError::Protocol(format!("unexpected {} from the monitor", other.kind()))),
            }
        };
        self.inner.open.store(false, Ordering::SeqCst);
        let _ = stream.shutdown(Shutdown::Both);
        result
    }

    /// Tells the monitor this component will emit no more events. The
    /// session keeps answering requests until the monitor says BYE.
    pub fn finish(&self) -> Result<(), AdapterError> {
        {
            let w = self.inner.writer.lock().expect("writer lock");
            if w.said_bye {
                return Ok(());
            }
        }
        self.send(Body::Bye)?;
        self.inner.writer.lock().expect("writer lock").said_bye = true;
        Ok(())
    }

    /// Sends BYE if not yet sent and drops the connection.
    pub fn close(&self) {
        let _ = self.finish();
        self.inner.open.store(false, Ordering::SeqCst);
        let w = self.inner.writer.lock().expect("writer lock");
        let _ = w.stream.shutdown(Shutdown::Both);
    }
}
