//! The monitor service: accepts component connections and drives the engine.
//!
//! A single executor thread owns the engine. Each connection has a reader
//! thread feeding decoded messages into one channel, so messages from a
//! connection are seen in send order and the executor sees one global
//! arrival order. Events are queued per context key: a context waiting on a
//! component reply holds back only its own later events. Requests to one
//! component may be in flight for several contexts at once.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;
use std::io::{self, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::engine::{Directive, Engine, Evaluation, Event, Poll, Reply, Request, RequestKind, SystemFailure, Verdict};
use crate::compiler::CentralConfig;
use crate::wire::{read_message, write_message, Body, SeqCheck, SeqCounter, Severity, WireMessage, PROTOCOL_VERSION};

/// How long a component has to answer a condition or action request.
pub const REQUEST_TIMEOUT: Duration = Duration::from_secs(5);

const IDLE_TICK: Duration = Duration::from_millis(50);

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("cannot listen: {0}")]
    Bind(io::Error),
}

pub struct MonitorOptions {
    pub request_timeout: Duration,
    /// Each verdict is written to every sink as one line.
    pub verdict_sinks: Vec<Box<dyn Write + Send>>,
    /// Receives one line per wire message in either direction.
    pub trace_sink: Option<Box<dyn Write + Send>>,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        MonitorOptions { request_timeout: REQUEST_TIMEOUT, verdict_sinks: Vec::new(), trace_sink: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Inbound,
    Outbound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub connection: u64,
    pub component: Option<String>,
    pub direction: Direction,
    pub message: WireMessage,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.direction {
            Direction::Inbound => "<-",
            Direction::Outbound => "->",
        };
        let who = self.component.clone().unwrap_or_else(|| format!("conn{}", self.connection));
        write!(f, "{arrow} {who} {}", self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MonitorReport {
    pub verdicts: Vec<Verdict>,
    pub trace: Vec<TraceEntry>,
}

impl MonitorReport {
    pub fn violations(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| v.is_violation())
    }

    pub fn summary(&self) -> String {
        format!("{} verdicts, {} violations", self.verdicts.len(), self.violations().count())
    }
}

enum Input {
    Accepted { conn: u64, stream: TcpStream },
    Message { conn: u64, msg: WireMessage },
    Closed { conn: u64, reason: Option<String> },
    Stop,
}

/// Asks a running monitor to shut down.
#[derive(Clone)]
pub struct StopHandle(Sender<Input>);

impl StopHandle {
    pub fn stop(&self) {
        let _ = self.0.send(Input::Stop);
    }
}

/// A bound, not yet running monitor.
pub struct Monitor {
    config: CentralConfig,
    listener: TcpListener,
    options: MonitorOptions,
    tx: Sender<Input>,
    rx: Receiver<Input>,
}

impl Monitor {
    pub fn bind(
        config: CentralConfig,
        addr: impl ToSocketAddrs,
        options: MonitorOptions,
    ) -> Result<Self, MonitorError> {
        let listener = TcpListener::bind(addr).map_err(MonitorError::Bind)?;
        listener.set_nonblocking(true).map_err(MonitorError::Bind)?;
        let (tx, rx) = mpsc::channel();
        Ok(Monitor { config, listener, options, tx, rx })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    pub fn stop_handle(&self) -> StopHandle {
        StopHandle(self.tx.clone())
    }

    /// Runs until stopped, or until every component that connected has sent
    /// BYE or disconnected and no evaluation is pending.
    pub fn run(self) -> MonitorReport {
        let halt = Arc::new(AtomicBool::new(false));
        let acceptor = spawn_acceptor(self.listener, self.tx.clone(), halt.clone());
        let mut runtime = Runtime::new(self.config, self.options);
        runtime.run(&self.rx);
        halt.store(true, Ordering::SeqCst);
        let _ = acceptor.join();
        runtime.shutdown();
        runtime.report
    }

    pub fn spawn(self) -> MonitorHandle {
        let addr = self.local_addr();
        let stop = self.stop_handle();
        let thread = thread::spawn(move || self.run());
        MonitorHandle { addr, stop, thread }
    }
}

pub struct MonitorHandle {
    addr: SocketAddr,
    stop: StopHandle,
    thread: JoinHandle<MonitorReport>,
}

impl MonitorHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stop_handle(&self) -> StopHandle {
        self.stop.clone()
    }

    /// Waits for the monitor to finish on its own.
    pub fn join(self) -> MonitorReport {
        self.thread.join().expect("monitor thread panicked")
    }

    pub fn stop(self) -> MonitorReport {
        self.stop.stop();
        self.join()
    }
}

/// Binds `addr` and runs a monitor on the calling thread.
pub fn run_monitor(
    config: CentralConfig,
    addr: impl ToSocketAddrs,
    options: MonitorOptions,
) -> Result<MonitorReport, MonitorError> {
    Ok(Monitor::bind(config, addr, options)?.run())
}

fn spawn_acceptor(listener: TcpListener, tx: Sender<Input>, halt: Arc<AtomicBool>) -> JoinHandle<()> {
    thread::spawn(move || {
        let mut next_id = 0u64;
        while !halt.load(Ordering::SeqCst) {
            match listener.accept() {
                Ok((stream, peer)) => {
                    next_id += 1;
                    let conn = next_id;
                    log::debug!("connection {conn} from {peer}");
                    let setup = stream
                        .set_nonblocking(false)
                        .and_then(|_| stream.set_nodelay(true))
                        .and_then(|_| stream.try_clone());
                    let reader = match setup {
                        Ok(r) => r,
                        Err(e) => {
                            log::warn!("dropping connection from {peer}: {e}");
                            continue;
                        }
                    };
                    if tx.send(Input::Accepted { conn, stream }).is_err() {
                        return;
                    }
                    let tx = tx.clone();
                    thread::spawn(move || read_loop(conn, reader, tx));
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    thread::sleep(Duration::from_millis(5));
                }
            }
        }
    })
}

fn read_loop(conn: u64, mut stream: TcpStream, tx: Sender<Input>) {
    let mut seq = SeqCheck::new();
    loop {
        let input = match read_message(&mut stream).and_then(|m| m.map(|m| seq.accept(&m).map(|_| m)).transpose()) {
            Ok(Some(msg)) => Input::Message { conn, msg },
            Ok(None) => Input::Closed { conn, reason: None },
            Err(e) => Input::Closed { conn, reason: Some(e.to_string()) },
        };
        let last = matches!(input, Input::Closed { .. });
        if tx.send(input).is_err() || last {
            return;
        }
    }
}

struct Outstanding {
    kind: RequestKind,
    context_key: String,
    deadline: Instant,
}

struct Conn {
    stream: TcpStream,
    seq: SeqCounter,
    label: Option<String>,
    open: bool,
    said_bye: bool,
    next_request: u64,
    outstanding: BTreeMap<u64, Outstanding>,
    /// Requests given up on; a late reply to one of these is ignored.
    abandoned: HashSet<u64>,
}

#[derive(Default)]
struct Context {
    queue: VecDeque<Event>,
    running: Option<Evaluation>,
}

struct Runtime {
    engine: Engine,
    options: MonitorOptions,
    conns: BTreeMap<u64, Conn>,
    contexts: BTreeMap<String, Context>,
    greeted: bool,
    stopping: bool,
    report: MonitorReport,
}

impl Runtime {
    fn new(config: CentralConfig, options: MonitorOptions) -> Self {
        Runtime {
            engine: Engine::new(config),
            options,
            conns: BTreeMap::new(),
            contexts: BTreeMap::new(),
            greeted: false,
            stopping: false,
            report: MonitorReport::default(),
        }
    }

    fn run(&mut self, rx: &Receiver<Input>) {
        while !self.finished() {
            let wait = self
                .next_deadline()
                .map(|d| d.saturating_duration_since(Instant::now()).min(IDLE_TICK))
                .unwrap_or(IDLE_TICK);
            match rx.recv_timeout(wait) {
                Ok(input) => self.handle(input),
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => break,
            }
            self.expire(Instant::now());
        }
    }

    fn finished(&self) -> bool {
        if self.stopping {
            return true;
        }
        self.greeted
            && self.conns.values().all(|c| !c.open || c.said_bye)
            && self.contexts.is_empty()
            && self.conns.values().all(|c| c.outstanding.is_empty())
    }

    fn next_deadline(&self) -> Option<Instant> {
        self.conns.values().flat_map(|c| c.outstanding.values().map(|o| o.deadline)).min()
    }

    fn handle(&mut self, input: Input) {
        match input {
            Input::Accepted { conn, stream } => {
                self.conns.insert(
                    conn,
                    Conn {
                        stream,
                        seq: SeqCounter::new(),
                        label: None,
                        open: true,
                        said_bye: false,
                        next_request: 0,
                        outstanding: BTreeMap::new(),
                        abandoned: HashSet::new(),
                    },
                );
            }
            Input::Message { conn, msg } => self.on_message(conn, msg),
            Input::Closed { conn, reason } => {
                if let Some(reason) = reason {
                    log::warn!("connection {conn}: {reason}");
                }
                self.close(conn);
            }
            Input::Stop => self.stopping = true,
        }
    }

    fn on_message(&mut self, id: u64, msg: WireMessage) {
        let Some(conn) = self.conns.get(&id) else { return };
        if !conn.open {
            return;
        }
        let label = conn.label.clone();
        self.trace(id, Direction::Inbound, &msg);
        let Some(label) = label else {
            return self.greet(id, msg);
        };
        match msg.body {
            Body::Event { event_name, context_key, params } => {
                let key = context_key.clone();
                let ctx = self.contexts.entry(key.clone()).or_default();
                ctx.queue.push_back(Event { name: event_name, context_key, params });
                if ctx.running.is_none() {
                    self.drive(&key, None);
                }
            }
            Body::CondResp { request_id, result } => self.on_reply(id, request_id, Reply::Condition(Ok(result))),
            Body::ActAck { request_id } => self.on_reply(id, request_id, Reply::Action(Ok(()))),
            Body::Bye => {
                if let Some(c) = self.conns.get_mut(&id) {
                    c.said_bye = true;
                }
            }
            other => {
                log::warn!("{label}: unexpected {} from a component, closing", other.kind());
                self.close(id);
            }
        }
    }

    fn greet(&mut self, id: u64, msg: WireMessage) {
        match msg.body {
            Body::Hello { component_label, protocol_version } if protocol_version == PROTOCOL_VERSION => {
                log::info!("component {component_label} connected");
                if let Some(c) = self.conns.get_mut(&id) {
                    c.label = Some(component_label);
                }
                self.greeted = true;
            }
            body => {
                let key = match &body {
                    Body::Hello { component_label, .. } => component_label.clone(),
                    _ => "-".to_string(),
                };
                let verdict = Verdict::violation(&key, "protocol mismatch");
                self.record(&verdict);
                let _ = self.send(
                    id,
                    Body::Verdict { context_key: key, text: verdict.text.clone(), severity: Severity::Violation },
                );
                let _ = self.send(id, Body::Bye);
                self.close(id);
            }
        }
    }

    fn on_reply(&mut self, id: u64, request_id: u64, reply: Reply) {
        let conn = self.conns.get_mut(&id).expect("known connection");
        let kind = match reply {
            Reply::Condition(_) => RequestKind::Condition,
            Reply::Action(_) => RequestKind::Action,
        };
        match conn.outstanding.get(&request_id) {
            Some(o) if o.kind == kind => {
                let o = conn.outstanding.remove(&request_id).expect("checked");
                self.drive(&o.context_key, Some(reply));
            }
            _ if conn.abandoned.remove(&request_id) => {
                log::info!("late reply to request {request_id} ignored");
            }
            _ => {
                log::warn!("reply to request {request_id}, which is not outstanding; closing");
                self.close(id);
            }
        }
    }

    /// Advances the context's evaluation, then its queued events, until it
    /// waits on a component or runs out of events.
    fn drive(&mut self, key: &str, mut reply: Option<Reply>) {
        loop {
            let Some(ctx) = self.contexts.get_mut(key) else { return };
            let mut eval = match ctx.running.take() {
                Some(eval) => eval,
                None => match ctx.queue.pop_front() {
                    Some(event) => self.engine.begin(event),
                    None => {
                        self.contexts.remove(key);
                        return;
                    }
                },
            };
            let mut out = Vec::new();
            let poll = self.engine.advance(&mut eval, reply.take(), &mut out);
            self.emit(out);
            if let Poll::Pending(request) = poll {
                self.contexts.get_mut(key).expect("context present").running = Some(eval);
                match self.route(&request.component) {
                    Some(id) => match self.request(id, key, request) {
                        Ok(()) => return,
                        Err(failure) => reply = Some(failure),
                    },
                    None => {
                        reply = Some(Reply::failure(
                            request.kind,
                            SystemFailure::Unavailable(request.component.clone()),
                        ));
                    }
                }
            }
        }
    }

    /// The earliest open connection that announced `label`.
    fn route(&self, label: &str) -> Option<u64> {
        self.conns.iter().find(|(_, c)| c.open && c.label.as_deref() == Some(label)).map(|(id, _)| *id)
    }

    /// Sends a request for context `key`. On a write failure the connection
    /// is closed and the failure reply for this request is returned.
    fn request(&mut self, id: u64, key: &str, request: Request) -> Result<(), Reply> {
        let conn = self.conns.get_mut(&id).expect("routed");
        conn.next_request += 1;
        let request_id = conn.next_request;
        let label = conn.label.clone().unwrap_or_default();
        let kind = request.kind;
        let body = match kind {
            RequestKind::Condition => Body::CondReq {
                request_id,
                condition_name: request.name,
                context_key: key.to_string(),
                args: request.args,
            },
            RequestKind::Action => Body::ActReq {
                request_id,
                action_name: request.name,
                context_key: key.to_string(),
                args: request.args,
            },
        };
        if let Err(e) = self.send(id, body) {
            log::warn!("connection {id}: {e}");
            self.close(id);
            return Err(Reply::failure(kind, SystemFailure::Disconnected(label)));
        }
        let deadline = Instant::now() + self.options.request_timeout;
        let conn = self.conns.get_mut(&id).expect("routed");
        conn.outstanding.insert(request_id, Outstanding { kind, context_key: key.to_string(), deadline });
        Ok(())
    }

    fn send(&mut self, id: u64, body: Body) -> Result<(), crate::wire::StreamError> {
        let conn = self.conns.get_mut(&id).expect("known connection");
        let msg = conn.seq.stamp(body);
        let result = write_message(&mut conn.stream, &msg);
        self.trace(id, Direction::Outbound, &msg);
        result
    }

    /// Marks the connection closed and fails every request it owed.
    fn close(&mut self, id: u64) {
        let Some(conn) = self.conns.get_mut(&id) else { return };
        if !conn.open {
            return;
        }
        conn.open = false;
        let _ = conn.stream.shutdown(Shutdown::Both);
        let label = conn.label.clone().unwrap_or_else(|| format!("conn{id}"));
        let owed: Vec<(String, RequestKind)> =
            std::mem::take(&mut conn.outstanding).into_values().map(|o| (o.context_key, o.kind)).collect();
        for (key, kind) in owed {
            self.drive(&key, Some(Reply::failure(kind, SystemFailure::Disconnected(label.clone()))));
        }
    }

    fn expire(&mut self, now: Instant) {
        let due: Vec<(u64, u64)> = self
            .conns
            .iter()
            .flat_map(|(id, c)| c.outstanding.iter().filter(|(_, o)| o.deadline <= now).map(|(r, _)| (*id, *r)))
            .collect();
        for (id, request_id) in due {
            let conn = self.conns.get_mut(&id).expect("known connection");
            let o = conn.outstanding.remove(&request_id).expect("filtered");
            conn.abandoned.insert(request_id);
            self.drive(&o.context_key, Some(Reply::failure(o.kind, SystemFailure::Timeout)));
        }
    }

    fn emit(&mut self, directives: Vec<Directive>) {
        for d in directives {
            log::debug!("{d:?}");
            if let Directive::EmitVerdict(v) = d {
                self.record(&v);
            }
        }
    }

    fn record(&mut self, verdict: &Verdict) {
        for sink in &mut self.options.verdict_sinks {
            let _ = writeln!(sink, "{verdict}").and_then(|_| sink.flush());
        }
        self.report.verdicts.push(verdict.clone());
    }

    fn trace(&mut self, id: u64, direction: Direction, msg: &WireMessage) {
        let component = self.conns.get(&id).and_then(|c| c.label.clone());
        let entry = TraceEntry { connection: id, component, direction, message: msg.clone() };
        if let Some(sink) = &mut self.options.trace_sink {
            let _ = writeln!(sink, "{entry}").and_then(|_| sink.flush());
        }
        self.report.trace.push(entry);
    }

    fn shutdown(&mut self) {
        let open: Vec<u64> = self.conns.iter().filter(|(_, c)| c.open).map(|(id, _)| *id).collect();
        for id in open {
            let _ = self.send(id, Body::Bye);
            let conn = self.conns.get_mut(&id).expect("known connection");
            conn.open = false;
            let _ = conn.stream.shutdown(Shutdown::Write);
        }
    }
}
