//! Helpers for driving a monitor over real sockets.

use std::io::{self, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use polyrv::adapter::Session;
use polyrv::monitor::{Event, Monitor, MonitorOptions, MonitorReport};
use polyrv::wire::{read_message, write_message, Body, SeqCounter, WireMessage, PROTOCOL_VERSION};
use polyrv::{parse_spec, split_spec, CentralConfig, ComponentManifest};

pub const PATIENCE: Duration = Duration::from_secs(5);

/// A `Write` sink tests can read back while the monitor is running.
#[derive(Clone, Default)]
pub struct SharedLog(Arc<Mutex<Vec<u8>>>);

impl SharedLog {
    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.0.lock().unwrap()).into_owned()
    }

    pub fn count(&self, pred: impl Fn(&str) -> bool) -> usize {
        self.text().lines().filter(|l| pred(l)).count()
    }

    /// Blocks until `pred` matches `n` lines.
    pub fn wait_for(&self, n: usize, pred: impl Fn(&str) -> bool) {
        let deadline = Instant::now() + PATIENCE;
        while self.count(&pred) < n {
            assert!(Instant::now() < deadline, "timed out waiting for {n} lines in:\n{}", self.text());
            thread::sleep(Duration::from_millis(2));
        }
    }
}

impl Write for SharedLog {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

pub fn compile(source: &str) -> (CentralConfig, Vec<ComponentManifest>) {
    split_spec(&parse_spec(source).expect("script parses")).expect("script compiles")
}

pub fn manifest(manifests: &[ComponentManifest], label: &str) -> ComponentManifest {
    manifests.iter().find(|m| m.component_label == label).cloned().expect("label present")
}

/// Spawns a monitor on an ephemeral port with its trace and verdict lines
/// mirrored into one log.
pub fn start(config: CentralConfig, request_timeout: Option<Duration>) -> (polyrv::monitor::MonitorHandle, SharedLog) {
    let log = SharedLog::default();
    let mut options = MonitorOptions {
        trace_sink: Some(Box::new(log.clone())),
        verdict_sinks: vec![Box::new(log.clone())],
        ..Default::default()
    };
    if let Some(t) = request_timeout {
        options.request_timeout = t;
    }
    let handle = Monitor::bind(config, "127.0.0.1:0", options).expect("bind").spawn();
    (handle, log)
}

pub fn inbound_kind(kind: &'static str) -> impl Fn(&str) -> bool {
    move |l: &str| l.starts_with("<-") && l.contains(&format!(" {kind}"))
}

pub fn outbound_kind(kind: &'static str) -> impl Fn(&str) -> bool {
    move |l: &str| l.starts_with("->") && l.contains(&format!(" {kind}"))
}

/// Hand-driven wire peer.
pub struct RawPeer {
    pub stream: TcpStream,
    seq: SeqCounter,
}

impl RawPeer {
    pub fn connect(addr: SocketAddr) -> Self {
        let stream = TcpStream::connect(addr).expect("connect");
        stream.set_read_timeout(Some(PATIENCE)).unwrap();
        RawPeer { stream, seq: SeqCounter::new() }
    }

    pub fn hello(addr: SocketAddr, label: &str) -> Self {
        let mut peer = Self::connect(addr);
        peer.send(Body::Hello { component_label: label.into(), protocol_version: PROTOCOL_VERSION.into() });
        peer
    }

    pub fn send(&mut self, body: Body) {
        let msg = self.seq.stamp(body);
        write_message(&mut self.stream, &msg).expect("send");
    }

    pub fn recv(&mut self) -> Option<WireMessage> {
        read_message(&mut self.stream).expect("well-formed frame from the monitor")
    }

    /// Next message, or `None` if nothing arrives within `wait`.
    pub fn recv_within(&mut self, wait: Duration) -> Option<WireMessage> {
        self.stream.set_read_timeout(Some(wait)).unwrap();
        let got = match read_message(&mut self.stream) {
            Ok(m) => m,
            Err(polyrv::wire::StreamError::Io(e))
                if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) =>
            {
                None
            }
            Err(e) => panic!("{e}"),
        };
        self.stream.set_read_timeout(Some(PATIENCE)).unwrap();
        got
    }
}

pub const PROGRAM1: &str = include_str!("../../fixtures/program1.prv");

/// Runs Program 1 with two `main` sessions; each event is emitted by the
/// session at its index. Before switching emitters the driver waits until the
/// monitor has taken every earlier event, so arrival order equals list order.
pub fn program1_over_tcp(script: &[(usize, Event)]) -> MonitorReport {
    let (config, manifests) = compile(PROGRAM1);
    let (monitor, log) = start(config, None);
    let stubs: Vec<Session> =
        (0..2).map(|_| Session::connect(monitor.local_addr(), manifest(&manifests, "main")).unwrap()).collect();
    log.wait_for(2, inbound_kind("HELLO"));
    let mut last = None;
    for (sent, (who, event)) in script.iter().enumerate() {
        if last.is_some_and(|l| l != *who) {
            log.wait_for(sent, inbound_kind("EVENT"));
        }
        let params: Vec<(&str, &str)> = event.params.iter().collect();
        stubs[*who].emit_event(&event.name, &event.context_key, &params).unwrap();
        last = Some(*who);
    }
    log.wait_for(script.len(), inbound_kind("EVENT"));
    for s in &stubs {
        s.finish().unwrap();
    }
    monitor.join()
}
