//! A two-component mailing pipeline wired through generated listener stubs.
//!
//! `javaComponent` owns the subscriber list and the blacklist: it announces a
//! mailshot with its recipient count and answers `isEmailBlacklisted`.
//! `cComponent` parses the recipient file and creates one mail per recipient.
//! The stubs under `generated/` come from the `demo-native` plugin; the calls
//! into them stand where an interception framework would weave them.

use std::collections::BTreeSet;
use std::net::ToSocketAddrs;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use super::{AdapterError, Session};
use crate::compiler::{split_spec, CentralConfig, ComponentManifest};
use crate::spec::parse_spec;

#[path = "generated/cComponent.rs"]
mod c_stub;
#[path = "generated/javaComponent.rs"]
mod java_stub;

/// Script checked by the demo.
pub const MAILER_SPEC: &str = include_str!("../../../fixtures/mailer.prv");

pub const MAILSHOT_ID: &str = "mailshot-1";

/// Recipients blacklisted before the mailshot starts.
pub const INITIAL_BLACKLIST: &[&str] = &["u9"];

pub fn mailer_artifacts() -> (CentralConfig, Vec<ComponentManifest>) {
    let ast = parse_spec(MAILER_SPEC).expect("bundled script parses");
    split_spec(&ast).expect("bundled script compiles")
}

fn manifest(label: &str) -> ComponentManifest {
    mailer_artifacts().1.into_iter().find(|m| m.component_label == label).expect("bundled label")
}

#[derive(Debug, Clone)]
pub struct MailerOptions {
    pub recipients: usize,
    /// The recipient file the C side parses loses its last entry.
    pub corrupt_count: bool,
    /// Blacklist this recipient after the Java side has filtered the list.
    pub late_blacklist: Option<String>,
    /// Pause before the C side starts, so the mailshot announcement from the
    /// other connection reaches the monitor first.
    pub handoff_delay: Duration,
}

impl Default for MailerOptions {
    fn default() -> Self {
        MailerOptions { recipients: 5, corrupt_count: false, late_blacklist: None, handoff_delay: Duration::from_millis(50) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MailerRun {
    pub announced: usize,
    pub mails_created: Vec<String>,
}

pub fn recipient_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("u{i}")).collect()
}

/// Runs both components against the monitor at `addr` and returns once the
/// monitor has closed both sessions.
pub fn run_mailer(addr: impl ToSocketAddrs + Clone, options: &MailerOptions) -> Result<MailerRun, AdapterError> {
    let java = Session::connect(addr.clone(), manifest(java_stub::COMPONENT))?;
    let c = Session::connect(addr, manifest(c_stub::COMPONENT))?;

    let blacklist: Arc<Mutex<BTreeSet<String>>> =
        Arc::new(Mutex::new(INITIAL_BLACKLIST.iter().map(|s| s.to_string()).collect()));
    let lookup = blacklist.clone();
    java_stub::register_isEmailBlacklisted(&java, move |args| {
        args.first().is_some_and(|id| lookup.lock().expect("blacklist").contains(id))
    })?;

    let servers: Vec<_> = [java.clone(), c.clone()]
        .into_iter()
        .map(|s| thread::spawn(move || s.serve()))
        .collect();

    let subscribers: Vec<String> = {
        let bl = blacklist.lock().expect("blacklist");
        recipient_ids(options.recipients).into_iter().filter(|r| !bl.contains(r)).collect()
    };
    java_stub::on_callMailingExecution(&java, MAILSHOT_ID, &subscribers.len().to_string())?;
    if let Some(id) = &options.late_blacklist {
        blacklist.lock().expect("blacklist").insert(id.clone());
    }

    thread::sleep(options.handoff_delay);
    let mut parsed = subscribers.clone();
    if options.corrupt_count {
        parsed.pop();
    }
    c_stub::on_startXMLProcessing(&c, MAILSHOT_ID, &parsed.len().to_string())?;
    for r in &parsed {
        c_stub::on_inCreateMail(&c, r)?;
    }

    java.finish()?;
    c.finish()?;
    for server in servers {
        server.join().expect("serve thread panicked")?;
    }
    Ok(MailerRun { announced: subscribers.len(), mails_created: parsed })
}
