// Listener stub for component `javaComponent`, generated by polyrv. Do not edit.
#![allow(non_snake_case, dead_code)]

use polyrv::adapter::{AdapterError, Session};

pub const COMPONENT: &str = "javaComponent";

/// intercept: before ( call (MailShot.startExecution(...) ) && args (mailshotID, javaSubsCount))
pub fn on_callMailingExecution(session: &Session, mailshotID: &str, javaSubsCount: &str) -> Result<(), AdapterError> {
    session.emit_event("callMailingExecution", mailshotID, &[("mailshotID", mailshotID), ("javaSubsCount", javaSubsCount)])
}

/// system-side condition isEmailBlacklisted(c_custID)
pub fn register_isEmailBlacklisted<F>(session: &Session, callback: F) -> Result<(), AdapterError>
where
    F: Fn(&[String]) -> bool + Send + Sync + 'static,
{
    session.register_condition("isEmailBlacklisted", callback)
}
