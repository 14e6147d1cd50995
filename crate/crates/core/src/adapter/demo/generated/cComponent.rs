// Listener stub for component `cComponent`, generated by polyrv. Do not edit.
#![allow(non_snake_case, dead_code)]

use polyrv::adapter::{AdapterError, Session};

pub const COMPONENT: &str = "cComponent";

/// intercept: before ( call (parse_receivers(...) ) && args (mailshotID, c_mailCount))
pub fn on_startXMLProcessing(session: &Session, mailshotID: &str, c_mailCount: &str) -> Result<(), AdapterError> {
    session.emit_event("startXMLProcessing", mailshotID, &[("mailshotID", mailshotID), ("c_mailCount", c_mailCount)])
}

/// intercept: before ( call (create_mail(...) ) && args (c_custID))
pub fn on_inCreateMail(session: &Session, c_custID: &str) -> Result<(), AdapterError> {
    session.emit_event("inCreateMail", c_custID, &[("c_custID", c_custID)])
}
