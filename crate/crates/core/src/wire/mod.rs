//! Messages exchanged between components and the central monitor, and their
//! byte encoding: a 4-byte big-endian length followed by a JSON payload.
//!
//! Payload fields appear as `kind`, `seq`, then the body fields in
//! alphabetical order, so every message has exactly one encoding.

mod codec;
mod message;
mod stream;

pub use codec::{decode, encode, DecodeError, EncodeError, FrameDecoder, MAX_PAYLOAD};
pub use message::{Body, Params, Severity, WireMessage};
pub use stream::{read_message, write_message, SeqCheck, SeqCounter, StreamError};

pub const PROTOCOL_VERSION: &str = "1";

pub const DEFAULT_PORT: u16 = 7483;
