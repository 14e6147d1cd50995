use thiserror::Error;

use super::message::{Repr, WireMessage, KINDS};

/// Largest payload a frame may carry, in bytes.
pub const MAX_PAYLOAD: usize = 1 << 20;

const HEADER: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD}-byte frame limit")]
    TooLarge(usize),
    #[error("invalid message: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("frame declares {0} bytes, over the {MAX_PAYLOAD}-byte limit")]
    TooLarge(usize),
    #[error("payload is not valid UTF-8")]
    NotUtf8,
    #[error("unknown message kind `{0}`")]
    UnknownKind(String),
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("invalid message: {0}")]
    Invalid(String),
}

/// Encodes one message as a length-prefixed frame.
pub fn encode(msg: &WireMessage) -> Result<Vec<u8>, EncodeError> {
    msg.check().map_err(EncodeError::Invalid)?;
    let payload = serde_json::to_vec(&Repr::from(msg)).expect("messages always serialise");
    if payload.len() > MAX_PAYLOAD {
        return Err(EncodeError::TooLarge(payload.len()));
    }
    let mut frame = Vec::with_capacity(HEADER + payload.len());
    frame.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    frame.extend_from_slice(&payload);
    Ok(frame)
}

/// Decodes the first frame of `bytes`. `Ok(None)` means the input is a
/// proper prefix of a frame and more bytes are needed.
pub fn decode(bytes: &[u8]) -> Result<Option<(WireMessage, &[u8])>, DecodeError> {
    if bytes.len() < HEADER {
        return Ok(None);
    }
    let len = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    if len > MAX_PAYLOAD {
        return Err(DecodeError::TooLarge(len));
    }
    if bytes.len() < HEADER + len {
        return Ok(None);
    }
    let (payload, rest) = bytes[HEADER..].split_at(len);
    Ok(Some((decode_payload(payload)?, rest)))
}

fn decode_payload(payload: &[u8]) -> Result<WireMessage, DecodeError> {
    let text = std::str::from_utf8(payload).map_err(|_| DecodeError::NotUtf8)?;
    if !(text.starts_with('{') && text.ends_with('}')) {
        return Err(DecodeError::Malformed("payload must be exactly one JSON object".into()));
    }
    let probe: KindProbe = serde_json::from_str(text).map_err(|e| DecodeError::Malformed(e.to_string()))?;
    if !KINDS.contains(&probe.kind.as_str()) {
        return Err(DecodeError::UnknownKind(probe.kind));
    }
    let repr: Repr = serde_json::from_str(text).map_err(|e| DecodeError::Malformed(e.to_string()))?;
    let msg = WireMessage::from(repr);
    msg.check().map_err(DecodeError::Invalid)?;
    Ok(msg)
}

#[derive(serde::Deserialize)]
struct KindProbe {
    kind: String,
}

/// Incremental decoder over a byte stream that arrives in arbitrary chunks.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Next complete message, if one is buffered. After an error the decoder
    /// state is unspecified and the connection should be dropped.
    pub fn next_message(&mut self) -> Result<Option<WireMessage>, DecodeError> {
        let (msg, consumed) = match decode(&self.buf)? {
            None => return Ok(None),
            Some((msg, rest)) => (msg, self.buf.len() - rest.len()),
        };
        self.buf.drain(..consumed);
        Ok(Some(msg))
    }

    /// Bytes received but not yet part of a complete frame.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }
}
