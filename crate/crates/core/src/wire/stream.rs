use std::io::{self, Read, Write};

use thiserror::Error;

use super::codec::{decode, encode, DecodeError, EncodeError, MAX_PAYLOAD};
use super::message::{Body, WireMessage};

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("connection closed mid-frame")]
    Truncated,
    #[error("sequence number {got} does not follow {last}")]
    Sequence { last: u64, got: u64 },
}

/// Reads one frame. `Ok(None)` on a clean end of stream between frames.
pub fn read_message<R: Read>(reader: &mut R) -> Result<Option<WireMessage>, StreamError> {
    let mut header = [0u8; 4];
    let mut filled = 0;
    while filled < header.len() {
        match reader.read(&mut header[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(StreamError::Truncated),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(header) as usize;
    if len > MAX_PAYLOAD {
        return Err(DecodeError::TooLarge(len).into());
    }
    let mut frame = vec![0u8; 4 + len];
    frame[..4].copy_from_slice(&header);
    reader.read_exact(&mut frame[4..]).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => StreamError::Truncated,
        _ => StreamError::Io(e),
    })?;
    match decode(&frame)? {
        Some((msg, _)) => Ok(Some(msg)),
        None => unreachable!("a whole frame was read"),
    }
}

pub fn write_message<W: Write>(writer: &mut W, msg: &WireMessage) -> Result<(), StreamError> {
    writer.write_all(&encode(msg)?)?;
    writer.flush()?;
    Ok(())
}

/// Hands out outgoing sequence numbers, starting at 1.
#[derive(Debug, Default)]
pub struct SeqCounter {
    last: u64,
}

impl SeqCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stamp(&mut self, body: Body) -> WireMessage {
        self.last += 1;
        WireMessage::new(self.last, body)
    }
}

/// Checks that incoming sequence numbers strictly increase.
#[derive(Debug, Default)]
pub struct SeqCheck {
    last: Option<u64>,
}

impl SeqCheck {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn accept(&mut self, msg: &WireMessage) -> Result<(), StreamError> {
        if let Some(last) = self.last {
            if msg.seq <= last {
                return Err(StreamError::Sequence { last, got: msg.seq });
            }
        }
        self.last = Some(msg.seq);
        Ok(())
    }
}
