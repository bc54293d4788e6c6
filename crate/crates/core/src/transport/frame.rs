//! Length-prefixed frames: `u32 BE payload length | u8 tag | payload`.

use std::fmt;
use std::io::{self, Read, Write};

use super::codec::DecodeError;

pub const FRAME_HEADER_LEN: usize = 5;

/// Frames above this size are refused before allocation.
pub const MAX_PAYLOAD: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Tag {
    Commit = 0x01,
    Challenge = 0x02,
    FinalResponse = 0x03,
    Decision = 0x04,
    Instance = 0x10,
    Params = 0x11,
}

impl Tag {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0x01 => Tag::Commit,
            0x02 => Tag::Challenge,
            0x03 => Tag::FinalResponse,
            0x04 => Tag::Decision,
            0x10 => Tag::Instance,
            0x11 => Tag::Params,
            _ => return None,
        })
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::Commit => "commit",
            Tag::Challenge => "challenge",
            Tag::FinalResponse => "final-response",
            Tag::Decision => "decision",
            Tag::Instance => "instance",
            Tag::Params => "params",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub tag: Tag,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(tag: Tag, payload: Vec<u8>) -> Self {
        Self { tag, payload }
    }

    pub fn wire_len(&self) -> usize {
        FRAME_HEADER_LEN + self.payload.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.extend((self.payload.len() as u32).to_be_bytes());
        out.push(self.tag as u8);
        out.extend(&self.payload);
        out
    }

    /// Decodes one frame from the front of `bytes`, returning it and the
    /// number of bytes used.
    pub fn decode_prefix(bytes: &[u8]) -> Result<(Self, usize), DecodeError> {
        Self::decode_at(bytes, 0)
    }

    fn decode_at(bytes: &[u8], base: usize) -> Result<(Self, usize), DecodeError> {
        if bytes.len() < FRAME_HEADER_LEN {
            return Err(DecodeError::Truncated { offset: base + bytes.len(), needed: FRAME_HEADER_LEN - bytes.len() });
        }
        let len = u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes")) as usize;
        let tag = Tag::from_byte(bytes[4]).ok_or(DecodeError::UnknownTag { offset: base + 4, tag: bytes[4] })?;
        if len > MAX_PAYLOAD {
            return Err(DecodeError::Malformed { offset: base, reason: format!("frame length {len} exceeds {MAX_PAYLOAD}") });
        }
        let end = FRAME_HEADER_LEN + len;
        if bytes.len() < end {
            return Err(DecodeError::Truncated { offset: base + bytes.len(), needed: end - bytes.len() });
        }
        Ok((Self { tag, payload: bytes[FRAME_HEADER_LEN..end].to_vec() }, end))
    }

    /// Decodes exactly one frame.
    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let (f, used) = Self::decode_prefix(bytes)?;
        if used != bytes.len() {
            return Err(DecodeError::TrailingBytes { offset: used, count: bytes.len() - used });
        }
        Ok(f)
    }

    /// Splits a concatenation of frames.
    pub fn decode_all(bytes: &[u8]) -> Result<Vec<Self>, DecodeError> {
        let mut out = Vec::new();
        let mut at = 0;
        while at < bytes.len() {
            let (f, used) = Self::decode_at(&bytes[at..], at)?;
            out.push(f);
            at += used;
        }
        Ok(out)
    }

    pub fn write_to<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&self.encode())?;
        w.flush()
    }

    /// Reads one frame; `Ok(None)` on a clean end of stream before the header.
    pub fn read_from<R: Read + ?Sized>(r: &mut R) -> io::Result<Option<Result<Self, DecodeError>>> {
        let mut header = [0u8; FRAME_HEADER_LEN];
        let mut got = 0;
        while got < FRAME_HEADER_LEN {
            match r.read(&mut header[got..])? {
                0 if got == 0 => return Ok(None),
                0 => return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "stream ended inside a frame header")),
                n => got += n,
            }
        }
        let len = u32::from_be_bytes(header[..4].try_into().expect("4 bytes")) as usize;
        let Some(tag) = Tag::from_byte(header[4]) else {
            return Ok(Some(Err(DecodeError::UnknownTag { offset: 4, tag: header[4] })));
        };
        if len > MAX_PAYLOAD {
            return Ok(Some(Err(DecodeError::Malformed { offset: 0, reason: format!("frame length {len} too large") })));
        }
        let mut payload = vec![0u8; len];
        r.read_exact(&mut payload)?;
        Ok(Some(Ok(Self { tag, payload })))
    }
}
