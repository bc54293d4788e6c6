//! Duplex frame channels with per-direction byte counters.

use std::io;
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::mpsc::{channel, Receiver, Sender};

use thiserror::Error;

use super::codec::DecodeError;
use super::frame::{Frame, Tag};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("decode error: {0}")]
    Decode(#[from] DecodeError),
    #[error("peer closed the channel")]
    Closed,
    #[error("protocol violation: {0}")]
    Protocol(String),
}

impl TransportError {
    pub fn unexpected(expected: Tag, got: Tag) -> Self {
        TransportError::Protocol(format!("expected a {expected} frame, got {got}"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ByteCounters {
    pub sent: u64,
    pub received: u64,
}

/// A reliable, ordered, message-boundary-preserving frame endpoint.
pub trait Channel: Send {
    fn send(&mut self, frame: &Frame) -> Result<(), TransportError>;

    fn recv(&mut self) -> Result<Frame, TransportError>;

    fn counters(&self) -> ByteCounters;
}

/// In-process endpoint. Frames cross as encoded bytes and are decoded on
/// receipt, so the codec path is the same as over a socket.
#[derive(Debug)]
pub struct MemoryChannel {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    counters: ByteCounters,
}

impl MemoryChannel {
    pub fn pair() -> (Self, Self) {
        let (tx_a, rx_b) = channel();
        let (tx_b, rx_a) = channel();
        (
            Self { tx: tx_a, rx: rx_a, counters: ByteCounters::default() },
            Self { tx: tx_b, rx: rx_b, counters: ByteCounters::default() },
        )
    }

    /// Sends raw bytes that need not form a valid frame.
    pub fn send_raw(&mut self, bytes: Vec<u8>) -> Result<(), TransportError> {
        self.counters.sent += bytes.len() as u64;
        self.tx.send(bytes).map_err(|_| TransportError::Closed)
    }
}

impl Channel for MemoryChannel {
    fn send(&mut self, frame: &Frame) -> Result<(), TransportError> {
        self.send_raw(frame.encode())
    }

    fn recv(&mut self) -> Result<Frame, TransportError> {
        let bytes = self.rx.recv().map_err(|_| TransportError::Closed)?;
        self.counters.received += bytes.len() as u64;
        Ok(Frame::decode(&bytes)?)
    }

    fn counters(&self) -> ByteCounters {
        self.counters
    }
}

/// One frame per protocol message over a TCP stream.
#[derive(Debug)]
pub struct TcpChannel {
    stream: TcpStream,
    counters: ByteCounters,
}

impl TcpChannel {
    pub fn connect<A: ToSocketAddrs>(addr: A) -> Result<Self, TransportError> {
        Ok(Self::from_stream(TcpStream::connect(addr)?))
    }

    pub fn from_stream(stream: TcpStream) -> Self {
        // strictly alternating small messages
        let _ = stream.set_nodelay(true);
        Self { stream, counters: ByteCounters::default() }
    }
}

impl Channel for TcpChannel {
    fn send(&mut self, frame: &Frame) -> Result<(), TransportError> {
        frame.write_to(&mut self.stream)?;
        self.counters.sent += frame.wire_len() as u64;
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame, TransportError> {
        match Frame::read_from(&mut self.stream)? {
            None => Err(TransportError::Closed),
            Some(f) => {
                let f = f?;
                self.counters.received += f.wire_len() as u64;
                Ok(f)
            }
        }
    }

    fn counters(&self) -> ByteCounters {
        self.counters
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::TcpListener;

    #[test]
    fn memory_pair_counts_bytes() {
        let (mut a, mut b) = MemoryChannel::pair();
        a.send(&Frame::new(Tag::Commit, vec![0; 32])).unwrap();
        assert_eq!(b.recv().unwrap().payload.len(), 32);
        assert_eq!(a.counters().sent, 37);
        assert_eq!(b.counters().received, 37);
        a.send_raw(vec![0, 0, 0, 0, 0x42]).unwrap();
        assert!(matches!(b.recv(), Err(TransportError::Decode(DecodeError::UnknownTag { .. }))));
        drop(a);
        assert!(matches!(b.recv(), Err(TransportError::Closed)));
    }

    #[test]
    fn tcp_loopback() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let mut ch = TcpChannel::from_stream(listener.accept().unwrap().0);
            let f = ch.recv().unwrap();
            ch.send(&Frame::new(Tag::Challenge, f.payload)).unwrap();
            ch.counters()
        });
        let mut ch = TcpChannel::connect(addr).unwrap();
        ch.send(&Frame::new(Tag::Commit, vec![1, 2, 3])).unwrap();
        let back = ch.recv().unwrap();
        assert_eq!(back, Frame::new(Tag::Challenge, vec![1, 2, 3]));
        let server = handle.join().unwrap();
        assert_eq!(server, ByteCounters { sent: 8, received: 8 });
        assert!(matches!(ch.recv(), Err(TransportError::Closed)));
    }
}
