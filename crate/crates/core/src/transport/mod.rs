//! Wire format, channels and session drivers.

pub mod channel;
pub mod codec;
pub mod frame;
pub mod session;

pub use channel::{ByteCounters, Channel, MemoryChannel, TcpChannel, TransportError};
pub use codec::{DecodeError, EncodeError, Reader};
pub use frame::{Frame, Tag, FRAME_HEADER_LEN};
pub use session::{
    layout_overhead_bits, parse_transcript_file, run_prover, run_session, run_verifier, serve, session_rng,
    ProverReport, RecordedSession, SessionError, SessionReport,
};
