//! Prover and verifier session drivers.
//!
//! Wire order of one session:
//!
//! ```text
//! P -> V  params, instance                  setup
//! P -> V  commit     V -> P  challenge      k times
//! P -> V  final response
//! V -> P  decision                          epilogue
//! ```
//!
//! Only the `2k + 1` frames between setup and epilogue are protocol
//! messages; the byte counters in [`SessionReport`] cover exactly those.
//! Both drivers are strict state machines: any frame other than the one
//! expected next aborts the session, and the verifier never accepts an
//! aborted session.

use std::net::TcpListener;
use std::thread;

use rand::RngCore;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use super::channel::{ByteCounters, Channel, MemoryChannel, TcpChannel, TransportError};
use super::codec::{self, final_response_stream_bits, EncodeError};
use super::frame::{Frame, Tag, FRAME_HEADER_LEN};
use crate::argument::{arg_verify_detailed, ArgParams, ArgProver, ProverError, Transcript};
use crate::iop::{Iop, IopSpec};
use crate::seed;
use crate::toy::Instance;
use crate::vc::VcError;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

fn violation(msg: impl Into<String>) -> SessionError {
    SessionError::Transport(TransportError::Protocol(msg.into()))
}

/// The verifier's view of a finished session.
#[derive(Debug, Clone)]
pub struct SessionReport {
    pub accepted: bool,
    /// Reason for rejection, when the transcript failed verification.
    pub rejection: Option<String>,
    pub transcript: Transcript,
    /// Every frame in wire order, setup and epilogue included.
    pub frames: Vec<Frame>,
    pub protocol_frames: usize,
    pub prover_to_verifier_bytes: u64,
    pub verifier_to_prover_bytes: u64,
    /// Raw totals seen by the verifier's channel endpoint.
    pub channel: ByteCounters,
}

impl SessionReport {
    /// The transcript file: all frames concatenated.
    pub fn file_bytes(&self) -> Vec<u8> {
        self.frames.iter().flat_map(Frame::encode).collect()
    }
}

/// The prover's view of a finished session.
#[derive(Debug, Clone)]
pub struct ProverReport {
    pub decision: bool,
    pub channel: ByteCounters,
}

/// Verifier generator for session `id` under `master`.
pub fn session_rng(master: u64, id: u64) -> ChaCha20Rng {
    seed::stream(master, "session", id)
}

fn expect<C: Channel + ?Sized>(ch: &mut C, tag: Tag) -> Result<Frame, SessionError> {
    let f = ch.recv()?;
    if f.tag != tag {
        return Err(TransportError::unexpected(tag, f.tag).into());
    }
    Ok(f)
}

pub fn run_verifier<C: Channel + ?Sized, R: RngCore + ?Sized>(
    ch: &mut C,
    pp: &ArgParams,
    iop: &dyn Iop,
    rng: &mut R,
) -> Result<SessionReport, SessionError> {
    let result = verifier_steps(ch, pp, iop, rng);
    if result.is_err() {
        // best effort: tell the prover it lost
        let _ = ch.send(&Frame::new(Tag::Decision, codec::encode_decision(false)));
    }
    result
}

fn verifier_steps<C: Channel + ?Sized, R: RngCore + ?Sized>(
    ch: &mut C,
    pp: &ArgParams,
    iop: &dyn Iop,
    rng: &mut R,
) -> Result<SessionReport, SessionError> {
    let spec = iop.spec();
    let mut frames = Vec::with_capacity(2 * spec.rounds() + 4);
    let params = expect(ch, Tag::Params)?;
    if params.payload != pp.to_bytes() {
        return Err(violation("prover uses different public parameters"));
    }
    let instance = expect(ch, Tag::Instance)?;
    if instance.payload != iop.encode_instance() {
        return Err(violation("prover uses a different instance"));
    }
    frames.extend([params, instance]);
    let (mut p2v, mut v2p) = (0u64, 0u64);
    let mut t = Transcript::new(iop.encode_instance());
    for space in &spec.challenges {
        let f = expect(ch, Tag::Commit)?;
        t.commitments.push(codec::decode_commitment(&f.payload).map_err(TransportError::from)?);
        p2v += f.wire_len() as u64;
        frames.push(f);
        // the commitment is fixed; only now is r_i drawn
        let r = space.sample(rng);
        let out = Frame::new(Tag::Challenge, codec::encode_challenge(&r));
        ch.send(&out)?;
        v2p += out.wire_len() as u64;
        t.challenges.push(r);
        frames.push(out);
    }
    let f = expect(ch, Tag::FinalResponse)?;
    t.response = codec::decode_final_response(&f.payload, spec).map_err(TransportError::from)?;
    p2v += f.wire_len() as u64;
    frames.push(f);
    let verdict = arg_verify_detailed(pp, iop, &t);
    let decision = Frame::new(Tag::Decision, codec::encode_decision(verdict.is_ok()));
    ch.send(&decision)?;
    frames.push(decision);
    Ok(SessionReport {
        accepted: verdict.is_ok(),
        rejection: verdict.err().map(|e| e.to_string()),
        protocol_frames: frames.len() - 3,
        transcript: t,
        frames,
        prover_to_verifier_bytes: p2v,
        verifier_to_prover_bytes: v2p,
        channel: ch.counters(),
    })
}

pub fn run_prover<C: Channel + ?Sized>(
    ch: &mut C,
    pp: &ArgParams,
    iop: &dyn Iop,
    prover: &mut dyn ArgProver,
) -> Result<ProverReport, SessionError> {
    let spec = iop.spec();
    ch.send(&Frame::new(Tag::Params, pp.to_bytes()))?;
    ch.send(&Frame::new(Tag::Instance, iop.encode_instance()))?;
    let mut prev = None;
    for space in &spec.challenges {
        let cm = prover.commit(prev.as_ref())?;
        ch.send(&Frame::new(Tag::Commit, codec::encode_commitment(&cm)))?;
        let f = expect(ch, Tag::Challenge)?;
        prev = Some(codec::decode_challenge(&f.payload, space.bits).map_err(TransportError::from)?);
    }
    let openings = prover.respond(prev.as_ref().expect("k >= 1"))?;
    ch.send(&Frame::new(Tag::FinalResponse, codec::encode_final_response(spec, &openings)?))?;
    let f = expect(ch, Tag::Decision)?;
    let decision = codec::decode_decision(&f.payload).map_err(TransportError::from)?;
    Ok(ProverReport { decision, channel: ch.counters() })
}

/// Runs both parties in-process over a [`MemoryChannel`], the prover on a
/// scoped thread.
pub fn run_session<R: RngCore + ?Sized>(
    pp: &ArgParams,
    iop: &dyn Iop,
    prover: &mut dyn ArgProver,
    rng: &mut R,
) -> Result<SessionReport, SessionError> {
    let (mut vch, mut pch) = MemoryChannel::pair();
    thread::scope(|s| {
        let handle = s.spawn(move || run_prover(&mut pch, pp, iop, prover));
        let verdict = run_verifier(&mut vch, pp, iop, rng);
        drop(vch);
        let prover_side = handle.join().expect("prover thread panicked");
        let report = verdict?;
        prover_side?;
        Ok(report)
    })
}

/// Accepts `sessions` connections and runs a verifier for each on its own
/// thread, session `i` drawing from [`session_rng`]`(master, i)`.
pub fn serve(
    listener: &TcpListener,
    pp: &ArgParams,
    iop: &dyn Iop,
    master: u64,
    sessions: u64,
) -> Vec<Result<SessionReport, SessionError>> {
    thread::scope(|s| {
        let mut handles = Vec::new();
        for id in 0..sessions {
            match listener.accept() {
                Ok((stream, _)) => handles.push(s.spawn(move || {
                    let mut ch = TcpChannel::from_stream(stream);
                    run_verifier(&mut ch, pp, iop, &mut session_rng(master, id))
                })),
                Err(e) => handles.push(s.spawn(move || Err(TransportError::Io(e).into()))),
            }
        }
        handles.into_iter().map(|h| h.join().expect("verifier thread panicked")).collect()
    })
}

/// Bits on the wire beyond the communication formula, per direction,
/// derived from the frame layout alone: frame headers, the final
/// response's count fields and bitstream padding, and challenge padding.
pub fn layout_overhead_bits(t: &Transcript, spec: &IopSpec) -> (u64, u64) {
    let k = spec.rounds() as u64;
    let header = 8 * FRAME_HEADER_LEN as u64;
    let queries: Vec<usize> = t.response.iter().map(|o| o.positions.len()).collect();
    let stream = final_response_stream_bits(spec, &queries);
    let p2v = (k + 1) * header + k * 64 + (stream.div_ceil(8) * 8 - stream);
    let v2p = k * header + t.challenges.iter().map(|c| (c.bits() as u64).div_ceil(8) * 8 - c.bits() as u64).sum::<u64>();
    (p2v, v2p)
}

/// A transcript file read back.
#[derive(Debug, Clone)]
pub struct RecordedSession {
    pub params: ArgParams,
    pub instance: Instance,
    pub transcript: Transcript,
    pub decision: bool,
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error(transparent)]
    Decode(#[from] super::codec::DecodeError),
    #[error("bad parameters: {0}")]
    Params(#[from] VcError),
    #[error("frame {index}: {reason}")]
    Layout { index: usize, reason: String },
}

pub fn parse_transcript_file(bytes: &[u8]) -> Result<RecordedSession, RecordError> {
    let frames = Frame::decode_all(bytes)?;
    let layout = |index: usize, reason: String| RecordError::Layout { index, reason };
    let want = |index: usize, tag: Tag| -> Result<&Frame, RecordError> {
        let f = frames.get(index).ok_or_else(|| layout(index, format!("missing {tag} frame")))?;
        if f.tag != tag {
            return Err(layout(index, format!("expected {tag}, found {}", f.tag)));
        }
        Ok(f)
    };
    let params_bytes = &want(0, Tag::Params)?.payload;
    let instance = Instance::decode(&want(1, Tag::Instance)?.payload)?;
    let iop = instance.iop();
    let spec = iop.spec();
    let params = ArgParams::from_bytes(params_bytes, spec)?;
    let k = spec.rounds();
    if frames.len() != 2 * k + 4 {
        return Err(layout(frames.len(), format!("expected {} frames, found {}", 2 * k + 4, frames.len())));
    }
    let mut t = Transcript::new(instance.encode());
    for (i, space) in spec.challenges.iter().enumerate() {
        t.commitments.push(codec::decode_commitment(&want(2 + 2 * i, Tag::Commit)?.payload)?);
        t.challenges.push(codec::decode_challenge(&want(3 + 2 * i, Tag::Challenge)?.payload, space.bits)?);
    }
    t.response = codec::decode_final_response(&want(2 + 2 * k, Tag::FinalResponse)?.payload, spec)?;
    let decision = codec::decode_decision(&want(3 + 2 * k, Tag::Decision)?.payload)?;
    Ok(RecordedSession { params, instance, transcript: t, decision })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::argument::{arg_setup, comm_stats, run_argument, HonestArgProver};
    use crate::toy::{GcPcp, GraphColoringInstance, SumcheckInstance, SumcheckIop};
    use std::sync::Arc;

    fn k3() -> (Arc<dyn Iop>, ArgParams) {
        let iop: Arc<dyn Iop> = Arc::new(GcPcp::new(GraphColoringInstance::complete(3)));
        let pp = arg_setup(128, 3, iop.spec()).unwrap();
        (iop, pp)
    }

    #[test]
    fn memory_session_accepts_and_matches_in_process_run() {
        let (iop, pp) = k3();
        let mut p = HonestArgProver::from_witness(&pp, iop.clone(), &[0, 1, 2]).unwrap();
        let report = run_session(&pp, iop.as_ref(), &mut p, &mut session_rng(5, 0)).unwrap();
        assert!(report.accepted);
        assert_eq!(report.protocol_frames, 3);
        let mut q = HonestArgProver::from_witness(&pp, iop.clone(), &[0, 1, 2]).unwrap();
        let direct = run_argument(&pp, iop.as_ref(), &mut q, &mut session_rng(5, 0));
        assert_eq!(direct.transcript, report.transcript);
    }

    #[test]
    fn wire_bits_equal_formula_plus_layout() {
        let inst = SumcheckInstance::honest(17, 3, 2, (0..27).map(|i| i % 17).collect()).unwrap();
        let iop: Arc<dyn Iop> = Arc::new(SumcheckIop::new(inst));
        let pp = arg_setup(128, 27, iop.spec()).unwrap();
        let mut p = HonestArgProver::from_witness(&pp, iop.clone(), &[]).unwrap();
        let report = run_session(&pp, iop.as_ref(), &mut p, &mut session_rng(1, 0)).unwrap();
        let stats = comm_stats(&report.transcript, &pp);
        let (op, ov) = layout_overhead_bits(&report.transcript, iop.spec());
        assert_eq!(8 * report.prover_to_verifier_bytes, stats.prover_to_verifier_bits + op);
        assert_eq!(8 * report.verifier_to_prover_bytes, stats.verifier_to_prover_bits + ov);
    }

    #[test]
    fn transcript_file_round_trip() {
        let (iop, pp) = k3();
        let mut p = HonestArgProver::from_witness(&pp, iop.clone(), &[2, 0, 1]).unwrap();
        let report = run_session(&pp, iop.as_ref(), &mut p, &mut session_rng(2, 0)).unwrap();
        let rec = parse_transcript_file(&report.file_bytes()).unwrap();
        assert_eq!(rec.transcript, report.transcript);
        assert_eq!(rec.params, pp);
        assert!(rec.decision);
        let bytes = report.file_bytes();
        assert!(parse_transcript_file(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn out_of_order_frames_abort() {
        let (iop, pp) = k3();
        let scripts: Vec<Vec<Frame>> = vec![
            // commit before setup
            vec![Frame::new(Tag::Commit, vec![0; 32])],
            // final response instead of the commitment
            vec![
                Frame::new(Tag::Params, pp.to_bytes()),
                Frame::new(Tag::Instance, iop.encode_instance()),
                Frame::new(Tag::FinalResponse, vec![0; 8]),
            ],
            // two commitments in a row
            vec![
                Frame::new(Tag::Params, pp.to_bytes()),
                Frame::new(Tag::Instance, iop.encode_instance()),
                Frame::new(Tag::Commit, vec![0; 32]),
                Frame::new(Tag::Commit, vec![0; 32]),
            ],
            // instance before params
            vec![Frame::new(Tag::Instance, iop.encode_instance()), Frame::new(Tag::Params, pp.to_bytes())],
        ];
        for script in scripts {
            let (mut v, mut p) = MemoryChannel::pair();
            for f in &script {
                p.send(f).unwrap();
            }
            let out = run_verifier(&mut v, &pp, iop.as_ref(), &mut session_rng(0, 0));
            assert!(matches!(out, Err(SessionError::Transport(TransportError::Protocol(_)))), "{out:?}");
        }
    }

    #[test]
    fn tcp_session_matches_memory_session() {
        let (iop, pp) = k3();
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let (iop2, pp2) = (iop.clone(), pp.clone());
        let client = thread::spawn(move || {
            let mut ch = TcpChannel::connect(addr).unwrap();
            let mut p = HonestArgProver::from_witness(&pp2, iop2.clone(), &[0, 1, 2]).unwrap();
            run_prover(&mut ch, &pp2, iop2.as_ref(), &mut p).unwrap()
        });
        let served = serve(&listener, &pp, iop.as_ref(), 7, 1).pop().unwrap().unwrap();
        assert!(client.join().unwrap().decision);
        let mut p = HonestArgProver::from_witness(&pp, iop.clone(), &[0, 1, 2]).unwrap();
        let local = run_session(&pp, iop.as_ref(), &mut p, &mut session_rng(7, 0)).unwrap();
        assert_eq!(served.file_bytes(), local.file_bytes());
        assert_eq!(served.channel, local.channel);
    }
}
