//! `ibcs`: run compiled-argument sessions and extraction experiments.
//!
//! Exit status: 0 when the verifier accepts (or a replay matches), 1 when it
//! rejects, 2 on usage, input or transport errors.

use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ibcs_core::adversary::AdversarySpec;
use ibcs_core::argument::{arg_verify_detailed, comm_stats, ArgParams};
use ibcs_core::report::{replay, run_experiment, setup_for, ExperimentConfig, ExperimentKind, Report};
use ibcs_core::toy::{parse_instance, Instance, InstanceKind, LoadedInstance};
use ibcs_core::transport::{
    layout_overhead_bits, parse_transcript_file, run_prover, run_session, serve, session_rng, SessionReport, TcpChannel,
};
use ibcs_core::Witness;
use serde_json::json;

#[derive(Parser)]
#[command(name = "ibcs", version, about = "Interactive BCS compiler and extraction lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one session as the prover (memory: both sides in-process).
    Prove(ProveArgs),
    /// Check a transcript file, or serve verifier sessions over TCP.
    Verify(VerifyArgs),
    /// Monte-Carlo acceptance of cheating adversaries against the exact IOP error.
    Soundness(ExperimentArgs),
    /// Hybrid chain, event counters and end-to-end knowledge extraction.
    Extract(ExperimentArgs),
    /// Re-run the configuration embedded in a JSON report and compare.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance file, text or canonical binary.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    spec: SpecArg,
    #[arg(long, default_value_t = 128)]
    lambda: u16,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpecArg {
    Gc,
    Sumcheck,
}

impl From<SpecArg> for InstanceKind {
    fn from(s: SpecArg) -> Self {
        match s {
            SpecArg::Gc => InstanceKind::Gc,
            SpecArg::Sumcheck => InstanceKind::Sumcheck,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransportArg {
    Memory,
    Tcp,
}

#[derive(Args)]
struct ProveArgs {
    #[command(flatten)]
    common: InstanceArgs,
    #[arg(long, default_value = "honest")]
    adversary: String,
    #[arg(long, value_enum, default_value = "memory")]
    transport: TransportArg,
    /// Verifier address for `--transport tcp`.
    #[arg(long)]
    connect: Option<String>,
    /// Transcript file (memory transport only; over TCP the verifier writes it).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: InstanceArgs,
    /// Recorded transcript to check.
    #[arg(long, conflicts_with = "listen")]
    transcript: Option<PathBuf>,
    /// Address to accept prover connections on.
    #[arg(long)]
    listen: Option<String>,
    #[arg(long, default_value_t = 1)]
    sessions: u64,
    /// Transcript file of the first served session.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: InstanceArgs,
    /// Adversary selector; repeat for a sweep.
    #[arg(long, required = true)]
    adversary: Vec<String>,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// JSON output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Report file written by `soundness` or `extract`.
    report: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Prove(a) => prove(a),
        Command::Verify(a) => verify(a),
        Command::Soundness(a) => experiment(a, ExperimentKind::Soundness),
        Command::Extract(a) => experiment(a, ExperimentKind::Extraction),
        Command::Replay(a) => replay_cmd(a),
    }
}

fn load(common: &InstanceArgs) -> Result<LoadedInstance> {
    let bytes = fs::read(&common.instance).with_context(|| format!("reading {}", common.instance.display()))?;
    parse_instance(common.spec.into(), &bytes).with_context(|| format!("parsing {}", common.instance.display()))
}

fn setup(common: &InstanceArgs, instance: &Instance) -> Result<ArgParams> {
    setup_for(instance, common.lambda).map_err(|e| anyhow!("setup: {e}"))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn session_summary(report: &SessionReport, pp: &ArgParams) -> serde_json::Value {
    let stats = comm_stats(&report.transcript, pp);
    let (p2v_layout, v2p_layout) = layout_overhead_bits(&report.transcript, &pp.spec);
    json!({
        "decision": report.accepted as u8,
        "rejection": report.rejection,
        "frames": report.protocol_frames,
        "comm_stats": stats,
        "wire_bits": {
            "prover_to_verifier": report.prover_to_verifier_bytes * 8,
            "verifier_to_prover": report.verifier_to_prover_bytes * 8,
            "layout_prover_to_verifier": p2v_layout,
            "layout_verifier_to_prover": v2p_layout,
        },
    })
}

fn build_adversary(
    selector: &str,
    pp: &ArgParams,
    instance: &Instance,
    witness: Option<&Witness>,
) -> Result<Box<dyn ibcs_core::ArgProver>> {
    let spec: AdversarySpec = selector.parse().map_err(|e: String| anyhow!(e))?;
    spec.build(pp, instance, witness).map_err(|e| anyhow!("adversary {selector}: {e}"))
}

fn prove(a: ProveArgs) -> Result<bool> {
    let loaded = load(&a.common)?;
    let pp = setup(&a.common, &loaded.instance)?;
    let iop = loaded.instance.iop();
    let mut prover = build_adversary(&a.adversary, &pp, &loaded.instance, loaded.witness.as_ref())?;
    match a.transport {
        TransportArg::Memory => {
            if a.connect.is_some() {
                bail!("--connect needs --transport tcp");
            }
            let report = run_session(&pp, iop.as_ref(), prover.as_mut(), &mut session_rng(a.common.seed, 0))?;
            if let Some(out) = &a.out {
                write_file(out, &report.file_bytes())?;
            }
            println!("{}", serde_json::to_string_pretty(&session_summary(&report, &pp))?);
            Ok(report.accepted)
        }
        TransportArg::Tcp => {
            let addr = a.connect.as_deref().ok_or_else(|| anyhow!("--transport tcp needs --connect host:port"))?;
            if a.out.is_some() {
                bail!("over TCP the verifier writes the transcript; pass --out to `verify --listen`");
            }
            let mut ch = TcpChannel::connect(addr).with_context(|| format!("connecting to {addr}"))?;
            let report = run_prover(&mut ch, &pp, iop.as_ref(), prover.as_mut())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "decision": report.decision as u8,
                    "bytes_sent": report.channel.sent,
                    "bytes_received": report.channel.received,
                }))?
            );
            Ok(report.decision)
        }
    }
}

fn verify(a: VerifyArgs) -> Result<bool> {
    let loaded = load(&a.common)?;
    let pp = setup(&a.common, &loaded.instance)?;
    let iop = loaded.instance.iop();
    if let Some(path) = &a.transcript {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let rec = parse_transcript_file(&bytes).map_err(|e| anyhow!("transcript {}: {e}", path.display()))?;
        if rec.instance != loaded.instance {
            bail!("transcript is for a different instance");
        }
        if rec.params != pp {
            bail!("transcript parameters differ from setup with --lambda {}", a.common.lambda);
        }
        let verdict = arg_verify_detailed(&pp, iop.as_ref(), &rec.transcript);
        let accepted = verdict.is_ok();
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "decision": accepted as u8,
                "recorded_decision": rec.decision as u8,
                "rejection": verdict.err().map(|r| r.to_string()),
                "comm_stats": comm_stats(&rec.transcript, &pp),
            }))?
        );
        if rec.decision != accepted {
            bail!("recorded decision {} disagrees with verification", rec.decision as u8);
        }
        return Ok(accepted);
    }
    let addr = a.listen.as_deref().ok_or_else(|| anyhow!("verify needs --transcript or --listen"))?;
    if a.sessions == 0 {
        bail!("--sessions must be at least 1");
    }
    let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
    eprintln!("listening on {}", listener.local_addr()?);
    let results = serve(&listener, &pp, iop.as_ref(), a.common.seed, a.sessions);
    let mut all = true;
    for (id, r) in results.iter().enumerate() {
        match r {
            Ok(report) => {
                if id == 0 {
                    if let Some(out) = &a.out {
                        write_file(out, &report.file_bytes())?;
                    }
                }
                let mut v = session_summary(report, &pp);
                v["session"] = json!(id);
                println!("{}", serde_json::to_string_pretty(&v)?);
                all &= report.accepted;
            }
            Err(e) => {
                println!("{}", serde_json::to_string_pretty(&json!({ "session": id, "decision": 0, "error": e.to_string() }))?);
                all = false;
            }
        }
    }
    Ok(all)
}

fn experiment(a: ExperimentArgs, kind: ExperimentKind) -> Result<bool> {
    if a.trials == 0 {
        bail!("--trials must be at least 1");
    }
    if !(a.epsilon > 0.0 && a.epsilon <= 1.0) {
        bail!("--epsilon must lie in (0, 1]");
    }
    let loaded = load(&a.common)?;
    if kind == ExperimentKind::Soundness && loaded.instance.iop().in_language() {
        let overridden = a.adversary.iter().all(|s| matches!(s.parse(), Ok(AdversarySpec::Grinder { .. })));
        if !overridden {
            bail!("instance is in the language, so it is not a soundness instance; use grinder adversaries to measure a predicate");
        }
    }
    let mut reports = Vec::new();
    for selector in &a.adversary {
        let config = ExperimentConfig {
            kind,
            instance: loaded.instance.clone(),
            witness: loaded.witness.clone(),
            adversary: selector.clone(),
            lambda: a.common.lambda,
            epsilon: a.epsilon,
            trials: a.trials,
            seed: a.common.seed,
        };
        reports.push(run_experiment(&config).with_context(|| format!("adversary {selector}"))?);
    }
    let passed = reports.iter().all(report_passes);
    let text = serde_json::to_string_pretty(&reports)?;
    match &a.out {
        Some(path) => {
            write_file(path, text.as_bytes())?;
            eprintln!("wrote {} report(s) to {}", reports.len(), path.display());
        }
        None => println!("{text}"),
    }
    Ok(passed)
}

fn report_passes(r: &Report) -> bool {
    match &r.result {
        ibcs_core::report::ExperimentResult::Soundness(s) => s.within_bound != Some(false),
        ibcs_core::report::ExperimentResult::Extraction(_) => true,
    }
}

fn replay_cmd(a: ReplayArgs) -> Result<bool> {
    let text = fs::read_to_string(&a.report).with_context(|| format!("reading {}", a.report.display()))?;
    let reports: Vec<Report> = match serde_json::from_str::<Vec<Report>>(&text) {
        Ok(list) => list,
        Err(_) => vec![serde_json::from_str::<Report>(&text).context("parsing report")?],
    };
    let mut all = true;
    for (i, r) in reports.iter().enumerate() {
        let out = replay(r).with_context(|| format!("replaying report {i}"))?;
        if !out.version_matches {
            eprintln!("report {i}: written by version {}, running {}", r.version, out.fresh.version);
        }
        println!("report {i} ({}): {}", r.config.adversary, if out.matches { "identical" } else { "DIFFERS" });
        all &= out.matches;
    }
    Ok(all)
}
