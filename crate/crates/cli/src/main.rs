use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use distinct_dp::harness::{
    attack_csv, bench_sweep, generate, measure_error, run_attack, sweep_csv, AttackKind, GeneratorModel,
    GeneratorSpec, SweepConfig,
};
use distinct_dp::{
    dp_to_zcdp_budget, parse_stream, zcdp_to_dp, AdaptiveMechanism, ContinualMechanism, Execution, HybridMechanism,
    MechanismKind, MechanismSpec, NoiseSource, SvtQueryRecord, SvtState,
};

#[derive(Parser, Debug)]
#[command(name = "distinct-dp", version, about = "Private continual distinct counting on turnstile streams")]
struct Cli {
    /// Base seed for streams and noise.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic stream in text form.
    Gen(GenArgs),
    /// Run a mechanism over a stream file.
    Run(RunArgs),
    /// Error sweep over adversarial-flip streams.
    Bench(BenchArgs),
    /// Batch inner-product or marginal queries answered through a mechanism.
    Attack {
        #[command(subcommand)]
        kind: AttackCommand,
    },
    /// Convert between zCDP and approximate DP.
    Convert(ConvertArgs),
    /// Replay query values through the sparse vector technique.
    SvtTrace(SvtArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_parser = parse_model)]
    model: GeneratorModel,
    /// Stream length.
    #[arg(long, short = 'T')]
    horizon: usize,
    #[arg(long, default_value_t = 16)]
    universe: usize,
    /// Target maximum flippancy (adversarial-flip).
    #[arg(long)]
    w: Option<u64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_parser = parse_kind)]
    mechanism: MechanismKind,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    w: Option<u64>,
    /// Block length for the recompute mechanism.
    #[arg(long)]
    block: Option<usize>,
    #[arg(long)]
    stream: PathBuf,
    /// Clamp bounded outputs to [0, elements seen].
    #[arg(long)]
    clamp: bool,
    /// Replace all noise with zeros.
    #[arg(long)]
    zero_noise: bool,
    /// Dump per-step SVT queries to stderr.
    #[arg(long)]
    trace: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_parser = parse_kind, default_value = "adaptive")]
    mechanism: MechanismKind,
    #[arg(long)]
    rho: f64,
    /// Comma-separated flippancy grid.
    #[arg(long, value_delimiter = ',', default_value = "2,8,32,128")]
    grid: Vec<u64>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, short = 'T', default_value_t = 4096)]
    horizon: usize,
    #[arg(long, default_value_t = 64)]
    universe: usize,
    #[arg(long)]
    zero_noise: bool,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum AttackCommand {
    InnerProduct {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        common: AttackArgs,
    },
    Marginals {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        common: AttackArgs,
    },
}

#[derive(Args, Debug)]
struct AttackArgs {
    #[arg(long)]
    rho: f64,
    #[arg(long, value_parser = parse_kind, default_value = "bounded")]
    mechanism: MechanismKind,
    #[arg(long)]
    w: Option<u64>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long)]
    zero_noise: bool,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[arg(long, conflicts_with = "eps")]
    rho: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: f64,
}

#[derive(Args, Debug)]
struct SvtArgs {
    /// File with one query value per line; `#` starts a comment.
    #[arg(long)]
    values: PathBuf,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 1)]
    cutoff: u32,
    #[arg(long)]
    zero_noise: bool,
}

fn parse_kind(s: &str) -> Result<MechanismKind, String> {
    s.parse().map_err(|e: distinct_dp::Error| e.to_string())
}

fn parse_model(s: &str) -> Result<GeneratorModel, String> {
    s.parse().map_err(|e: distinct_dp::Error| e.to_string())
}

/// Failures that map to exit code 1 rather than 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn source(seed: u64, zeroed: bool) -> NoiseSource {
    if zeroed {
        NoiseSource::Zeroed
    } else {
        NoiseSource::Seeded(seed)
    }
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn trace_csv(records: &[SvtQueryRecord]) -> String {
    let mut s = String::from("t,w_max,high_count,value,answer\n");
    for r in records {
        s.push_str(&format!("{},{},{},{},{}\n", r.t, r.w_max, r.high_count, r.value, r.answer));
    }
    s
}

fn cmd_run(cli: &Cli, a: &RunArgs) -> anyhow::Result<()> {
    if a.mechanism == MechanismKind::Bounded && a.w.is_none() {
        return Err(usage("--w is required for the bounded mechanism"));
    }
    let bytes = fs::read(&a.stream).with_context(|| format!("reading {}", a.stream.display()))?;
    let x = parse_stream(&bytes)?;
    let src = source(cli.seed, a.zero_noise);
    let t = x.len();

    let mut estimates = Vec::with_capacity(t);
    let mut w_max = Vec::with_capacity(t);
    let mut records = Vec::new();
    let mut drive = |m: &mut dyn ContinualMechanism| -> anyhow::Result<()> {
        for &e in x.entries() {
            estimates.push(m.step(e)?);
            if let Some(w) = m.w_max() {
                w_max.push(w);
            }
        }
        Ok(())
    };
    match a.mechanism {
        MechanismKind::Adaptive if a.trace => {
            let mut m = AdaptiveMechanism::new(t, a.rho, src)?.with_trace();
            drive(&mut m)?;
            records = m.take_trace();
        }
        MechanismKind::Hybrid if a.trace => {
            let mut m = HybridMechanism::new(t, a.rho, src)?.with_trace();
            drive(&mut m)?;
            records = m.take_trace();
        }
        kind => {
            let mut spec = MechanismSpec::new(kind, a.rho);
            spec.w = a.w;
            spec.block = a.block;
            spec.clamp = a.clamp;
            let mut m = spec.build(t, src)?;
            drive(&mut *m)?;
        }
    }
    if a.trace {
        eprint!("{}", trace_csv(&records));
    }
    let trace = measure_error(&x, &estimates)?;
    let w = (w_max.len() == t).then_some(w_max.as_slice());
    emit(cli.out.as_deref(), &trace.to_csv(w))
}

fn cmd_svt(cli: &Cli, a: &SvtArgs) -> anyhow::Result<()> {
    let text = fs::read_to_string(&a.values).with_context(|| format!("reading {}", a.values.display()))?;
    let mut svt = SvtState::new(a.rho, a.cutoff, source(cli.seed, a.zero_noise))?;
    let mut out = String::from("i,value,answer\n");
    let mut i = 0;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| anyhow!("line {}: not a number: `{line}`", line_no + 1))?;
        i += 1;
        out.push_str(&format!("{i},{line},{}\n", svt.query(v)));
    }
    emit(cli.out.as_deref(), &out)
}

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    let Format::Csv = cli.format;
    match &cli.command {
        Command::Gen(a) => {
            let mut spec = GeneratorSpec::new(a.model, a.horizon, a.universe, cli.seed);
            spec.flippancy = a.w;
            if a.model == GeneratorModel::AdversarialFlip && a.w.is_none() {
                return Err(usage("--w is required for adversarial-flip"));
            }
            emit(cli.out.as_deref(), &generate(&spec)?.to_text())
        }
        Command::Run(a) => cmd_run(cli, a),
        Command::Bench(a) => {
            let mut cfg = SweepConfig::new(MechanismSpec::new(a.mechanism, a.rho), a.grid.clone(), a.trials, a.horizon, cli.seed);
            cfg.universe = a.universe;
            cfg.zeroed = a.zero_noise;
            cfg.execution = execution(a.sequential);
            emit(cli.out.as_deref(), &sweep_csv(&bench_sweep(&cfg)?))
        }
        Command::Attack { kind } => {
            let (kind, c) = match kind {
                AttackCommand::InnerProduct { n, k, common } => (AttackKind::InnerProduct { n: *n, k: *k }, common),
                AttackCommand::Marginals { n, d, common } => (AttackKind::Marginals { n: *n, d: *d }, common),
            };
            let mut spec = MechanismSpec::new(c.mechanism, c.rho);
            spec.w = c.w;
            let trials = run_attack(kind, spec, c.trials, cli.seed, c.zero_noise, execution(c.sequential))?;
            emit(cli.out.as_deref(), &attack_csv(&trials))
        }
        Command::Convert(a) => {
            let text = match (a.rho, a.eps) {
                (Some(rho), None) => {
                    let (eps, delta) = zcdp_to_dp(rho, a.delta)?;
                    format!("epsilon={eps}\ndelta={delta}\n")
                }
                (None, Some(eps)) => format!("rho={}\n", dp_to_zcdp_budget(eps, a.delta)?),
                _ => return Err(usage("exactly one of --rho and --eps is required")),
            };
            emit(cli.out.as_deref(), &text)
        }
        Command::SvtTrace(a) => cmd_svt(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<Usage>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
