use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ppm_bench::audit::audit_csv;
use ppm_bench::config::{parse_real, Config, SolveConfig};
use ppm_bench::error::usage;
use ppm_bench::lowerbound::{run_lowerbound, Algorithm, LowerBoundConfig};
use ppm_bench::ratefit::ratefit;
use ppm_bench::smoke::run_smoke;
use ppm_bench::solve::solve;
use ppm_bench::Result;
use ppm_core::trace::CsvTrace;

/// Exit code for runs whose certificates fail.
const CERTIFICATE_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "ppm-bench", version, about = "Run, audit and fit proximal point method experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a benchmark problem and write a trace CSV plus a JSON summary.
    Solve(SolveArgs),
    /// Fit the log-log slope of the gap against T.
    Ratefit {
        /// One trace (fitted row by row) or several (one point per final row).
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long, default_value_t = 32.0)]
        from: f64,
        #[arg(long, default_value_t = 1024.0)]
        to: f64,
    },
    /// Drive an algorithm against the resisting oracle of a hard instance.
    Lowerbound {
        #[arg(long)]
        k: usize,
        /// Norm exponent; `inf` is accepted.
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 1)]
        q: usize,
        /// subgradient or accel.
        #[arg(long, default_value = "subgradient")]
        algorithm: String,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value = "lowerbound")]
        name: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-check trace CSV files.
    Audit {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
    /// Quick end-to-end runs of every method.
    Smoke,
}

#[derive(Args)]
struct SolveArgs {
    /// key=value config file; flags and --set override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long = "T")]
    t: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    name: Option<String>,
    /// Record wall time in the summary (breaks byte-identical reruns).
    #[arg(long)]
    timing: bool,
    /// Extra key=value overrides.
    #[arg(long = "set")]
    set: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_solve(a: SolveArgs) -> Result<bool> {
    let mut c = match &a.config {
        Some(path) => Config::parse(&read(path)?)?,
        None => Config::default(),
    };
    let flags = [
        ("problem", &a.problem),
        ("p", &a.p),
        ("q", &a.q),
        ("nu", &a.nu),
        ("T", &a.t),
        ("dim", &a.dim),
        ("method", &a.method),
        ("seed", &a.seed),
        ("name", &a.name),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            c.set(k, v)?;
        }
    }
    if a.timing {
        c.set("timing", "true")?;
    }
    for pair in &a.set {
        c.set_pair(pair)?;
    }
    let out = a.out.clone().or_else(|| c.get("out").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    let cfg = SolveConfig::from_config(&c)?;
    let outcome = solve(&cfg)?;
    outcome.write(&out)?;
    let s = &outcome.summary;
    println!("{}", outcome.summary_json().trim_end());
    if let Some(w) = &s.fit_warning {
        eprintln!("warning: {w}");
    }
    if !s.passed {
        eprintln!("certificate failure: {:?}; status {}", s.certificates, s.status);
    }
    Ok(s.passed)
}

fn cmd_ratefit(traces: &[PathBuf], from: f64, to: f64) -> Result<bool> {
    let parsed = traces.iter().map(|p| Ok(CsvTrace::parse(&read(p)?)?)).collect::<Result<Vec<_>>>()?;
    let report = ratefit(&parsed, from, to)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", serde_json::to_string(&report)?);
    Ok(true)
}

fn cmd_audit(traces: &[PathBuf]) -> Result<bool> {
    let mut all = true;
    for path in traces {
        let a = audit_csv(&CsvTrace::parse(&read(path)?)?);
        println!("{} {}: {} rows, {} audited drops, worst excess {:?}", if a.passed { "PASS" } else { "FAIL" }, path.display(), a.rows, a.drop_rows, a.worst_drop_excess);
        for v in a.violations.iter().take(10) {
            println!("  {v}");
        }
        all &= a.passed;
    }
    Ok(all)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Ratefit { traces, from, to } => cmd_ratefit(&traces, from, to),
        Command::Lowerbound { k, p, q, algorithm, step, name, out } => {
            let p = parse_real(&p).ok_or_else(|| usage(format!("cannot parse p = {p:?}")))?;
            let cfg = LowerBoundConfig { name, k, p, q, algorithm: Algorithm::parse(&algorithm)?, step };
            let o = run_lowerbound(&cfg)?;
            o.write(&out)?;
            println!("{}", o.summary_json().trim_end());
            Ok(o.summary.passed && o.summary.replay_identical && o.summary.transcript_round_trip)
        }
        Command::Audit { traces } => cmd_audit(&traces),
        Command::Smoke => {
            let results = run_smoke();
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            Ok(results.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CERTIFICATE_FAILURE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
