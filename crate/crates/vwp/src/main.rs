use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use vwp::battery;
use vwp::job::{JobSpec, Num, NumList};
use vwp::sweep;
use vwp::{exit_code, ReportJson};
use vwp_core::identities::{verify, Job};
use vwp_core::params::IdentityKind;
use vwp_core::summation::{Decay, TailModel};

#[derive(Parser)]
#[command(name = "vwp", version, about = "Verify multiple very-well-poised summation identities")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify one identity at one parameter point.
    Verify(ParamArgs),
    /// Run a fixed suite and write one report per case plus a summary.
    Battery {
        /// classical-n1, theorems, properties, rational-terminating or recurrence
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Vary one parameter over a grid and write CSV.
    Sweep {
        #[command(flatten)]
        params: ParamArgs,
        /// q, g, g1..g4 or z1..zn
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long)]
        grid: String,
    },
}

#[derive(Args, Clone, Default)]
struct ParamArgs {
    /// JSON job document; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    identity: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g3: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g4: Option<String>,
    /// Couplings for the Gustafson sum, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    couplings: Option<String>,
    /// Which couplings play a,b,c,d, e.g. 2,1,3,4.
    #[arg(long)]
    perm: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long = "N")]
    big_n: Option<u32>,
    /// float or rational
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    precision_bits: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_radius: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// symmetric or literal reading of the Aomoto-Ito summand
    #[arg(long)]
    reading: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ParamArgs {
    fn spec(&self) -> Result<JobSpec> {
        let num = |s: &Option<String>| s.as_deref().map(Num::from);
        let list = |s: &Option<String>| s.clone().map(NumList::Joined);
        let flags = JobSpec {
            identity: self.identity.clone(),
            n: self.n,
            q: num(&self.q),
            g: num(&self.g),
            g1: num(&self.g1),
            g2: num(&self.g2),
            g3: num(&self.g3),
            g4: num(&self.g4),
            perm: list(&self.perm),
            z: list(&self.z),
            couplings: list(&self.couplings),
            big_n: self.big_n,
            mode: self.mode.clone(),
            precision_bits: self.precision_bits,
            tol: self.tol,
            max_radius: self.max_radius,
            seed: self.seed,
            out: self.out.as_ref().map(|p| p.display().to_string()),
            reading: self.reading.clone(),
        };
        let base = match &self.config {
            Some(p) => JobSpec::from_file(p)?,
            None => JobSpec::default(),
        };
        Ok(base.overlay(flags))
    }
}

fn write_out(path: Option<&str>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {p}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Power-law tails slower than λ^-6 make q = 1 sums crawl.
fn warn_slow_decay(job: &Job) {
    let model = match job {
        Job::Standard { kind: IdentityKind::RogersNonterminating, params, .. } => TailModel::cone(params),
        Job::Standard { kind: IdentityKind::Terminating, .. } | Job::Rational(_) => return,
        Job::Standard { params, .. } => TailModel::bilateral(params),
        Job::Gustafson { params, .. } => TailModel::gustafson(params),
    };
    if let Decay::Power(alpha) = &model.decay {
        let worst = alpha.iter().cloned().fold(f64::INFINITY, f64::min);
        if worst < 6.0 {
            eprintln!("warning: terms decay like |λ|^-{worst:.2}; expect a large radius");
        }
    }
}

fn cmd_verify(args: &ParamArgs) -> Result<i32> {
    let spec = args.spec()?;
    let (job, opts) = match spec.resolve() {
        Ok(x) => x,
        Err(e) => {
            let err = serde_json::json!({"error": {"kind": "InvalidParameters", "message": format!("{e:#}")}, "verdict": "fail"});
            write_out(spec.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&err)?))?;
            eprintln!("error: {e:#}");
            return Ok(2);
        }
    };
    warn_slow_decay(&job);
    let t = Instant::now();
    let r = verify(&job, &opts);
    let json = ReportJson::new(&job, &opts, &r, t.elapsed().as_millis() as u64);
    write_out(spec.out.as_deref(), &json.to_pretty())?;
    if let Some(e) = &r.error {
        eprintln!("{}: {}", e.kind, e.message);
    }
    Ok(exit_code(&r))
}

fn cmd_battery(suite: &str, seed: u64, out: Option<&PathBuf>, threads: usize) -> Result<i32> {
    let Some(cases) = battery::cases(suite) else {
        eprintln!("error: unknown suite {suite:?}; expected one of {}", battery::SUITES.join(", "));
        return Ok(2);
    };
    let results = battery::run_cases(&cases, seed, threads);
    let summary = battery::summarize(suite, seed, &results);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for r in &results {
            let text = format!("{}\n", serde_json::to_string_pretty(&r.report)?);
            std::fs::write(dir.join(format!("{}.json", r.name)), text)?;
        }
        std::fs::write(dir.join("summary.json"), format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
    }
    for r in &results {
        println!("{} {} ({} ms)", if r.passed { "PASS" } else { "FAIL" }, r.name, r.wall_time_ms);
    }
    println!("{suite}: {} passed, {} failed", summary.passed, summary.failed);
    Ok(if summary.failed == 0 { 0 } else { 1 })
}

fn cmd_sweep(args: &ParamArgs, axis: &str, grid: &str) -> Result<i32> {
    let spec = args.spec()?;
    let grid: Vec<String> = grid.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    let rows = match sweep::sweep(&spec, axis, &grid) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(2);
        }
    };
    write_out(spec.out.as_deref(), &sweep::to_csv(&rows))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.cmd {
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Battery { suite, seed, out, threads } => cmd_battery(suite, *seed, out.as_ref(), *threads),
        Cmd::Sweep { params, axis, grid } => cmd_sweep(params, axis, grid),
    };
    match code {
        Ok(c) => ExitCode::from(c as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
