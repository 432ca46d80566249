//! `phaseret`: generate, measure and reconstruct polynomials from phaseless data.

mod json;

use std::fmt::Write as _;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phaseret::oracle::MAX_ORACLE_DIM;
use phaseret::{
    brute_force_reconstruct, global_phase_distance, measure, measure_at_nodes, random_polynomial, reconstruct,
    MeasurementSet, NodeMeasurements, NodeSet, Polynomial, DEFAULT_TOL,
};

const ORACLE_AGREEMENT_TOL: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "phaseret", version, about = "Phase retrieval from 4N-4 phaseless measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random polynomial.
    Gen {
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Inclusive index range `a..b` of nonzero coefficients.
        #[arg(long, value_parser = parse_support)]
        support: Option<RangeInclusive<usize>>,
        #[command(flatten)]
        output: Output,
    },
    /// Measure a polynomial at the roots of unity or at given nodes.
    Measure {
        #[arg(short, long)]
        input: PathBuf,
        #[command(flatten)]
        output: Output,
        /// Node file (`{"angles": [...]}`) for `|p|`; requires `--nodes-z`.
        #[arg(long, requires = "nodes_z")]
        nodes_w: Option<PathBuf>,
        /// Node file for `|p'|`; requires `--nodes-w`.
        #[arg(long, requires = "nodes_w")]
        nodes_z: Option<PathBuf>,
    },
    /// Recover a polynomial, up to global phase, from a measurement file.
    Reconstruct {
        #[arg(short, long)]
        input: PathBuf,
        #[command(flatten)]
        output: Output,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Measure and reconstruct seeded random polynomials.
    Roundtrip {
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        n: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pass threshold on the global phase distance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Compare reconstruction against a brute-force least-squares search.
    OracleCheck {
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..=MAX_ORACLE_DIM as u64))]
        n: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
        restarts: u64,
    },
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Inconsistent(String),
    Verification,
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn parse_support(text: &str) -> Result<RangeInclusive<usize>, String> {
    let (lo, hi) = text.split_once("..").ok_or("expected a..b")?;
    let lo: usize = lo.trim().parse().map_err(|e| format!("start: {e}"))?;
    let hi: usize = hi.trim().parse().map_err(|e| format!("end: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok(lo..=hi)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PHASERET_LOG", "warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Inconsistent(name)) => {
            eprintln!("{name}");
            ExitCode::from(3)
        }
        Err(Failure::Verification) => ExitCode::from(1),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Gen { n, seed, support, output } => {
            let p = random_polynomial(n as usize, seed, support).map_err(|e| Failure::Usage(e.to_string()))?;
            json::write(output.output.as_deref(), &p.canonical_phase())?;
        }
        Command::Measure { input, output, nodes_w, nodes_z } => {
            let p: Polynomial = json::read(&input).map_err(Failure::Usage)?;
            let usage = |e: phaseret::MeasureError| Failure::Usage(e.to_string());
            match (nodes_w, nodes_z) {
                (Some(w), Some(z)) => {
                    let nodes_w: NodeSet = json::read(&w).map_err(Failure::Usage)?;
                    let nodes_z: NodeSet = json::read(&z).map_err(Failure::Usage)?;
                    let (intensities_p, intensities_dp) = measure_at_nodes(&p, &nodes_w, &nodes_z).map_err(usage)?;
                    let file = NodeMeasurements { n: p.n(), intensities_p, intensities_dp, nodes_w, nodes_z };
                    json::write(output.output.as_deref(), &file)?;
                }
                _ => json::write(output.output.as_deref(), &measure(&p).map_err(usage)?)?,
            }
        }
        Command::Reconstruct { input, output, tol } => {
            let ms = read_measurements(&input)?;
            let q = reconstruct(&ms, tol).map_err(|e| {
                log::info!("{e}");
                Failure::Inconsistent(e.name().to_string())
            })?;
            json::write(output.output.as_deref(), &q)?;
        }
        Command::Roundtrip { n, trials, seed, tol } => {
            let n = n as usize;
            run_trials(trials, seed, tol, |trial_seed| {
                let p = random_polynomial(n, trial_seed, None).expect("n >= 2");
                let q = reconstruct(&measure(&p).expect("n >= 2"), DEFAULT_TOL).map_err(|e| e.name().to_string())?;
                Ok(global_phase_distance(&p, &q).expect("same dimension"))
            })?;
        }
        Command::OracleCheck { n, trials, seed, restarts } => {
            let n = n as usize;
            run_trials(trials, seed, ORACLE_AGREEMENT_TOL, |trial_seed| {
                let p = random_polynomial(n, trial_seed, None).expect("n >= 2");
                let ms = measure(&p).expect("n >= 2");
                let a = reconstruct(&ms, DEFAULT_TOL).map_err(|e| e.name().to_string())?;
                let b = brute_force_reconstruct(&ms, restarts as usize, trial_seed).map_err(|e| e.to_string())?;
                Ok(global_phase_distance(&a, &b).expect("same dimension"))
            })?;
        }
    }
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Runs `trial` on seeds `seed, seed+1, ...` and prints one line per trial
/// followed by a summary.
fn run_trials(trials: u64, seed: u64, tol: f64, trial: impl Fn(u64) -> Result<f64, String>) -> Result<(), Failure> {
    let mut report = String::new();
    let mut worst = 0.0_f64;
    let mut passed = true;
    for t in 0..trials {
        let trial_seed = seed.wrapping_add(t);
        let (text, ok) = match trial(trial_seed) {
            Ok(d) => {
                worst = worst.max(d);
                (format!("{d:.6e}"), d <= tol)
            }
            Err(msg) => {
                worst = f64::INFINITY;
                (msg, false)
            }
        };
        passed &= ok;
        writeln!(report, "trial {t} seed {trial_seed} distance {text} {}", verdict(ok)).unwrap();
    }
    writeln!(report, "max {worst:.6e} tol {tol:.1e} {}", verdict(passed)).unwrap();
    io::stdout().lock().write_all(report.as_bytes())?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

/// Reads either a uniform measurement file or one with embedded nodes; the
/// latter is resampled onto the roots of unity.
fn read_measurements(path: &Path) -> Result<MeasurementSet, Failure> {
    let text = json::read_text(path).map_err(Failure::Usage)?;
    let value: serde_json::Value = json::parse(path, &text).map_err(Failure::Usage)?;
    let has_nodes = value.get("nodes_w").is_some() || value.get("nodes_z").is_some();
    if !has_nodes {
        return json::parse(path, &text).map_err(Failure::Usage);
    }
    let nm: NodeMeasurements = json::parse(path, &text).map_err(Failure::Usage)?;
    nm.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    nm.to_uniform().map_err(|e| {
        log::info!("{e}");
        Failure::Inconsistent("SingularSystem".to_string())
    })
}
