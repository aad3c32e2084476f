use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use calibra::bounds::{curvature_entropy_bound, degree_bound, minvol_bound, BoundQuery};
use calibra::circle::Phase;
use calibra::comass::search;
use calibra::omega::{scan_fourier_with, ScanReport};
use calibra::suite::{run_suite, Budget, Status, Suite};

#[derive(Parser)]
#[command(
    name = "calibra",
    version,
    about = "Calibration checks for products of hyperbolic planes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite (cocycle, fourier, comass, embedding, all).
    Verify {
        suite: Suite,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "quick")]
        budget: Budget,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Corollary calculators.
    Bounds {
        #[command(subcommand)]
        which: BoundsCommand,
    },
    /// Evaluate every coefficient matrix with entries up to kmax.
    Scan {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        kmax: u32,
        /// Restrict to one phase assignment, e.g. `cos,sin,cos,sin`.
        #[arg(long, value_delimiter = ',')]
        phases: Option<Vec<String>>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the table as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Keep only nonzero or pattern entries in the written tables.
        #[arg(long)]
        nonzero_only: bool,
    },
    /// Search for the comass over band-limited orthonormal frames.
    Comass {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        kmax: u32,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BoundsCommand {
    /// Lower bound for the minimal volume.
    Minvol {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        vol: f64,
    },
    /// Largest degree allowed for a map onto a locally symmetric manifold.
    Degree {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        h: f64,
        #[arg(long = "vol-y")]
        vol_y: f64,
        #[arg(long = "vol-m")]
        vol_m: f64,
    },
    /// Entropy bound under |K| ≤ 1.
    Entropy {
        #[arg(long)]
        n: usize,
    },
}

enum Failure {
    Usage(String),
    Check,
}

impl From<calibra::Error> for Failure {
    fn from(e: calibra::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Usage(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

fn write_scan_csv(path: &Path, report: &ScanReport, nonzero_only: bool) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::Usage(e.to_string()))?;
    let csv_err = |e: csv::Error| Failure::Usage(e.to_string());
    w.write_record(["matrix", "phases", "value", "predicted", "error"])
        .map_err(csv_err)?;
    for e in report
        .entries
        .iter()
        .filter(|e| !nonzero_only || e.pattern || e.value != 0.0)
    {
        let matrix = e
            .matrix
            .iter()
            .map(|r| r.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join(";");
        let phases = e
            .phases
            .iter()
            .map(|p| match p {
                Phase::Cos => "cos",
                Phase::Sin => "sin",
            })
            .collect::<Vec<_>>()
            .join(" ");
        w.write_record([
            matrix,
            phases,
            format!("{:e}", e.value),
            format!("{:e}", e.predicted),
            format!("{:e}", e.abs_error),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_phases(raw: &[String]) -> Result<Vec<Phase>, Failure> {
    raw.iter()
        .map(|s| match s.trim() {
            "cos" => Ok(Phase::Cos),
            "sin" => Ok(Phase::Sin),
            other => Err(Failure::Usage(format!("unknown phase `{other}` (expected cos or sin)"))),
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Verify {
            suite,
            n,
            seed,
            budget,
            out,
        } => {
            let report = run_suite(suite, n, seed, budget)?;
            for c in &report.checks {
                let mark = if c.status == Status::Pass { "PASS" } else { "FAIL" };
                println!(
                    "{mark} {:<52} value={:<24e} expected={:<24e} tol={:e} ({} ms)",
                    c.name, c.value, c.expected, c.tolerance, c.runtime_ms
                );
            }
            println!(
                "{} {} n={} seed={} budget={}",
                if report.passed() { "PASS" } else { "FAIL" },
                report.suite,
                report.n,
                report.seed,
                report.budget
            );
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            if !report.passed() {
                return Err(Failure::Check);
            }
        }
        Command::Bounds { which } => match which {
            BoundsCommand::Minvol { n, vol } => println!("{}", minvol_bound(n, vol)?),
            BoundsCommand::Degree { n, h, vol_y, vol_m } => {
                let q = BoundQuery {
                    h_g: Some(h),
                    vol_y: Some(vol_y),
                    vol_m: Some(vol_m),
                    ..BoundQuery::new(n)
                };
                println!("{}", degree_bound(&q)?);
            }
            BoundsCommand::Entropy { n } => println!("{}", curvature_entropy_bound(n)?),
        },
        Command::Scan {
            n,
            kmax,
            phases,
            out,
            csv,
            nonzero_only,
        } => {
            let phases = phases.as_deref().map(parse_phases).transpose()?;
            let mut report = scan_fourier_with(n, kmax, phases.as_deref())?;
            println!(
                "matrices={} nonzero={} patterns={} inconsistent={} max_pattern_error={:e} max_off_pattern={:e}",
                report.matrices,
                report.nonzero,
                report.patterns,
                report.inconsistent,
                report.max_pattern_error,
                report.max_off_pattern_value
            );
            for v in &report.nonzero_values {
                println!("nonzero value {v:.15e}");
            }
            if let Some(path) = csv {
                write_scan_csv(&path, &report, nonzero_only)?;
            }
            if nonzero_only {
                report.entries.retain(|e| e.pattern || e.value != 0.0);
            }
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            if !report.passed() {
                return Err(Failure::Check);
            }
        }
        Command::Comass {
            n,
            kmax,
            restarts,
            seed,
            out,
        } => {
            let report = search(n, kmax, restarts, seed)?;
            match out {
                Some(path) => write_json(&path, &report)?,
                None => println!(
                    "{}",
                    serde_json::to_string_pretty(&report).map_err(|e| Failure::Usage(e.to_string()))?
                ),
            }
            eprintln!(
                "best={:.17e} theoretical={:.17e} gap={:e} max_trace={:.17e}",
                report.best_value, report.theoretical, report.gap, report.max_trace_value
            );
            if !report.sound() {
                return Err(Failure::Check);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
