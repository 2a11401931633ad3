use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use fhnet_core::report::{analyze, hard_checks_passed};
use fhnet_core::{parse_config, run_simulation, simulate_to_dir, verify, RunConfig, Summary};

#[derive(Parser)]
#[command(name = "fhnet", version, about = "FitzHugh-Nagumo networks coupled through Robin boundaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write timeseries.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Exit with status 1 if any theorem check fails.
        #[arg(long)]
        strict: bool,
    },
    /// Print the derived constants for a configuration.
    Constants {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a configuration for each value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of p, d, sigma, J, epsilon, a, b, dt, t_end.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
        /// Directory for sweep_summary.csv and one subdirectory per run;
        /// the summary is printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in acceptance scenarios.
    Verify {
        /// Only run scenarios whose name contains this text, or whose number equals it.
        #[arg(long)]
        filter: Option<String>,
    },
}

fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

fn print_summary(summary: &Summary) {
    println!("samples: {}  t_end: {}", summary.samples, summary.t_end);
    for e in &summary.checks.entries {
        println!(
            "  {:<20} {}  worst margin {:.4e} at t={:.4}  {}",
            e.name,
            if e.passed { "ok  " } else { "FAIL" },
            e.worst_margin,
            e.worst_time,
            e.detail
        );
    }
    println!("  sync degree (tail): {:.6e}", summary.sync_degree);
    match (summary.decay_rate, &summary.decay_rate_note) {
        (Some(r), _) => println!("  decay rate of P (tail): {r:.6}  mu: {:.6}", summary.mu),
        (None, Some(note)) => println!("  decay rate of P: undefined ({note})"),
        (None, None) => {}
    }
}

fn print_constants(cfg: &RunConfig) -> anyhow::Result<()> {
    let prepared = cfg.prepare()?;
    let p = &prepared.poincare;
    println!("eta1 discrete {:.8}  analytic {:.8}  |Omega| {}", p.eta1_discrete, p.eta1_analytic, p.omega);
    for line in prepared.constants.report() {
        match line.value {
            Some(v) => println!("{:<8} = {:<14.6e} {}", line.name, v, line.formula),
            None => println!("{:<8} = {:<14} {}", line.name, "undetermined", line.formula),
        }
    }
    Ok(())
}

struct SweepRow {
    value: f64,
    sync_degree: f64,
    decay_rate: Option<f64>,
    p_tail_min_s: f64,
    threshold: f64,
}

/// Runs every value in parallel. With `out`, each run writes its own files
/// into `out/<param>_<value>/`.
fn sweep(cfg: &RunConfig, param: &str, values: &[f64], out: Option<&Path>) -> anyhow::Result<Vec<SweepRow>> {
    values
        .par_iter()
        .map(|&value| {
            let cfg = cfg.with_param(param, value)?;
            let s = match out {
                Some(dir) => simulate_to_dir(&cfg, &dir.join(format!("{param}_{value}")))?.1,
                None => {
                    let prepared = cfg.prepare()?;
                    let traj = run_simulation(&prepared.simulation, prepared.initial.clone(), |_, _| {})?;
                    analyze(&prepared, &cfg, &traj)
                }
            };
            Ok(SweepRow {
                value,
                sync_degree: s.sync_degree,
                decay_rate: s.decay_rate,
                p_tail_min_s: s.threshold.p_tail_min_signal,
                threshold: s.threshold.threshold,
            })
        })
        .map(|r: anyhow::Result<SweepRow>| r.with_context(|| format!("sweeping {param}")))
        .collect()
}

fn write_sweep<W: Write>(mut w: W, param: &str, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "{param},sync_degree,decay_rate,p_tail_min_S,R")?;
    for r in rows {
        let rate = r.decay_rate.map_or("nan".to_string(), |v| format!("{v:e}"));
        writeln!(w, "{:e},{:e},{rate},{:e},{:e}", r.value, r.sync_degree, r.p_tail_min_s, r.threshold)?;
    }
    w.flush()
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, out, strict } => {
            let cfg = load(&config)?;
            let (_, summary) = simulate_to_dir(&cfg, &out)?;
            print_summary(&summary);
            if strict && !hard_checks_passed(&summary) {
                eprintln!("one or more checks failed");
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Constants { config } => print_constants(&load(&config)?)?,
        Command::Sweep { config, param, values, out } => {
            let rows = sweep(&load(&config)?, &param, &values, out.as_deref())?;
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    write_sweep(fs::File::create(dir.join("sweep_summary.csv"))?, &param, &rows)?;
                }
                None => write_sweep(std::io::stdout().lock(), &param, &rows)?,
            }
        }
        Command::Verify { filter } => {
            let outcomes = verify::run_all(filter.as_deref());
            if outcomes.is_empty() {
                bail!("no scenario matches the filter");
            }
            for o in &outcomes {
                println!("{o}");
                for line in &o.lines {
                    println!("    {line}");
                }
            }
            if outcomes.iter().any(|o| !o.passed) {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
