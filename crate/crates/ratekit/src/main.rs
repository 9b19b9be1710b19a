use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use ratekit::presets::{self, FIGURES};
use ratekit::report::{analysis_json, simulation_json};
use ratekit::sweep::DEFAULT_SEED;
use ratekit::{load_json, load_scenario, run_sweep, threads_from_env, SweepSpec, SweepTable};
use ratekit_core::model::validate;
use ratekit_core::sim::{simulate, SimConfig};
use ratekit_core::{analyze, AnalysisError};

/// Steady-state throughput of ARF, AARF and PAARF rate adaptation.
///
/// Sweeps run in parallel; set RATEKIT_THREADS to bound the worker count.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
struct SimArgs {
    /// Also run the packet-level simulator.
    #[arg(long)]
    with_sim: bool,
    /// Simulated transmission attempts per point.
    #[arg(long, value_name = "N")]
    packets: Option<u64>,
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one scenario and print the result as JSON.
    Analyze {
        scenario: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Run a sweep and write CSV (stdout by default).
    Sweep {
        spec: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        /// CSV output file.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Also write the per-algorithm .dat blocks here.
        #[arg(long)]
        dat: Option<PathBuf>,
    },
    /// Reproduce an evaluation figure as figN.csv and figN.dat.
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(4..=9))]
        number: u8,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Check a scenario file and list every problem.
    Validate { scenario: PathBuf },
}

fn apply(spec: &mut SweepSpec, sim: SimArgs) {
    spec.with_sim |= sim.with_sim;
    if let Some(n) = sim.packets {
        spec.packets = n;
    }
    if let Some(s) = sim.seed {
        spec.seed = s;
    }
}

fn sweep(spec: &SweepSpec) -> Result<SweepTable> {
    let threads = threads_from_env()?;
    Ok(run_sweep(spec, threads)?)
}

fn report_errors(table: &SweepTable) -> ExitCode {
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    if failed == 0 {
        return ExitCode::SUCCESS;
    }
    for note in table.notes.iter().filter(|n| n.starts_with("error")) {
        eprintln!("{note}");
    }
    eprintln!("{failed} of {} points failed", table.rows.len());
    ExitCode::FAILURE
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analyze { scenario, sim } => {
            let sc = load_scenario(&scenario)?.to_scenario();
            let sc = validate(sc)?;
            let mut out = serde_json::Map::new();
            match analyze(&sc) {
                Ok(r) => {
                    out.insert("analytic".into(), analysis_json(&r));
                }
                Err(AnalysisError::NoClosedForm(kind)) if sim.with_sim => {
                    eprintln!("note: {kind} with MAC overhead is simulation only");
                }
                Err(e) => bail!(e),
            }
            if sim.with_sim {
                let config = SimConfig::new(
                    sc,
                    sim.packets.unwrap_or(ratekit::sweep::DEFAULT_PACKETS),
                    sim.seed.unwrap_or(DEFAULT_SEED),
                );
                out.insert("simulation".into(), simulation_json(&simulate(&config)?));
            }
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { spec, sim, out, dat } => {
            let mut spec: SweepSpec = load_json(&spec)?;
            apply(&mut spec, sim);
            let table = sweep(&spec)?;
            match out {
                Some(path) => {
                    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    table.write_csv(BufWriter::new(f))?;
                }
                None => table.write_csv(io::stdout().lock())?,
            }
            if let Some(path) = dat {
                let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                let mut w = BufWriter::new(f);
                table.write_dat(&mut w)?;
                w.flush()?;
            }
            Ok(report_errors(&table))
        }
        Command::Figure { number, out, sim } => {
            let preset = presets::preset(number)
                .with_context(|| format!("no preset for figure {number}; choose one of {FIGURES:?}"))?;
            let mut spec = preset.sweep();
            apply(&mut spec, sim);
            let table = sweep(&spec)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let csv = out.join(format!("fig{number}.csv"));
            let dat = out.join(format!("fig{number}.dat"));
            table.write_csv(BufWriter::new(File::create(&csv)?))?;
            let mut w = BufWriter::new(File::create(&dat)?);
            table.write_dat(&mut w)?;
            w.flush()?;
            println!("wrote {} and {}", csv.display(), dat.display());
            Ok(report_errors(&table))
        }
        Command::Validate { scenario } => {
            let sc = load_scenario(&scenario)?.to_scenario();
            match validate(sc) {
                Ok(_) => {
                    println!("ok");
                    Ok(ExitCode::SUCCESS)
                }
                Err(errors) => {
                    for e in &errors.0 {
                        println!("{e}");
                    }
                    Ok(ExitCode::FAILURE)
                }
            }
        }
    }
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
