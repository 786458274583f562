//! `ptsched` command-line tool.
//!
//! Exit status: 0 on a positive verdict, 1 on a negative one (unschedulable,
//! bound violated, validation failures), 2 on usage, input or I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ptsched::experiment::{
    analyze_file, generate_file, mptaa_file, run_sweep, run_validation, simulate_file, Scheme,
    SweepSpec, SweepVariable, ValidationScale,
};
use ptsched::rta::RtaConfig;
use ptsched::taskset_gen::{GenConfig, PeriodModel};
use ptsched::Error;

#[derive(Parser)]
#[command(name = "ptsched", version, about = "Preemption-threshold analysis for 3-phase tasks")]
struct Cli {
    /// Directory for output files when no explicit path is given.
    #[arg(long, global = true, env = "PTSCHED_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Periods {
    Automotive,
    LogUniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variable {
    Spm,
    Cores,
    Utilization,
}

#[derive(clap::Args)]
struct GenArgs {
    /// Number of tasks.
    #[arg(short, long, default_value_t = 32)]
    n: usize,
    /// Total utilization.
    #[arg(short, long, default_value_t = 1.0)]
    utilization: f64,
    #[arg(short = 'm', long, default_value_t = 4)]
    cores: usize,
    /// Scratchpad size per core, bytes.
    #[arg(long, default_value_t = 32 * 1024)]
    spm: u64,
    #[arg(long, value_enum, default_value = "automotive")]
    periods: Periods,
    /// Period bounds for log-uniform periods, microseconds.
    #[arg(long, default_value_t = 1_000)]
    period_min: u64,
    #[arg(long, default_value_t = 1_000_000)]
    period_max: u64,
}

impl GenArgs {
    fn config(&self, seed: u64) -> GenConfig {
        GenConfig {
            n: self.n,
            utilization: self.utilization,
            cores: self.cores,
            spm: self.spm,
            period_model: match self.periods {
                Periods::Automotive => PeriodModel::Automotive,
                Periods::LogUniform => PeriodModel::LogUniform {
                    lo: self.period_min,
                    hi: self.period_max,
                },
            },
            seed,
            ..GenConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a task set.
    Gen {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when neither this nor the output directory is set.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Response-time and memory analysis of a task-set file.
    Analyze { file: PathBuf },
    /// Simulate a task-set file and compare against the analysis.
    Simulate {
        file: PathBuf,
        /// Release horizon; two hyperperiods by default.
        #[arg(long)]
        horizon: Option<u64>,
        /// Write the event log as JSON lines.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Assign preemption thresholds.
    Mptaa {
        file: PathBuf,
        /// Write the task set with assigned thresholds here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Schedulability sweep over generated task sets.
    Sweep {
        #[arg(long = "var", value_enum, default_value = "spm")]
        variable: Variable,
        #[arg(long)]
        start: Option<f64>,
        #[arg(long)]
        stop: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated subset of NP, FP, PT.
        #[arg(long, default_value = "NP,FP,PT")]
        schemes: String,
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, value_enum, default_value = "csv")]
        out: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare simulation with analysis on random small systems.
    Validate {
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum release jitter; synchronous releases when absent.
        #[arg(long)]
        jitter: Option<u64>,
        #[arg(short = 'm', long, default_value_t = 2)]
        cores: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Where a result goes: the explicit path, else `name` in the output
/// directory, else stdout.
fn emit(text: &str, explicit: Option<&Path>, dir: Option<&Path>, name: &str) -> Result<()> {
    let path = match (explicit, dir) {
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(d)) => {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
            Some(d.join(name))
        }
        (None, None) => None,
    };
    match path {
        Some(p) => {
            fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn parse_schemes(s: &str) -> Result<Vec<Scheme>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match Scheme::parse(part) {
            Some(x) if !out.contains(&x) => out.push(x),
            Some(_) => {}
            None => bail!("unknown scheme `{part}` (expected NP, FP or PT)"),
        }
    }
    Ok(out)
}

fn verdict(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let dir = cli.out_dir.as_deref();
    let rta = RtaConfig::default();
    match cli.command {
        Command::Gen { gen, seed, output } => {
            let file = generate_file(&gen.config(seed), None)?;
            emit(&file.to_json(), output.as_deref(), dir, &format!("taskset-{seed}.json"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze { file } => {
            let report = analyze_file(&file, &rta).with_context(|| file.display().to_string())?;
            print!("{}", json(&report));
            Ok(verdict(report.schedulable()))
        }
        Command::Simulate {
            file,
            horizon,
            events,
        } => {
            let sim = simulate_file(&file, horizon, &rta)
                .with_context(|| file.display().to_string())?;
            if let Some(p) = events {
                fs::write(&p, sim.trace.events_jsonl())
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            print!("{}", json(&sim));
            Ok(verdict(sim.violations.is_empty()))
        }
        Command::Mptaa { file, output } => {
            let res = mptaa_file(&file, &rta).with_context(|| file.display().to_string())?;
            if let Some(p) = output {
                res.taskset.write(&p)?;
            }
            print!("{}", json(&res));
            Ok(verdict(res.outcome.schedulable))
        }
        Command::Sweep {
            variable,
            start,
            stop,
            step,
            trials,
            seed,
            schemes,
            gen,
            out,
            output,
        } => {
            let var = match variable {
                Variable::Spm => SweepVariable::Spm,
                Variable::Cores => SweepVariable::Cores,
                Variable::Utilization => SweepVariable::Utilization,
            };
            let mut spec = SweepSpec::new(var);
            spec.start = start.unwrap_or(spec.start);
            spec.stop = stop.unwrap_or(spec.stop);
            spec.step = step.unwrap_or(spec.step);
            spec.trials = trials;
            spec.seed = seed;
            spec.schemes = parse_schemes(&schemes)?;
            spec.base = gen.config(seed);
            let table = run_sweep(&spec)?;
            let (text, ext) = match out {
                Format::Csv => (table.to_csv(), "csv"),
                Format::Json => (table.to_json(), "json"),
            };
            let name = format!("sweep-{}-{seed}.{ext}", variable_name(var));
            emit(&text, output.as_deref(), dir, &name)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate {
            trials,
            seed,
            jitter,
            cores,
            output,
        } => {
            let scale = ValidationScale {
                seed,
                jitter,
                cores,
                ..ValidationScale::default()
            };
            let report = run_validation(trials, &scale);
            eprintln!(
                "{} systems generated, {} violating instances, {} chain mismatches",
                report.generated,
                report.violations.len(),
                report.chain_mismatches.len()
            );
            emit(&report.to_json(), output.as_deref(), dir, &format!("validation-{seed}.json"))?;
            Ok(verdict(report.is_clean()))
        }
    }
}

fn variable_name(v: SweepVariable) -> &'static str {
    match v {
        SweepVariable::Spm => "spm",
        SweepVariable::Cores => "cores",
        SweepVariable::Utilization => "utilization",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            if let Some(Error::InvalidSystem(findings)) = e.downcast_ref::<Error>() {
                eprintln!("error: invalid task set");
                for f in findings {
                    eprintln!("  {f}");
                }
            } else {
                // Library errors embed their source in the message already.
                let mut parts: Vec<String> = Vec::new();
                for cause in e.chain() {
                    let text = cause.to_string();
                    if !parts.last().is_some_and(|p| p.contains(&text)) {
                        parts.push(text);
                    }
                }
                eprintln!("error: {}", parts.join(": "));
            }
            ExitCode::from(2)
        }
    }
}
