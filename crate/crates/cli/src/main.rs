use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use mmfuse::config::Config;
use mmfuse::emg::{calibrate_noise, CalibrationSettings, Templates};
use mmfuse::fusion::{Detection, FusionConfig, OperationCalibration};
use mmfuse::harness::{self, Modality};
use mmfuse::protocol::DEFAULT_PORT;
use mmfuse::reference;
use mmfuse::report::{self, pct, variance};
use mmfuse::server::Server;
use mmfuse::stats::{fused_error_summary, mean_accuracy};
use mmfuse::{FusionOperation, SimRng};

#[derive(Parser)]
#[command(
    name = "mmfuse",
    version,
    about = "Gesture and speech fusion simulator for a five-servo arm"
)]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true, env = "MMFUSE_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    #[value(name = "2")]
    Gestures,
    #[value(name = "3")]
    Speech,
    #[value(name = "4")]
    Fused,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one results table and print it as CSV.
    Simulate {
        #[arg(long, value_enum)]
        table: Table,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trials per repetition (tables 2 and 3) or per block (table 4).
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Show the per-operation detection probabilities.
    Calibrate {
        /// Limit to one operation, by label, gesture or command.
        #[arg(long)]
        op: Option<String>,
        /// Also fit the EMG signal noise level for each gesture.
        #[arg(long)]
        signal: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the fusion server.
    Serve {
        #[arg(long, env = "MMFUSE_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stop after this many connections.
        #[arg(long)]
        connections: Option<usize>,
    },
    /// Interactive session on stdin.
    Repl {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write CSV tables, a summary and a chart.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Bad input from the user; exits with status 2.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

fn load_config(path: Option<&PathBuf>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p).map_err(|e| invalid(format!("{}: {e}", p.display()))),
        None => Ok(Config::default()),
    }
}

fn calibrated(config: &Config) -> Result<(FusionConfig, [OperationCalibration; 5])> {
    config
        .calibrated_fusion()
        .map_err(|e| invalid(format!("calibration: {e}")))
}

fn simulate(
    config: &Config,
    table: Table,
    seed: u64,
    trials: Option<usize>,
    out: &mut impl Write,
) -> Result<()> {
    let operator = config.operator();
    if trials == Some(0) {
        return Err(invalid("--trials must be positive"));
    }
    match table {
        Table::Gestures | Table::Speech => {
            let modality = if matches!(table, Table::Gestures) {
                Modality::Emg
            } else {
                Modality::Speech
            };
            let per_rep = trials.unwrap_or(harness::DEFAULT_PER_REPETITION);
            let t = harness::run_modality_experiment(
                modality,
                &operator,
                &config.normalization,
                harness::DEFAULT_REPETITIONS,
                per_rep,
                seed,
            );
            let header = match modality {
                Modality::Emg => "gesture,wrong_or_missed_pct,correct_pct",
                Modality::Speech => "command,wrong_output_pct,correct_pct",
            };
            writeln!(out, "{header}")?;
            for item in &t.items {
                writeln!(
                    out,
                    "{},{},{}",
                    item.item.label(),
                    pct(item.error_pct),
                    pct(item.correct_pct())
                )?;
            }
            let mean = mean_accuracy(&t.correct_pcts())?;
            writeln!(out, "# mean accuracy {}", pct(mean))?;
        }
        Table::Fused => {
            let (cfg, _) = calibrated(config)?;
            let size = trials.unwrap_or(harness::DEFAULT_BLOCK_SIZE);
            let runs =
                harness::run_fusion_table(&operator, &cfg, harness::DEFAULT_BLOCKS, size, seed)?;
            let blocks: Vec<String> = (1..=harness::DEFAULT_BLOCKS)
                .map(|i| format!("block_{}", i * size))
                .collect();
            writeln!(
                out,
                "fusion_operation,{},error_pct,variance",
                blocks.join(",")
            )?;
            for run in &runs {
                let counts: Vec<String> =
                    run.stats.block_errors.iter().map(u64::to_string).collect();
                writeln!(
                    out,
                    "{},{},{},{}",
                    run.op.label,
                    counts.join(","),
                    pct(run.stats.error_pct),
                    variance(run.stats.variance)
                )?;
            }
            let stats: Vec<_> = runs.iter().map(|r| r.stats.clone()).collect();
            writeln!(out, "# mean error {}", pct(fused_error_summary(&stats)?))?;
        }
    }
    Ok(())
}

fn calibrate(
    config: &Config,
    op: Option<&str>,
    signal: bool,
    seed: u64,
    out: &mut impl Write,
) -> Result<()> {
    let ops: Vec<FusionOperation> = match op {
        Some(name) => {
            vec![FusionOperation::find(name)
                .ok_or_else(|| invalid(format!("unknown operation {name:?}")))?]
        }
        None => FusionOperation::ALL.to_vec(),
    };
    let (_, cals) = calibrated(config)?;
    writeln!(
        out,
        "operation,gesture_error,speech_error,target,detection,wrong_detection"
    )?;
    for op in &ops {
        let c = &cals[op.index()];
        let d = match c.detection {
            Detection::Feasible(d) => format!("{d:.4}"),
            Detection::NoFallbackNeeded => "none-needed".to_string(),
        };
        writeln!(
            out,
            "{},{:.4},{:.4},{:.4},{d},{:.4}",
            op.label, c.gesture_error, c.speech_error, c.target, c.wrong_detection
        )?;
    }
    if signal {
        let templates = Templates::standard();
        let settings = CalibrationSettings::default();
        writeln!(out, "gesture,target_error,sigma,achieved_error")?;
        for g in ops.iter().map(|op| op.gesture) {
            let target = reference::gesture_error_pct(g) / 100.0;
            let fit = calibrate_noise(
                g,
                target,
                &templates,
                &settings,
                SimRng::derive_seed(seed, g.index() as u64),
            )?;
            writeln!(
                out,
                "{},{:.4},{:.4},{:.4}",
                g.name(),
                target,
                fit.sigma,
                fit.achieved_error
            )?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(cli.config.as_ref())?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Simulate {
            table,
            seed,
            trials,
        } => simulate(&config, table, seed, trials, &mut out),
        Command::Calibrate { op, signal, seed } => {
            calibrate(&config, op.as_deref(), signal, seed, &mut out)
        }
        Command::Serve {
            port,
            seed,
            connections,
        } => {
            let (cfg, _) = calibrated(&config)?;
            let server = Server::bind(("127.0.0.1", port), cfg, seed)
                .with_context(|| format!("binding port {port}"))?;
            writeln!(out, "listening on {}", server.local_addr()?)?;
            out.flush()?;
            for (i, t) in server.run(connections)?.iter().enumerate() {
                writeln!(out, "connection {i}: {} fused", t.fused_lines().len())?;
            }
            Ok(())
        }
        Command::Repl { seed } => {
            let (cfg, _) = calibrated(&config)?;
            let mut repl = mmfuse::repl::Repl::new(cfg, seed);
            writeln!(out, "{}", mmfuse::repl::USAGE)?;
            mmfuse::repl::run(io::stdin().lock(), out, &mut repl)?;
            Ok(())
        }
        Command::Report { out: dir, seed } => {
            let tables = report::simulate_tables(&config, seed)?;
            for p in report::emit_report(&dir, &tables)? {
                writeln!(out, "{}", p.display())?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Invalid>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
