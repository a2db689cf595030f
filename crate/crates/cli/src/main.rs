//! `autoboot`: drive the simulator, the bootstrapping loop and the reports
//! from the command line.
//!
//! Results go to stdout as JSON (or plain scalars); failures go to stderr as
//! a single JSON object with exit code 2 (usage), 3 (validation) or 4
//! (runtime).

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use autoboot_core::bootstrap::{output_root, run_bootstrap, select_balanced};
use autoboot_core::metrics::{cost_report, export_reports, l1_avg, CostLine};
use autoboot_core::monitor::{replay_log, OutcomeLabel, Pipeline, TaskTarget, VerifierConfig};
use autoboot_core::policy::{evaluate_policy, Collector, PolicyModel, DEFAULT_TRIALS};
use autoboot_core::rollout::Rollout;
use autoboot_core::store::{load_config, read_dataset, write_dataset, Dataset, RunConfig};
use autoboot_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "autoboot", version, about = "Autonomous data-collection bootstrapping on a simulated desk robot")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ConfigArg {
    /// Run configuration (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<RunConfig, Error> {
        match &self.config {
            Some(p) => load_config(input(p)?),
            None => Ok(RunConfig::default()),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulator commands.
    Sim {
        #[command(subcommand)]
        command: SimCommand,
    },
    /// Run the full stage plan of a configuration.
    Bootstrap {
        #[command(flatten)]
        config: ConfigArg,
        /// Output root; the run lands in `<out>/runs/<run-id>/`. Defaults to
        /// $AUTOBOOT_RUN_DIR, then the current directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the fully resolved configuration and exit.
        #[arg(long)]
        print_effective_config: bool,
    },
    /// Evaluate a stored policy on fresh scenes.
    Evaluate {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Pick the `k` prior episodes farthest from the new ones.
    Select {
        #[arg(long)]
        prior: PathBuf,
        #[arg(long)]
        new: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Dataset metrics.
    Metrics {
        #[command(subcommand)]
        command: MetricsCommand,
    },
    /// Cost breakdown of a JSON array of `{category, hours, rate}` lines.
    Cost {
        #[arg(long)]
        lines: PathBuf,
    },
    /// Write the CSV exports of a finished run.
    Report {
        /// The run directory (`<out>/runs/<run-id>`).
        #[arg(long)]
        run: PathBuf,
    },
    /// Re-run the monitoring services over a driver message log and check
    /// that they reproduce the logged outcomes.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Subcommand, Debug)]
enum SimCommand {
    /// Collect monitored episodes into `<out>/dataset.jsonl`, logging the
    /// pipeline traffic to `<out>/messages.jsonl`.
    Run {
        /// Stage tag recorded on every episode.
        #[arg(long)]
        stage: String,
        #[arg(long)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Act with this policy instead of at random.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Task to attempt; defaults to the target of the same-named stage
        /// in the plan, else subtask1.
        #[arg(long, value_enum)]
        task: Option<Task>,
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Subcommand, Debug)]
enum MetricsCommand {
    /// Average pairwise L1 distance of initial green positions.
    L1avg {
        #[arg(long)]
        dataset: PathBuf,
        /// Only count successful episodes.
        #[arg(long)]
        successful_only: bool,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Task {
    Subtask1,
    Full,
}

impl From<Task> for TaskTarget {
    fn from(t: Task) -> Self {
        match t {
            Task::Subtask1 => TaskTarget::Subtask1,
            Task::Full => TaskTarget::Full,
        }
    }
}

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    kind: &'a str,
    message: String,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Validation { .. }
        | Error::Parse { .. }
        | Error::SchemaVersion { .. }
        | Error::Input(_)
        | Error::InsufficientData { .. }
        | Error::Precondition(_)
        | Error::Protocol { .. }
        | Error::Json(_) => EXIT_VALIDATION,
        _ => EXIT_RUNTIME,
    }
}

fn fail(error: &str, kind: &str, message: String, code: u8) -> ExitCode {
    let report = ErrorReport { error, kind, message };
    let _ = writeln!(io::stderr(), "{}", serde_json::to_string(&report).expect("error report"));
    ExitCode::from(code)
}

/// An input path that must exist; a missing file is a usage mistake, not a
/// runtime failure.
fn input(path: &Path) -> Result<&Path, Error> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::Input(format!("{}: no such file or directory", path.display())))
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct SimSummary {
    stage: String,
    task: TaskTarget,
    episodes: usize,
    successes: usize,
    infrastructure_reruns: usize,
    dataset: PathBuf,
    messages: PathBuf,
}

fn sim_run(
    stage: &str,
    episodes: usize,
    seed: u64,
    out: &Path,
    policy: Option<&Path>,
    task: Option<Task>,
    config: &RunConfig,
) -> Result<(), Error> {
    if episodes == 0 {
        return Err(Error::Validation {
            field: "episodes".into(),
            message: "must be at least 1".into(),
        });
    }
    let collector = match policy {
        Some(p) => Collector::from_model(&PolicyModel::load(input(p)?)?)?,
        None => Collector::random(),
    };
    let target = task.map(TaskTarget::from).unwrap_or_else(|| {
        config
            .plan
            .iter()
            .find(|s| s.id == stage)
            .map_or(TaskTarget::Subtask1, |s| s.target)
    });
    fs::create_dir_all(out)?;
    let dataset_path = out.join("dataset.jsonl");
    let log_path = out.join("messages.jsonl");
    if log_path.exists() {
        fs::remove_file(&log_path)?;
    }
    let env = config.environment();
    let pipeline = Pipeline::new(config.pipeline.clone(), env.model, env.workspace.cube_edge)?.with_log(&log_path)?;
    let mut rollout = Rollout::new(env, pipeline, seed)?;
    let mut records = Vec::with_capacity(episodes);
    let mut reruns = 0;
    let mut episode_id = 0u64;
    while records.len() < episodes {
        let attempt = rollout.attempt(episode_id, target, &collector)?;
        episode_id += 1;
        if attempt.outcome.label == OutcomeLabel::InfrastructureFailure {
            reruns += 1;
            if reruns > 10 * episodes {
                return Err(Error::Transport("monitoring pipeline keeps failing".into()));
            }
            continue;
        }
        records.extend(attempt.to_record(stage));
    }
    // Flushes the message log.
    drop(rollout);
    let dataset = Dataset::new(stage, records);
    write_dataset(&dataset_path, &dataset)?;
    print_json(&SimSummary {
        stage: stage.into(),
        task: target,
        episodes: dataset.len(),
        successes: dataset.episodes.iter().filter(|e| e.is_success()).count(),
        infrastructure_reruns: reruns,
        dataset: dataset_path,
        messages: log_path,
    })
}

#[derive(Serialize)]
struct BootstrapSummary<'a> {
    run_dir: PathBuf,
    report: &'a autoboot_core::bootstrap::RunReport,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Sim {
            command:
                SimCommand::Run {
                    stage,
                    episodes,
                    seed,
                    out,
                    policy,
                    task,
                    config,
                },
        } => sim_run(&stage, episodes, seed, &out, policy.as_deref(), task, &config.load()?),
        Command::Bootstrap {
            config,
            out,
            print_effective_config,
        } => {
            let config = config.load()?;
            if print_effective_config {
                return print_json(&config.resolved());
            }
            let root = output_root(out.as_deref());
            let report = run_bootstrap(&config, &root)?;
            for id in &report.aborted {
                log::warn!("stage {id} aborted at the attempt ceiling");
            }
            for issue in report.failed.iter().chain(&report.skipped) {
                log::warn!("{issue:?}");
            }
            print_json(&BootstrapSummary {
                run_dir: root.join("runs").join(&report.run_id),
                report: &report,
            })
        }
        Command::Evaluate {
            policy,
            trials,
            seed,
            config,
        } => {
            let config = config.load()?;
            let collector = Collector::from_model(&PolicyModel::load(input(&policy)?)?)?;
            let report = evaluate_policy(&collector, &config.environment(), &config.pipeline, trials, seed)?;
            print_json(&report)
        }
        Command::Select { prior, new, k, config } => {
            let spec = config.load()?.workspace;
            let selected = select_balanced(&read_dataset(input(&prior)?, &spec)?, &read_dataset(input(&new)?, &spec)?, k)?;
            print_json(&selected.ids())
        }
        Command::Metrics {
            command: MetricsCommand::L1avg {
                dataset,
                successful_only,
            },
        } => {
            let spec = RunConfig::default().workspace;
            let ds = read_dataset(input(&dataset)?, &spec)?;
            let points: Vec<[f64; 2]> = ds
                .episodes
                .iter()
                .filter(|e| !successful_only || e.is_success())
                .map(|e| e.green_init)
                .collect();
            println!("{}", l1_avg(&points)?);
            Ok(())
        }
        Command::Cost { lines } => {
            let text = fs::read_to_string(input(&lines)?)?;
            let lines: Vec<CostLine> = serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", lines.display())))?;
            print_json(&cost_report(&lines)?)
        }
        Command::Report { run } => {
            let paths = export_reports(input(&run)?)?;
            print_json(&paths)
        }
        Command::Replay { log, config } => {
            let config = config.load()?;
            let verifier = VerifierConfig {
                confirm_frames: config.pipeline.confirm_frames,
                model: config.success_model.resolve(),
                cube_edge: config.workspace.cube_edge,
            };
            let report = replay_log(BufReader::new(fs::File::open(input(&log)?)?), verifier)?;
            print_json(&report)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", "usage", e.to_string(), EXIT_USAGE),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let class = if code == EXIT_VALIDATION { "validation" } else { "runtime" };
            fail(class, e.kind(), e.to_string(), code)
        }
    }
}
