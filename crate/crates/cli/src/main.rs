//! `gymkit` command-line front end: random-policy rollouts, registry listing
//! and inspection, and vector backend throughput runs.

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gymkit::env::{EnvError, RenderMode};
use gymkit::registry::{self, RegistryError};
use gymkit::rollout::{run_backend, run_bench, BenchReport, RolloutReport};
use gymkit::seeding::entropy_seed;
use gymkit::vector::Backend;
use serde_json::Value as Json;

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "gymkit",
    version,
    about = "Reinforcement-learning environment toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Sequential,
    Parallel,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Sequential => Backend::Sequential,
            BackendArg::Parallel => Backend::Parallel,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a random policy, resetting whenever an episode ends.
    Rollout {
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 1000)]
        steps: u64,
        /// Defaults to a wall-clock seed, which is reported.
        #[arg(long)]
        seed: Option<u64>,
        /// Render every step in the environment's preferred mode.
        #[arg(long)]
        render: bool,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Leave out wall-time fields.
        #[arg(long)]
        no_timing: bool,
    },
    /// Compare sequential and parallel vector backends.
    Bench {
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 4)]
        num_envs: usize,
        /// Batched steps per backend.
        #[arg(long, default_value_t = 1000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run only this backend.
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        no_timing: bool,
    },
    /// List registered environments.
    List {
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Print the canonical spec JSON of one environment.
    Inspect {
        #[arg(long)]
        env: String,
    },
}

fn exit_code(e: &EnvError) -> u8 {
    match e {
        EnvError::Registry(
            RegistryError::MalformedId { .. }
            | RegistryError::MissingVersion(_)
            | RegistryError::UnknownEnvironment(_)
            | RegistryError::VersionNotFound { .. }
            | RegistryError::InvalidKwargs(_),
        )
        | EnvError::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<ExitCode, EnvError> {
    match command {
        Command::Rollout {
            env,
            steps,
            seed,
            render,
            format,
            no_timing,
        } => {
            let mode = if render {
                Some(preferred_mode(&env)?)
            } else {
                None
            };
            let seed = seed.unwrap_or_else(entropy_seed);
            let report = gymkit::rollout::run_rollout(&env, steps, seed, mode)?;
            print_rollout(&report, format, !no_timing);
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            env,
            num_envs,
            steps,
            seed,
            backend,
            format,
            no_timing,
        } => {
            if num_envs == 0 {
                return Err(EnvError::InvalidArgument(
                    "--num-envs must be at least 1".into(),
                ));
            }
            let report = match backend {
                Some(b) => BenchReport {
                    env_id: registry::registry().spec(&env)?.id.to_string(),
                    num_envs,
                    steps,
                    seed,
                    runs: vec![run_backend(&env, num_envs, steps, seed, b.into())?],
                },
                None => run_bench(&env, num_envs, steps, seed)?,
            };
            print_bench(&report, format, !no_timing);
            Ok(if report.outputs_identical() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_RUNTIME)
            })
        }
        Command::List { format } => {
            let specs = registry::list_registered(None);
            match format {
                Format::Json => {
                    let docs = specs
                        .iter()
                        .map(|s| {
                            s.to_json().map(|t| {
                                serde_json::from_str::<Json>(&t).expect("spec JSON parses")
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    println!("{}", Json::Array(docs));
                }
                Format::Table => {
                    println!("{:<20} {:<16} {:>9}", "id", "entry point", "max steps");
                    for s in specs {
                        let limit = s
                            .max_episode_steps
                            .map_or("-".to_string(), |m| m.to_string());
                        println!(
                            "{:<20} {:<16} {:>9}",
                            s.id.to_string(),
                            s.entry_point,
                            limit
                        );
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Inspect { env } => {
            println!("{}", registry::registry().spec(&env)?.to_json()?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Text when the environment has it, else the `human` sink, else frames.
fn preferred_mode(id: &str) -> Result<RenderMode, EnvError> {
    let env = registry::make(id)?;
    let modes = &env.metadata().render_modes;
    [RenderMode::Ansi, RenderMode::Human, RenderMode::RgbArray]
        .into_iter()
        .find(|m| modes.contains(m))
        .ok_or_else(|| EnvError::InvalidArgument(format!("{id} cannot render")))
}

fn print_rollout(report: &RolloutReport, format: Format, timing: bool) {
    match format {
        Format::Json => println!("{}", report.to_json(timing)),
        Format::Table => {
            println!("env:                {}", report.env_id);
            println!("seed:               {}", report.seed);
            println!("total steps:        {}", report.total_steps);
            println!("episodes completed: {}", report.episodes_completed);
            println!(
                "partial episode:    {} steps",
                report.partial_episode_length
            );
            println!("contract violations: {}", report.contract_violations);
            if !report.episode_returns.is_empty() {
                let mean = report.episode_returns.iter().sum::<f64>()
                    / report.episode_returns.len() as f64;
                println!("mean return:        {mean:.3}");
            }
            for (i, (r, l)) in report
                .episode_returns
                .iter()
                .zip(&report.episode_lengths)
                .enumerate()
            {
                println!("  episode {i:>4}: return {r:>10.3}  length {l:>5}");
            }
            if timing {
                println!("wall time:          {:.3} s", report.wall_time_s);
                println!("steps/second:       {:.0}", report.steps_per_second);
            }
        }
    }
}

fn print_bench(report: &BenchReport, format: Format, timing: bool) {
    match format {
        Format::Json => println!("{}", report.to_json(timing)),
        Format::Table => {
            println!(
                "env: {}  num_envs: {}  steps: {}  seed: {}",
                report.env_id, report.num_envs, report.steps, report.seed
            );
            for run in &report.runs {
                if timing {
                    println!(
                        "{:<10} {:>12.0} steps/s  ({:.3} s, digest {:016x})",
                        run.backend.as_str(),
                        run.steps_per_second,
                        run.wall_time_s,
                        run.digest.value()
                    );
                } else {
                    println!(
                        "{:<10} digest {:016x}",
                        run.backend.as_str(),
                        run.digest.value()
                    );
                }
            }
            if report.runs.len() > 1 {
                println!("outputs identical: {}", report.outputs_identical());
            }
        }
    }
}
