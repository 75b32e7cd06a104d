mod artifact;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ndnf_core::env::EnvSpec;
use ndnf_core::evaluation::ActionSelection;
use ndnf_core::post_training::PolicyKind;

use commands::{EncoderSource, EvalTarget};
use error::CliError;

/// Train neural DNF-MT policies, extract logic programs from them, edit and
/// port programs back, and evaluate everything.
///
/// Artifacts go under $NDNF_ARTIFACT_DIR (default ./artifacts).
#[derive(Parser)]
#[command(name = "ndnf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Deterministic,
    Stochastic,
}

#[derive(Subcommand)]
enum Command {
    /// Train an actor-critic with PPO.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Train a tabular Q-learning baseline.
    Qlearn {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Distil a neural DNF-MT actor from a trained actor or Q-table run.
    Distil {
        #[arg(long)]
        oracle: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Prune, threshold and extract an ASP or ProbLog program from a run.
    Extract {
        #[arg(long)]
        run: PathBuf,
        /// Overrides the run's policy kind.
        #[arg(long, value_enum)]
        policy_kind: Option<Kind>,
        /// JSON list of observations the processed model must agree on,
        /// instead of the environment's default set.
        #[arg(long)]
        context: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Port an edited ASP program back to a neural DNF-MT actor and evaluate it.
    Intervene {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        env: String,
        /// Run whose predicate encoder is reused.
        #[arg(long, conflicts_with = "reference_encoder")]
        base: Option<PathBuf>,
        /// Use the hand-built Door Corridor encoder.
        #[arg(long)]
        reference_encoder: bool,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        force: bool,
    },
    /// Evaluate a run directory or a program file.
    Eval {
        #[arg(long, required_unless_present = "program")]
        run: Option<PathBuf>,
        #[arg(long, conflicts_with = "run", requires = "env")]
        program: Option<PathBuf>,
        #[arg(long)]
        env: Option<String>,
        /// Run whose encoder reads observations for a Door Corridor program
        /// (the hand-built encoder otherwise).
        #[arg(long)]
        encoder_from: Option<PathBuf>,
        /// argmax, sample, eps-greedy or eps-greedy:EPS
        #[arg(long, default_value = "argmax")]
        selection: String,
        #[arg(long, default_value_t = 10_000)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report here (.json or .csv).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tabulate the recorded evaluations of several runs as CSV.
    Compare {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
    /// Check both translation directions on random thresholded models.
    Verify {
        #[arg(long, default_value_t = 200)]
        models: usize,
        #[arg(long, default_value_t = 10)]
        max_inputs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_env(s: &str) -> Result<EnvSpec, CliError> {
    s.parse().map_err(|e| CliError::Config(format!("{e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { config, force } => commands::train(&config, force).map(drop),
        Command::Qlearn { config, force } => commands::qlearn(&config, force).map(drop),
        Command::Distil { oracle, config, force } => commands::distil_cmd(&oracle, &config, force).map(drop),
        Command::Extract { run, policy_kind, context, force } => {
            let kind = policy_kind.map(|k| match k {
                Kind::Deterministic => PolicyKind::Deterministic,
                Kind::Stochastic => PolicyKind::Stochastic,
            });
            commands::extract(&run, kind, context.as_deref(), force).map(drop)
        }
        Command::Intervene { program, env, base, reference_encoder, episodes, seed, force } => {
            let source = match (&base, reference_encoder) {
                (Some(dir), _) => EncoderSource::Run(dir),
                (None, true) => EncoderSource::Reference,
                (None, false) => EncoderSource::None,
            };
            commands::intervene(&program, parse_env(&env)?, source, episodes, seed, force).map(drop)
        }
        Command::Eval { run, program, env, encoder_from, selection, episodes, seed, output } => {
            let selection: ActionSelection = selection.parse().map_err(|e| CliError::Config(format!("{e}")))?;
            let target = match (&run, &program) {
                (Some(dir), _) => EvalTarget::Run(dir),
                (None, Some(path)) => {
                    let env = parse_env(env.as_deref().unwrap_or_default())?;
                    EvalTarget::Program { path, env, encoder_from: encoder_from.as_deref() }
                }
                (None, None) => unreachable!("clap requires --run or --program"),
            };
            let report = commands::eval(target, selection, episodes, seed)?;
            let json = serde_json::to_string_pretty(&report).expect("reports serialise");
            if let Some(path) = output {
                let text = if path.extension().is_some_and(|e| e == "csv") {
                    commands::reports_csv(std::slice::from_ref(&report))
                } else {
                    json.clone() + "\n"
                };
                std::fs::write(&path, text).map_err(CliError::io(&path))?;
            }
            println!("{json}");
            Ok(())
        }
        Command::Compare { runs } => {
            print!("{}", commands::compare(&runs)?);
            Ok(())
        }
        Command::Verify { models, max_inputs, seed } => {
            println!("{}", commands::verify(models, max_inputs, seed)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
