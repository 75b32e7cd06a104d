use ndnf_core::env::EnvError;
use ndnf_core::evaluation::EvalError;
use ndnf_core::logic::LogicError;
use ndnf_core::neural::NeuralError;
use ndnf_core::post_training::PostTrainError;
use ndnf_core::training::TrainingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("extraction failed: {0}")]
    Extraction(String),
    #[error("equivalence counterexample: {0}")]
    Counterexample(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("artifact {0} already exists (pass --force to overwrite)")]
    Exists(String),
    #[error(transparent)]
    Training(#[from] TrainingError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    PostTrain(#[from] PostTrainError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Exists(_) => 2,
            CliError::Logic(LogicError::Syntax { .. }) => 2,
            CliError::Training(TrainingError::Config(_)) => 2,
            CliError::Extraction(_) => 3,
            CliError::Counterexample(_) => 4,
            _ => 1,
        }
    }

    pub fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io { path: path.display().to_string(), source }
    }
}
