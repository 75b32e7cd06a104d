//! ASP and ProbLog fragments produced by rule extraction, their evaluators,
//! and the translations between thresholded models and normal programs.

mod asp;
mod ast;
mod equivalence;
mod problog;
mod suite;
mod syntax;
mod translate;

pub use asp::{asp_evaluate, asp_select_action};
pub use ast::{AnnotatedDisjunction, AspProgram, Atom, Literal, NormalRule, ProblogProgram, Valuation};
pub use equivalence::{all_sign_vectors, verify_equivalence, Counterexample, EquivalenceReport, RemarkViolation};
pub use problog::problog_infer;
pub use suite::{equivalence_suite, random_program, random_thresholded_model, SuiteReport};
pub use syntax::{parse_asp, parse_problog, print_asp, print_problog, print_problog_with};
pub use translate::{
    check_thresholded, conj_atom, facts_to_obs, logic_to_neural, neural_to_logic, numbered_atoms, obs_to_facts,
    simplify_inline, TranslatedModel, Vocabulary,
};

use thiserror::Error;

use crate::neural::NeuralError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogicError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("program is not stratified (negative cycle through {0})")]
    Unstratified(String),
    #[error("expected exactly one true action, found {true_actions:?}")]
    NotExactlyOneAction { true_actions: Vec<String> },
    #[error("expected exactly one annotated disjunction to apply, {matched} did")]
    AnnotatedDisjunctionMatch { matched: usize },
    #[error("unknown action atom {0}")]
    UnknownAction(String),
    #[error("input value {0} is not -1 or 1")]
    NotSignVector(f64),
    #[error("{layer} weight [{row}, {col}] = {value} is not one of -6, 0, 6")]
    NotThresholded { layer: &'static str, row: usize, col: usize, value: f64 },
    #[error("rule for {0} has an empty body")]
    EmptyBody(String),
    #[error("rule for {head} uses {atom} both positively and negatively")]
    OverlappingLiteral { head: String, atom: String },
    #[error("outside the supported fragment: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}
