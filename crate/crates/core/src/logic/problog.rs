use std::collections::BTreeSet;

use super::asp::asp_evaluate;
use super::ast::{AspProgram, Atom, ProblogProgram};
use super::LogicError;

/// Action distribution of an extracted ProbLog program under `facts`.
///
/// The conjunction rules are evaluated as a stratified normal program; the
/// annotated disjunction whose body holds supplies the distribution. Bodies of
/// extracted programs are mutually exclusive, so anything other than exactly
/// one match is reported as an error.
pub fn problog_infer(program: &ProblogProgram, facts: &BTreeSet<Atom>, actions: &[Atom]) -> Result<Vec<f64>, LogicError> {
    let v = asp_evaluate(&AspProgram::new(program.rules.clone()), facts)?;
    let truth = |a: &Atom| v.get(a).copied().unwrap_or(false);
    let matched: Vec<usize> = program
        .disjunctions
        .iter()
        .enumerate()
        .filter(|(_, ad)| ad.body.iter().all(|l| l.holds(truth(&l.atom))))
        .map(|(i, _)| i)
        .collect();
    let [i] = matched.as_slice() else {
        return Err(LogicError::AnnotatedDisjunctionMatch { matched: matched.len() });
    };
    let mut dist = vec![0.0; actions.len()];
    for (p, atom) in &program.disjunctions[*i].choices {
        let k = actions.iter().position(|a| a == atom).ok_or_else(|| LogicError::UnknownAction(atom.to_string()))?;
        dist[k] += p;
    }
    Ok(dist)
}
