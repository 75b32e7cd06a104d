use serde::Serialize;

use super::asp::asp_evaluate;
use super::ast::{AspProgram, Atom};
use super::translate::{check_thresholded, obs_to_facts, Vocabulary};
use super::LogicError;
use crate::neural::{step, NeuralDnfMt};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub input: Vec<f64>,
    pub node: String,
    pub neural: bool,
    pub logic: bool,
}

/// A raw output outside the bands a thresholded node can produce.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemarkViolation {
    pub input: Vec<f64>,
    pub node: String,
    pub raw: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub inputs_checked: usize,
    pub counterexamples: Vec<Counterexample>,
    pub remark_violations: Vec<RemarkViolation>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty() && self.remark_violations.is_empty()
    }
}

/// Every ±1 vector of length `n`, in binary counting order.
pub fn all_sign_vectors(n: usize) -> Vec<Vec<f64>> {
    (0..1usize << n).map(|m| (0..n).map(|i| if m >> i & 1 == 1 { 1.0 } else { -1.0 }).collect()).collect()
}

/// Compares the bivalent reading of every node of a thresholded model with
/// the stable model of `program` on each input. Conjunctive node `j` is
/// compared with `conj_atoms[j]` when present; every action node is compared
/// with its action atom. Raw outputs of nodes with at least one edge must be
/// exactly 6 or at most −6 (conjunctive), exactly −6 or at least 6
/// (disjunctive).
pub fn verify_equivalence(
    model: &NeuralDnfMt,
    program: &AspProgram,
    vocab: &Vocabulary,
    conj_atoms: &[Option<Atom>],
    inputs: &[Vec<f64>],
) -> Result<EquivalenceReport, LogicError> {
    check_thresholded(model)?;
    let cb = model.conj.biases();
    let db = model.disj.biases();
    let conj_live: Vec<bool> = (0..model.conjunctions()).map(|j| model.conj.weights.row(j).iter().any(|&w| w != 0.0)).collect();
    let disj_live: Vec<bool> = (0..model.actions()).map(|k| model.disj.weights.row(k).iter().any(|&w| w != 0.0)).collect();
    let mut report = EquivalenceReport::default();
    let mut zc = vec![0.0; model.conjunctions()];
    let mut zd = vec![0.0; model.actions()];
    for x in inputs {
        let facts = obs_to_facts(x, &vocab.inputs)?;
        let v = asp_evaluate(program, &facts)?;
        let truth = |a: &Atom| v.get(a).copied().unwrap_or(false);
        model.conj.raw_one(&cb, x, &mut zc);
        for (j, &z) in zc.iter().enumerate() {
            if conj_live[j] && !(z == 6.0 || z <= -6.0) {
                report.remark_violations.push(RemarkViolation { input: x.clone(), node: format!("conj node {j}"), raw: z });
            }
            if let Some(Some(atom)) = conj_atoms.get(j) {
                if (z > 0.0) != truth(atom) {
                    report.counterexamples.push(Counterexample {
                        input: x.clone(),
                        node: atom.to_string(),
                        neural: z > 0.0,
                        logic: truth(atom),
                    });
                }
            }
        }
        let c: Vec<f64> = zc.iter().map(|&z| step(z)).collect();
        model.disj.raw_one(&db, &c, &mut zd);
        for (k, &z) in zd.iter().enumerate() {
            if disj_live[k] && !(z == -6.0 || z >= 6.0) {
                report.remark_violations.push(RemarkViolation { input: x.clone(), node: format!("disj node {k}"), raw: z });
            }
            let atom = &vocab.actions[k];
            if (z > 0.0) != truth(atom) {
                report.counterexamples.push(Counterexample { input: x.clone(), node: atom.to_string(), neural: z > 0.0, logic: truth(atom) });
            }
        }
        report.inputs_checked += 1;
    }
    Ok(report)
}
