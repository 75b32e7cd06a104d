use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ast::{AspProgram, Atom, Literal, NormalRule};
use super::equivalence::{all_sign_vectors, verify_equivalence, Counterexample, RemarkViolation};
use super::translate::{conj_atom, logic_to_neural, neural_to_logic, numbered_atoms, Vocabulary};
use super::LogicError;
use crate::autodiff::Tensor;
use crate::neural::{Activation, BiasMode, NeuralDnfMt, NodeKind, SemiSymbolicLayer};

fn ternary_row(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut row: Vec<f64> = (0..n).map(|_| [-6.0, 0.0, 0.0, 6.0][rng.gen_range(0..4)]).collect();
    if row.iter().all(|&w| w == 0.0) {
        row[rng.gen_range(0..n)] = if rng.gen() { 6.0 } else { -6.0 };
    }
    row
}

/// Model with weights drawn from {−6, 0, 6} (0 twice as likely), every node
/// having at least one edge, δ = 1 and step activations.
pub fn random_thresholded_model(inputs: usize, conjunctions: usize, actions: usize, rng: &mut impl Rng) -> NeuralDnfMt {
    let wc: Vec<f64> = (0..conjunctions).flat_map(|_| ternary_row(inputs, rng)).collect();
    let wd: Vec<f64> = (0..actions).flat_map(|_| ternary_row(conjunctions, rng)).collect();
    let layer = |kind, rows, cols, w| {
        SemiSymbolicLayer::from_weights(kind, Tensor::matrix(rows, cols, w), 1.0, BiasMode::MaxBias)
            .expect("shapes agree by construction")
    };
    let mut m = NeuralDnfMt::from_layers(
        layer(NodeKind::Conjunction, conjunctions, inputs, wc),
        layer(NodeKind::Disjunction, actions, conjunctions, wd),
    )
    .expect("layer widths agree by construction");
    m.conj_activation = Activation::Step;
    m.disj_activation = Activation::Step;
    m
}

fn random_body(vocab: &Vocabulary, min: usize, rng: &mut impl Rng) -> Vec<Literal> {
    let k = rng.gen_range(min..=vocab.inputs.len().min(4));
    let mut body: Vec<Literal> =
        vocab.inputs.choose_multiple(rng, k).map(|a| Literal { atom: a.clone(), negated: rng.gen() }).collect();
    body.sort();
    body
}

/// Program in the extracted fragment: `conjunctions` auxiliary `conj_j`
/// rules over input literals, and up to two rules per action whose body is
/// a single (possibly negated) `conj_j` or a fresh conjunction of at least
/// two input literals that no other rule uses (only with two or more
/// inputs).
pub fn random_program(vocab: &Vocabulary, conjunctions: usize, rng: &mut impl Rng) -> AspProgram {
    let mut rules: Vec<NormalRule> =
        (0..conjunctions).map(|j| NormalRule::new(conj_atom(j), random_body(vocab, 1, rng))).collect();
    let mut bodies: Vec<Vec<Literal>> = rules.iter().map(|r| r.body.clone()).collect();
    for action in &vocab.actions {
        let mut used: Vec<usize> = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            let body = if conjunctions > 0 && rng.gen_bool(0.6) {
                let j = rng.gen_range(0..conjunctions);
                if used.contains(&j) {
                    continue;
                }
                used.push(j);
                vec![Literal { atom: conj_atom(j), negated: rng.gen() }]
            } else if vocab.inputs.len() >= 2 {
                let body = random_body(vocab, 2, rng);
                if bodies.contains(&body) {
                    continue;
                }
                bodies.push(body.clone());
                body
            } else {
                continue;
            };
            rules.push(NormalRule::new(action.clone(), body));
        }
    }
    AspProgram::new(rules)
}

/// Outcome of running both translation directions on random instances.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SuiteReport {
    pub models: usize,
    pub inputs_checked: usize,
    pub counterexamples: Vec<Counterexample>,
    pub remark_violations: Vec<RemarkViolation>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty() && self.remark_violations.is_empty()
    }
}

/// For each of `models` instances with `2..=max_inputs` inputs, checks a
/// random thresholded model against its translation and a random program
/// against the model built from it, over every ±1 input vector.
pub fn equivalence_suite(models: usize, max_inputs: usize, seed: u64) -> Result<SuiteReport, LogicError> {
    if max_inputs < 2 {
        return Err(LogicError::Unsupported("the suite needs at least 2 inputs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::default();
    for _ in 0..models {
        let inputs = rng.gen_range(2..=max_inputs);
        let conjunctions = rng.gen_range(1..=8);
        let actions = rng.gen_range(2..=4);
        let names: Vec<String> = (0..actions).map(|k| k.to_string()).collect();
        let vocab = Vocabulary::with_action_names(numbered_atoms("a_", inputs, 0), &names);
        let xs = all_sign_vectors(inputs);

        let model = random_thresholded_model(inputs, conjunctions, actions, &mut rng);
        let program = neural_to_logic(&model, &vocab)?;
        let heads: Vec<Option<Atom>> = (0..conjunctions).map(|j| Some(conj_atom(j))).collect();
        let forward = verify_equivalence(&model, &program, &vocab, &heads, &xs)?;

        let program = random_program(&vocab, conjunctions, &mut rng);
        let t = logic_to_neural(&program, &vocab)?;
        let backward = verify_equivalence(&t.model, &program, &vocab, &t.conj_atoms, &xs)?;

        for r in [forward, backward] {
            report.inputs_checked += r.inputs_checked;
            report.counterexamples.extend(r.counterexamples);
            report.remark_violations.extend(r.remark_violations);
        }
        report.models += 1;
    }
    Ok(report)
}
