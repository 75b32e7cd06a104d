use std::collections::BTreeMap;

use super::prune::{input_tensor, live_conjunctions};
use super::PostTrainError;
use crate::logic::{
    conj_atom, neural_to_logic, simplify_inline, AnnotatedDisjunction, AspProgram, Literal, LogicError, NormalRule,
    ProblogProgram, Vocabulary,
};
use crate::neural::NeuralDnfMt;

/// ASP program of a fully thresholded model, with auxiliary conjunctions
/// inlined wherever that keeps the program a normal program.
pub fn extract_asp(model: &NeuralDnfMt, vocab: &Vocabulary) -> Result<AspProgram, PostTrainError> {
    Ok(simplify_inline(&neural_to_logic(model, vocab)?, vocab))
}

fn conj_literals(model: &NeuralDnfMt, j: usize, vocab: &Vocabulary) -> Result<Vec<Literal>, PostTrainError> {
    let mut body = Vec::new();
    for (i, &w) in model.conj.weights.row(j).iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        if w.abs() != 6.0 {
            return Err(LogicError::NotThresholded { layer: "conjunctive", row: j, col: i, value: w }.into());
        }
        body.push(Literal { atom: vocab.inputs[i].clone(), negated: w < 0.0 });
    }
    Ok(body)
}

/// ProbLog program of a model with a thresholded conjunctive layer: one
/// annotated disjunction per distinct conjunction pattern seen on `inputs`,
/// carrying the model's action distribution for that pattern.
///
/// Conjunctions with identical weights are merged and conjunctions constant
/// over `inputs` are left out of the bodies. Bodies are written over input
/// atoms where possible; a negated conjunction with several literals stays
/// as `\+ conj_j` with its own rule.
pub fn extract_problog(model: &NeuralDnfMt, inputs: &[Vec<f64>], vocab: &Vocabulary) -> Result<ProblogProgram, PostTrainError> {
    if vocab.inputs.len() != model.inputs() || vocab.actions.len() != model.actions() {
        return Err(PostTrainError::Mismatch(format!(
            "vocabulary has {} inputs / {} actions, model {} / {}",
            vocab.inputs.len(),
            vocab.actions.len(),
            model.inputs(),
            model.actions()
        )));
    }
    let out = model.forward(&input_tensor(model, inputs)?)?;
    let conj_raw = model.conj.raw(&input_tensor(model, inputs)?)?;

    let mut reps: Vec<usize> = Vec::new();
    for j in live_conjunctions(model) {
        let literals = conj_literals(model, j, vocab)?;
        let dup = reps.iter().any(|&r| model.conj.weights.row(r) == model.conj.weights.row(j));
        if !dup && !literals.is_empty() {
            reps.push(j);
        }
    }
    let truth = |s: usize, j: usize| conj_raw.get2(s, j) > 0.0;
    let mut kept: Vec<usize> =
        reps.iter().copied().filter(|&j| (1..inputs.len()).any(|s| truth(s, j) != truth(0, j))).collect();
    if kept.is_empty() && !reps.is_empty() {
        kept.push(reps[0]);
    }

    let mut patterns: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    let mut order = Vec::new();
    for s in 0..inputs.len() {
        let pattern: Vec<bool> = kept.iter().map(|&j| truth(s, j)).collect();
        if !patterns.contains_key(&pattern) {
            patterns.insert(pattern.clone(), s);
            order.push(pattern);
        }
    }

    let mut rules = Vec::new();
    let mut disjunctions = Vec::new();
    for pattern in order {
        let s = patterns[&pattern];
        let mut body: Vec<Literal> = Vec::new();
        for (&j, &on) in kept.iter().zip(&pattern) {
            let lits = conj_literals(model, j, vocab)?;
            match (on, lits.as_slice()) {
                (true, _) => body.extend(lits.iter().cloned()),
                (false, [single]) => body.push(Literal { atom: single.atom.clone(), negated: !single.negated }),
                (false, _) => {
                    let head = conj_atom(j);
                    if !rules.iter().any(|r: &NormalRule| r.head == head) {
                        rules.push(NormalRule::new(head.clone(), lits.clone()));
                    }
                    body.push(Literal::neg(head));
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        body.retain(|l| seen.insert(l.clone()));
        let choices = vocab.actions.iter().zip(out.probs.row(s)).map(|(a, &p)| (p, a.clone())).collect();
        disjunctions.push(AnnotatedDisjunction { choices, body });
    }
    rules.sort_by(|a, b| a.head.cmp(&b.head));
    Ok(ProblogProgram { rules, disjunctions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use crate::logic::{obs_to_facts, print_asp, print_problog_with, problog_infer, Atom};
    use crate::neural::{Activation, BiasMode, NodeKind, SemiSymbolicLayer};

    fn model(wc: Tensor, wd: Tensor) -> NeuralDnfMt {
        let mut m = NeuralDnfMt::from_layers(
            SemiSymbolicLayer::from_weights(NodeKind::Conjunction, wc, 1.0, BiasMode::MaxBias).unwrap(),
            SemiSymbolicLayer::from_weights(NodeKind::Disjunction, wd, 1.0, BiasMode::MaxBias).unwrap(),
        )
        .unwrap();
        m.conj_activation = Activation::Step;
        m
    }

    fn walls() -> Vocabulary {
        Vocabulary::with_action_names(
            vec![Atom::from("left_wall_present"), Atom::from("right_wall_present")],
            &["left".to_string(), "right".to_string()],
        )
    }

    #[test]
    fn single_conjunction_translation() {
        let wc = Tensor::matrix(1, 2, vec![6.0, -6.0]);
        let wd = Tensor::matrix(2, 1, vec![6.0, -6.0]);
        let mut m = model(wc, wd);
        m.disj_activation = Activation::Step;
        let vocab = Vocabulary::new(vec![Atom::from("a_0"), Atom::from("a_1")], vec![Atom::from("x"), Atom::from("y")]);
        let p = neural_to_logic(&m, &vocab).unwrap();
        assert!(print_asp(&p).contains("conj_0 :- a_0, not a_1.\n"));
    }

    #[test]
    fn problog_bodies_over_wall_atoms() {
        // Conjunctions: left ∧ ¬right, and ¬left ∧ ¬right.
        let wc = Tensor::matrix(2, 2, vec![6.0, -6.0, -6.0, -6.0]);
        let wd = Tensor::matrix(2, 2, vec![-1.2, 0.9, 0.7, -0.5]);
        let m = model(wc, wd);
        let ctx = vec![vec![1.0, -1.0], vec![-1.0, -1.0], vec![-1.0, 1.0]];
        let p = extract_problog(&m, &ctx, &walls()).unwrap();
        let text = print_problog_with(&p, Some(3));
        assert!(text.contains(":- left_wall_present, \\+ right_wall_present.\n"), "{text}");
        assert!(text.contains("conj_1 :- \\+ left_wall_present, \\+ right_wall_present.\n"), "{text}");
        for ad in &p.disjunctions {
            assert!((ad.choices.iter().map(|c| c.0).sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let actions = walls().actions;
        let out = m.forward(&Tensor::from_rows(&ctx)).unwrap();
        for (s, x) in ctx.iter().enumerate() {
            let d = problog_infer(&p, &obs_to_facts(x, &walls().inputs).unwrap(), &actions).unwrap();
            assert_eq!(d, out.probs.row(s));
        }
    }

    #[test]
    fn constant_conjunction_is_left_out() {
        // conj_1 (¬right) is true on every context input.
        let wc = Tensor::matrix(2, 2, vec![6.0, 0.0, 0.0, -6.0]);
        let wd = Tensor::matrix(2, 2, vec![1.0, 0.5, -1.0, 0.5]);
        let m = model(wc, wd);
        let ctx = vec![vec![1.0, -1.0], vec![-1.0, -1.0]];
        let p = extract_problog(&m, &ctx, &walls()).unwrap();
        assert_eq!(p.disjunctions.len(), 2);
        for ad in &p.disjunctions {
            assert_eq!(ad.body.len(), 1);
            assert_eq!(ad.body[0].atom, Atom::from("left_wall_present"));
        }
    }

    #[test]
    fn duplicate_rows_merge() {
        let wc = Tensor::matrix(2, 2, vec![6.0, 0.0, 6.0, 0.0]);
        let wd = Tensor::matrix(2, 2, vec![1.0, 0.5, -1.0, 0.5]);
        let m = model(wc, wd);
        let ctx = vec![vec![1.0, -1.0], vec![-1.0, -1.0]];
        let p = extract_problog(&m, &ctx, &walls()).unwrap();
        assert!(p.disjunctions.iter().all(|ad| ad.body.len() == 1));
    }

    #[test]
    fn unthresholded_conjunction_rejected() {
        let wc = Tensor::matrix(1, 2, vec![2.5, 0.0]);
        let wd = Tensor::matrix(2, 1, vec![1.0, -1.0]);
        let m = model(wc, wd);
        assert!(matches!(
            extract_problog(&m, &[vec![1.0, 1.0]], &walls()),
            Err(PostTrainError::Logic(LogicError::NotThresholded { .. }))
        ));
    }
}
