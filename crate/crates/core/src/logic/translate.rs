use std::collections::{BTreeMap, BTreeSet};

use super::ast::{AspProgram, Atom, Literal, NormalRule};
use super::LogicError;
use crate::autodiff::Tensor;
use crate::neural::{Activation, BiasMode, NeuralDnfMt, NodeKind, SemiSymbolicLayer};

/// Input and action atoms of a model, by position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pub inputs: Vec<Atom>,
    pub actions: Vec<Atom>,
}

impl Vocabulary {
    pub fn new(inputs: Vec<Atom>, actions: Vec<Atom>) -> Self {
        Self { inputs, actions }
    }

    /// `action(NAME)` atoms for the given action names.
    pub fn with_action_names(inputs: Vec<Atom>, names: &[String]) -> Self {
        Self { inputs, actions: names.iter().map(|n| Atom(format!("action({n})"))).collect() }
    }
}

/// `prefix{start}`, `prefix{start+1}`, …
pub fn numbered_atoms(prefix: &str, n: usize, start: usize) -> Vec<Atom> {
    (start..start + n).map(|i| Atom(format!("{prefix}{i}"))).collect()
}

pub fn conj_atom(j: usize) -> Atom {
    Atom(format!("conj_{j}"))
}

/// Facts `{aᵢ | xᵢ = 1}` of a ±1 input vector.
pub fn obs_to_facts(x: &[f64], atoms: &[Atom]) -> Result<BTreeSet<Atom>, LogicError> {
    let mut out = BTreeSet::new();
    for (v, a) in x.iter().zip(atoms) {
        if *v == 1.0 {
            out.insert(a.clone());
        } else if *v != -1.0 {
            return Err(LogicError::NotSignVector(*v));
        }
    }
    Ok(out)
}

pub fn facts_to_obs(facts: &BTreeSet<Atom>, atoms: &[Atom]) -> Vec<f64> {
    atoms.iter().map(|a| if facts.contains(a) { 1.0 } else { -1.0 }).collect()
}

fn literal_weight(layer: &'static str, row: usize, col: usize, w: f64) -> Result<Option<bool>, LogicError> {
    if w == 6.0 {
        Ok(Some(false))
    } else if w == -6.0 {
        Ok(Some(true))
    } else if w == 0.0 {
        Ok(None)
    } else {
        Err(LogicError::NotThresholded { layer, row, col, value: w })
    }
}

/// Checks that every weight of `model` is −6, 0 or 6.
pub fn check_thresholded(model: &NeuralDnfMt) -> Result<(), LogicError> {
    for (name, layer) in [("conjunctive", &model.conj), ("disjunctive", &model.disj)] {
        for r in 0..layer.out_features() {
            for (c, &w) in layer.weights.row(r).iter().enumerate() {
                literal_weight(name, r, c, w)?;
            }
        }
    }
    Ok(())
}

/// Node-by-node translation of a thresholded model: `conj_j` rules for every
/// conjunctive node with an incoming edge, then one action rule per
/// disjunctive edge. Action rules come first in the output.
pub fn neural_to_logic(model: &NeuralDnfMt, vocab: &Vocabulary) -> Result<AspProgram, LogicError> {
    if vocab.inputs.len() != model.inputs() || vocab.actions.len() != model.actions() {
        return Err(LogicError::Unsupported(format!(
            "vocabulary has {} inputs / {} actions, model {} / {}",
            vocab.inputs.len(),
            vocab.actions.len(),
            model.inputs(),
            model.actions()
        )));
    }
    let mut action_rules = Vec::new();
    for k in 0..model.actions() {
        for (j, &w) in model.disj.weights.row(k).iter().enumerate() {
            if let Some(negated) = literal_weight("disjunctive", k, j, w)? {
                action_rules.push(NormalRule::new(vocab.actions[k].clone(), vec![Literal { atom: conj_atom(j), negated }]));
            }
        }
    }
    let mut conj_rules = Vec::new();
    for j in 0..model.conjunctions() {
        let mut body = Vec::new();
        for (i, &w) in model.conj.weights.row(j).iter().enumerate() {
            if let Some(negated) = literal_weight("conjunctive", j, i, w)? {
                body.push(Literal { atom: vocab.inputs[i].clone(), negated });
            }
        }
        if !body.is_empty() {
            conj_rules.push(NormalRule::new(conj_atom(j), body));
        }
    }
    action_rules.extend(conj_rules);
    Ok(AspProgram::new(action_rules))
}

/// Inlines auxiliary atoms (heads that are neither inputs nor actions) into
/// the rules using them, unless an atom with a multi-literal body is used
/// under negation. Undefined auxiliary atoms are false: rules needing them
/// are dropped and `not` literals on them are removed.
pub fn simplify_inline(program: &AspProgram, vocab: &Vocabulary) -> AspProgram {
    let is_base = |a: &Atom| vocab.inputs.contains(a) || vocab.actions.contains(a);
    let mut defs: BTreeMap<Atom, Vec<&NormalRule>> = BTreeMap::new();
    for r in &program.rules {
        if !is_base(&r.head) {
            defs.entry(r.head.clone()).or_default().push(r);
        }
    }
    let mut negated_multi = BTreeSet::new();
    for r in &program.rules {
        for l in &r.body {
            if l.negated {
                if let Some(d) = defs.get(&l.atom) {
                    if d.len() != 1 || d[0].body.len() != 1 {
                        negated_multi.insert(l.atom.clone());
                    }
                }
            }
        }
    }
    let inlinable = |a: &Atom| {
        !is_base(a) && !negated_multi.contains(a) && defs.get(a).is_none_or(|d| d.len() == 1)
    };
    let mentioned: BTreeSet<Atom> = program.rules.iter().flat_map(|r| r.body.iter().map(|l| l.atom.clone())).collect();

    let mut out = Vec::new();
    'rules: for r in &program.rules {
        if !is_base(&r.head) && inlinable(&r.head) && mentioned.contains(&r.head) {
            continue;
        }
        let mut body: Vec<Literal> = Vec::new();
        for l in &r.body {
            if !inlinable(&l.atom) {
                body.push(l.clone());
                continue;
            }
            match (defs.get(&l.atom), l.negated) {
                (None, false) => continue 'rules,
                (None, true) => {}
                (Some(d), false) => body.extend(d[0].body.iter().cloned()),
                (Some(d), true) => {
                    let inner = &d[0].body[0];
                    body.push(Literal { atom: inner.atom.clone(), negated: !inner.negated });
                }
            }
        }
        let mut seen = BTreeSet::new();
        body.retain(|l| seen.insert(l.clone()));
        if body.iter().any(|l| body.iter().any(|m| m.atom == l.atom && m.negated != l.negated)) {
            continue;
        }
        out.push(NormalRule::new(r.head.clone(), body));
    }
    AspProgram::new(out)
}

/// Result of [`logic_to_neural`]: the model and, per conjunctive node, the
/// program atom it stands for (fresh bodies have none).
#[derive(Debug, Clone, PartialEq)]
pub struct TranslatedModel {
    pub model: NeuralDnfMt,
    pub conj_atoms: Vec<Option<Atom>>,
}

fn conj_index(a: &Atom) -> Option<usize> {
    a.name().strip_prefix("conj_").and_then(|s| s.parse().ok())
}

/// Builds weights realising `program`: one conjunctive node per distinct
/// body, ±6 weights, δ = 1, max-bias and step activations. Auxiliary heads
/// named `conj_N` keep row N; other bodies get rows appended after them.
pub fn logic_to_neural(program: &AspProgram, vocab: &Vocabulary) -> Result<TranslatedModel, LogicError> {
    let input_idx: BTreeMap<&Atom, usize> = vocab.inputs.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let action_idx: BTreeMap<&Atom, usize> = vocab.actions.iter().enumerate().map(|(i, a)| (a, i)).collect();

    let check_body = |head: &Atom, body: &[Literal]| -> Result<(), LogicError> {
        if body.is_empty() {
            return Err(LogicError::EmptyBody(head.to_string()));
        }
        for l in body {
            if body.iter().any(|m| m.atom == l.atom && m.negated != l.negated) {
                return Err(LogicError::OverlappingLiteral { head: head.to_string(), atom: l.atom.to_string() });
            }
        }
        Ok(())
    };

    // Auxiliary definitions.
    let mut aux: BTreeMap<Atom, Vec<Literal>> = BTreeMap::new();
    for r in &program.rules {
        if input_idx.contains_key(&r.head) {
            return Err(LogicError::Unsupported(format!("input atom {} used as a rule head", r.head)));
        }
        if action_idx.contains_key(&r.head) {
            continue;
        }
        check_body(&r.head, &r.body)?;
        if aux.contains_key(&r.head) {
            return Err(LogicError::Unsupported(format!("{} has more than one rule", r.head)));
        }
        for l in &r.body {
            if !input_idx.contains_key(&l.atom) {
                return Err(LogicError::Unsupported(format!("body of {} uses non-input atom {}", r.head, l.atom)));
            }
        }
        aux.insert(r.head.clone(), r.body.clone());
    }

    let canon = |body: &[Literal]| -> Vec<Literal> {
        let mut b = body.to_vec();
        b.sort();
        b.dedup();
        b
    };

    let mut nodes: Vec<Option<Vec<Literal>>> = Vec::new();
    let mut conj_atoms: Vec<Option<Atom>> = Vec::new();
    let mut atom_node: BTreeMap<Atom, usize> = BTreeMap::new();
    let place = |nodes: &mut Vec<Option<Vec<Literal>>>, conj_atoms: &mut Vec<Option<Atom>>, at: usize, body: Vec<Literal>, atom: Option<Atom>| {
        if nodes.len() <= at {
            nodes.resize(at + 1, None);
            conj_atoms.resize(at + 1, None);
        }
        nodes[at] = Some(body);
        conj_atoms[at] = atom;
    };
    for (a, body) in aux.iter().filter(|(a, _)| conj_index(a).is_some()) {
        let j = conj_index(a).unwrap();
        place(&mut nodes, &mut conj_atoms, j, canon(body), Some(a.clone()));
        atom_node.insert(a.clone(), j);
    }
    for (a, body) in aux.iter().filter(|(a, _)| conj_index(a).is_none()) {
        let j = nodes.len();
        place(&mut nodes, &mut conj_atoms, j, canon(body), Some(a.clone()));
        atom_node.insert(a.clone(), j);
    }

    let mut edges: Vec<(usize, usize, bool)> = Vec::new();
    for r in program.rules.iter().filter(|r| action_idx.contains_key(&r.head)) {
        let k = action_idx[&r.head];
        check_body(&r.head, &r.body)?;
        let (node, negated) = match r.body.as_slice() {
            [l] if atom_node.contains_key(&l.atom) => (atom_node[&l.atom], l.negated),
            [l] if l.negated && input_idx.contains_key(&l.atom) => {
                let body = vec![Literal::pos(l.atom.clone())];
                (find_or_add(&mut nodes, &mut conj_atoms, body), true)
            }
            lits => {
                let mut body = Vec::new();
                for l in lits {
                    if input_idx.contains_key(&l.atom) {
                        body.push(l.clone());
                    } else if let (Some(def), false) = (aux.get(&l.atom), l.negated) {
                        body.extend(def.iter().cloned());
                    } else {
                        return Err(LogicError::Unsupported(format!("literal {:?} in a rule for {}", l, r.head)));
                    }
                }
                check_body(&r.head, &body)?;
                (find_or_add(&mut nodes, &mut conj_atoms, canon(&body)), false)
            }
        };
        if edges.iter().any(|&(k2, n2, neg2)| k2 == k && n2 == node && neg2 != negated) {
            return Err(LogicError::Unsupported(format!("{} uses a conjunction both positively and negatively", r.head)));
        }
        edges.push((k, node, negated));
    }

    let c = nodes.len().max(1);
    let mut wc = Tensor::zeros(&[c, vocab.inputs.len()]);
    for (j, body) in nodes.iter().enumerate() {
        for l in body.iter().flatten() {
            wc.set2(j, input_idx[&l.atom], if l.negated { -6.0 } else { 6.0 });
        }
    }
    conj_atoms.resize(c, None);
    let mut wd = Tensor::zeros(&[vocab.actions.len(), c]);
    for (k, j, negated) in edges {
        wd.set2(k, j, if negated { -6.0 } else { 6.0 });
    }
    let conj = SemiSymbolicLayer::from_weights(NodeKind::Conjunction, wc, 1.0, BiasMode::MaxBias)?;
    let disj = SemiSymbolicLayer::from_weights(NodeKind::Disjunction, wd, 1.0, BiasMode::MaxBias)?;
    let mut model = NeuralDnfMt::from_layers(conj, disj)?;
    model.conj_activation = Activation::Step;
    model.disj_activation = Activation::Step;
    Ok(TranslatedModel { model, conj_atoms })
}

fn find_or_add(nodes: &mut Vec<Option<Vec<Literal>>>, conj_atoms: &mut Vec<Option<Atom>>, body: Vec<Literal>) -> usize {
    if let Some(j) = nodes.iter().position(|n| n.as_ref() == Some(&body)) {
        return j;
    }
    nodes.push(Some(body));
    conj_atoms.push(None);
    nodes.len() - 1
}
