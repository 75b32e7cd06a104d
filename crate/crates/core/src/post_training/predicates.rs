use serde::{Deserialize, Serialize};

use super::PostTrainError;
use crate::env::raw_atoms;
use crate::logic::{Atom, Literal, NormalRule};
use crate::neural::DcEncoder;

pub const DEFAULT_MAX_LITERALS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Definition {
    /// Smallest conjunction of raw observation literals with the same truth
    /// value on every observation.
    Rule(Vec<Literal>),
    /// True on every observation.
    Fact,
    /// False on every observation; nothing is emitted.
    Never,
    /// No conjunction within the literal cap matches.
    Opaque,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateDefinition {
    pub predicate: Atom,
    pub definition: Definition,
}

impl PredicateDefinition {
    /// The definition as a rule, when it has one.
    pub fn rule(&self) -> Option<NormalRule> {
        match &self.definition {
            Definition::Rule(body) => Some(NormalRule::new(self.predicate.clone(), body.clone())),
            Definition::Fact => Some(NormalRule::new(self.predicate.clone(), Vec::new())),
            Definition::Never | Definition::Opaque => None,
        }
    }
}

type Mask = Vec<u64>;

fn mask_of(bits: impl Iterator<Item = bool>, words: usize) -> Mask {
    let mut m = vec![0u64; words];
    for (i, b) in bits.enumerate() {
        if b {
            m[i / 64] |= 1 << (i % 64);
        }
    }
    m
}

fn covers(outer: &Mask, inner: &Mask) -> bool {
    outer.iter().zip(inner).all(|(o, i)| i & !o == 0)
}

/// Searches sizes 1..=max for the lexicographically first set of
/// candidates whose intersection equals `target`.
fn search(cands: &[(Literal, Mask)], target: &Mask, max: usize) -> Option<Vec<Literal>> {
    fn go(
        cands: &[(Literal, Mask)],
        target: &Mask,
        start: usize,
        left: usize,
        acc: &Mask,
        picked: &mut Vec<usize>,
    ) -> bool {
        if left == 0 {
            return acc == target;
        }
        for c in start..cands.len() {
            let next: Mask = acc.iter().zip(&cands[c].1).map(|(a, b)| a & b).collect();
            picked.push(c);
            if go(cands, target, c + 1, left - 1, &next, picked) {
                return true;
            }
            picked.pop();
        }
        false
    }
    let words = target.len();
    for size in 1..=max.min(cands.len()) {
        let mut picked = Vec::new();
        if go(cands, target, 0, size, &vec![u64::MAX; words], &mut picked) {
            return Some(picked.into_iter().map(|i| cands[i].0.clone()).collect());
        }
    }
    None
}

fn definition_for(literals: &[(Literal, Mask)], target: &Mask, full: &Mask, max_literals: usize) -> Definition {
    if target == full {
        return Definition::Fact;
    }
    if target.iter().all(|w| *w == 0) {
        return Definition::Never;
    }
    let mut cands: Vec<(Literal, Mask)> = Vec::new();
    for (lit, m) in literals {
        if covers(m, target) && m != full && !cands.iter().any(|(_, c)| c == m) {
            cands.push((lit.clone(), m.clone()));
        }
    }
    match search(&cands, target, max_literals) {
        Some(body) => Definition::Rule(body),
        None => Definition::Opaque,
    }
}

/// Defines each predicate `a_i` in `predicates` by the smallest conjunction
/// (up to `max_literals`) of raw observation literals `<cell>_<kind>` or
/// their negations that agrees with the discretised encoder on every
/// observation. Ties go to the lexicographically smallest body.
pub fn define_invented_predicates(
    encoder: &DcEncoder,
    predicates: &[usize],
    observations: &[Vec<f64>],
    max_literals: usize,
) -> Result<Vec<PredicateDefinition>, PostTrainError> {
    if observations.is_empty() {
        return Err(PostTrainError::EmptyContext);
    }
    let mut enc = encoder.clone();
    enc.discretise();
    let n = observations.len();
    let words = n.div_ceil(64);
    let full = mask_of((0..n).map(|_| true), words);

    let raw: Vec<Vec<(String, bool)>> = observations.iter().map(|o| raw_atoms(o)).collect();
    let mut literals: Vec<(Literal, Mask)> = Vec::new();
    for (a, (name, _)) in raw[0].iter().enumerate() {
        let pos = mask_of(raw.iter().map(|r| r[a].1), words);
        let neg = mask_of(raw.iter().map(|r| !r[a].1), words);
        literals.push((Literal::pos(name.as_str()), pos));
        literals.push((Literal::neg(name.as_str()), neg));
    }
    literals.sort_by(|a, b| a.0.cmp(&b.0));

    let outputs: Vec<Vec<f64>> = observations.iter().map(|o| enc.forward_one(o)).collect::<Result<_, _>>()?;
    let mut defs = Vec::new();
    for &p in predicates {
        if p >= enc.predicates() {
            return Err(PostTrainError::Mismatch(format!("encoder has no predicate {p}")));
        }
        let target = mask_of(outputs.iter().map(|o| o[p] > 0.0), words);
        let definition = definition_for(&literals, &target, &full, max_literals);
        defs.push(PredicateDefinition { predicate: Atom::new(format!("a_{p}")), definition });
    }
    Ok(defs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{reference_encoder, DcVariant, DoorCorridor};

    #[test]
    fn closed_door_ahead() {
        let obs = DoorCorridor::reachable_observations(DcVariant::Dc);
        let defs = define_invented_predicates(&reference_encoder(), &[3], &obs, 4).unwrap();
        assert_eq!(defs[0].definition, Definition::Rule(vec![Literal::pos("one_step_ahead_closed_door")]));
    }

    #[test]
    fn unused_predicate_is_never_true() {
        let obs = DoorCorridor::reachable_observations(DcVariant::Dc);
        let defs = define_invented_predicates(&reference_encoder(), &[0], &obs, 4).unwrap();
        assert_eq!(defs[0].definition, Definition::Never);
        assert_eq!(defs[0].rule(), None);
    }

    #[test]
    fn planted_pair_is_recovered() {
        // Eight observations; x_b is bit b of the observation index.
        let words = 1;
        let mut literals = Vec::new();
        for b in 0..3 {
            literals.push((Literal::pos(format!("x{b}")), mask_of((0..8).map(|i| i >> b & 1 == 1), words)));
            literals.push((Literal::neg(format!("x{b}")), mask_of((0..8).map(|i| i >> b & 1 == 0), words)));
        }
        literals.sort_by(|a, b| a.0.cmp(&b.0));
        let full = mask_of((0..8).map(|_| true), words);
        let target = mask_of((0..8).map(|i| i >> 1 & 1 == 1 && i >> 2 & 1 == 0), words);
        assert_eq!(
            definition_for(&literals, &target, &full, 4),
            Definition::Rule(vec![Literal::pos("x1"), Literal::neg("x2")])
        );
        let odd_parity = mask_of((0..8).map(|i: u32| i.count_ones() % 2 == 1), words);
        assert_eq!(definition_for(&literals, &odd_parity, &full, 4), Definition::Opaque);
        assert_eq!(definition_for(&literals, &full, &full, 4), Definition::Fact);
    }
}
