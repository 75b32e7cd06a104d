use std::collections::{BTreeMap, BTreeSet};

use super::ast::{AspProgram, Atom, NormalRule, Valuation};
use super::LogicError;

/// Assigns each atom a stratum so that positive dependencies never point to
/// a higher stratum and negative ones always point to a strictly lower one.
fn stratify(rules: &[NormalRule], universe: &BTreeSet<Atom>) -> Result<BTreeMap<Atom, usize>, LogicError> {
    let mut stratum: BTreeMap<Atom, usize> = universe.iter().map(|a| (a.clone(), 0)).collect();
    let limit = universe.len();
    loop {
        let mut changed = false;
        for r in rules {
            let mut need = stratum[&r.head];
            for l in &r.body {
                let s = stratum[&l.atom] + usize::from(l.negated);
                need = need.max(s);
            }
            if need > stratum[&r.head] {
                if need > limit {
                    return Err(LogicError::Unstratified(r.head.to_string()));
                }
                stratum.insert(r.head.clone(), need);
                changed = true;
            }
        }
        if !changed {
            return Ok(stratum);
        }
    }
}

/// Unique stable model of a stratified normal program together with `facts`,
/// computed stratum by stratum as a least fixpoint. The valuation covers
/// every atom of the program and of `facts`.
pub fn asp_evaluate(program: &AspProgram, facts: &BTreeSet<Atom>) -> Result<Valuation, LogicError> {
    let mut universe: BTreeSet<Atom> = program.atoms().into_iter().collect();
    universe.extend(facts.iter().cloned());
    let strata = stratify(&program.rules, &universe)?;
    let top = strata.values().copied().max().unwrap_or(0);

    let mut truth: BTreeSet<Atom> = facts.clone();
    for s in 0..=top {
        let rules: Vec<&NormalRule> = program.rules.iter().filter(|r| strata[&r.head] == s).collect();
        loop {
            let mut changed = false;
            for r in &rules {
                if truth.contains(&r.head) {
                    continue;
                }
                if r.body.iter().all(|l| l.holds(truth.contains(&l.atom))) {
                    truth.insert(r.head.clone());
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
    Ok(universe.into_iter().map(|a| {
        let t = truth.contains(&a);
        (a, t)
    }).collect())
}

/// The single true action atom, by position in `actions`.
pub fn asp_select_action(valuation: &Valuation, actions: &[Atom]) -> Result<usize, LogicError> {
    let on: Vec<usize> =
        actions.iter().enumerate().filter(|(_, a)| valuation.get(*a).copied().unwrap_or(false)).map(|(i, _)| i).collect();
    match on.as_slice() {
        [i] => Ok(*i),
        _ => Err(LogicError::NotExactlyOneAction {
            true_actions: on.iter().map(|&i| actions[i].to_string()).collect(),
        }),
    }
}
