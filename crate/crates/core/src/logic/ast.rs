use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Ground atom such as `in_s_1`, `conj_3` or `action(left)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom(pub String);

impl Atom {
    pub fn new(name: impl Into<String>) -> Self {
        Atom(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Atom {
    fn from(s: &str) -> Self {
        Atom(s.to_string())
    }
}

/// Atom or its negation as failure.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

impl Literal {
    pub fn pos(atom: impl Into<Atom>) -> Self {
        Self { atom: atom.into(), negated: false }
    }

    pub fn neg(atom: impl Into<Atom>) -> Self {
        Self { atom: atom.into(), negated: true }
    }

    pub fn holds(&self, truth: bool) -> bool {
        truth != self.negated
    }
}

impl From<String> for Atom {
    fn from(s: String) -> Self {
        Atom(s)
    }
}

/// `head :- body.`; a fact when the body is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalRule {
    pub head: Atom,
    pub body: Vec<Literal>,
}

impl NormalRule {
    pub fn new(head: impl Into<Atom>, body: Vec<Literal>) -> Self {
        Self { head: head.into(), body }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspProgram {
    pub rules: Vec<NormalRule>,
}

impl AspProgram {
    pub fn new(rules: Vec<NormalRule>) -> Self {
        Self { rules }
    }

    /// Every atom mentioned anywhere in the program.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut v: Vec<Atom> =
            self.rules.iter().flat_map(|r| std::iter::once(r.head.clone()).chain(r.body.iter().map(|l| l.atom.clone()))).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// `p1::a1 ; … ; pn::an :- body.`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedDisjunction {
    pub choices: Vec<(f64, Atom)>,
    pub body: Vec<Literal>,
}

/// Conjunction rules plus mutually exclusive annotated disjunctions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblogProgram {
    pub rules: Vec<NormalRule>,
    pub disjunctions: Vec<AnnotatedDisjunction>,
}

/// Truth assignment over a program's atom universe.
pub type Valuation = BTreeMap<Atom, bool>;
