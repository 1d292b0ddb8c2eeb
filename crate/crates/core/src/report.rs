use serde::{Deserialize, Serialize};

use crate::model::AlternativeSet;
use crate::rational::{serde_text, Rational};
use crate::subset::Subset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// Row sum at one budget differs from the row sum at another.
    Marginality,
    NegativePolynomial,
    Recursivity,
    FlowConservation,
    CellMismatch,
    MSetMismatch,
}

/// One violated identity: `lhs` should equal `rhs` (or, for negativity, `lhs ≥ rhs = 0`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: WitnessKind,
    pub alternatives: Vec<String>,
    pub sets: Vec<Vec<String>>,
    #[serde(with = "serde_text")]
    pub lhs: Rational,
    #[serde(with = "serde_text")]
    pub rhs: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
}

impl AxiomReport {
    pub fn from_witnesses(witnesses: Vec<Witness>) -> Self {
        let verdict = if witnesses.is_empty() { Verdict::Pass } else { Verdict::Fail };
        AxiomReport { verdict, witnesses }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

/// Labelled tuple builder for witnesses.
#[derive(Default)]
pub(crate) struct Tuple {
    alternatives: Vec<String>,
    sets: Vec<Vec<String>>,
}

impl Tuple {
    pub fn new() -> Self {
        Tuple::default()
    }

    pub fn alt(mut self, set: &AlternativeSet, i: usize) -> Self {
        self.alternatives.push(set.label(i).to_string());
        self
    }

    pub fn set(mut self, ground: &AlternativeSet, s: Subset) -> Self {
        self.sets.push(ground.labels_of(s));
        self
    }

    pub fn witness(self, kind: WitnessKind, lhs: Rational, rhs: Rational) -> Witness {
        Witness { kind, alternatives: self.alternatives, sets: self.sets, lhs, rhs }
    }
}
