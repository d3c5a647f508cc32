//! s/t projector sequences acting on `spin_0(2N)` through ancilla pairs.
//!
//! Sites `c_k` are qubit `k-1`, ancillas `a_k` are qubit `2N+k-1`.
//! Sequences are written as tuples `(P_k, ..., P_1)` and applied
//! rightmost first.

mod basis;
mod checks;
mod linalg;
mod named;
mod operator;

#[cfg(test)]
mod tests;

pub use basis::{noncrossing_matchings, permutation_rep, spin0_basis, SubspaceBasis};
pub use checks::{
    is_equiangular_pair, is_equiangular_sequence, is_no_leakage, recovery_force, recovery_round_law,
    signed_permutation_test, EquiangularPair, LeakageReport, SequenceReport, SignedPermutation,
};
pub use linalg::{commutator, commutator_abab, distance_to_identity, eigenvalues, logm, match_eigenvalues, MatrixNorm};
pub use named::{
    appendix_d_o1, appendix_d_o2, nested_distances, printed_o1, printed_o2, random_sequence, relaxed_two_ancilla, search_lemma,
    six_ancilla, four_ancilla_order12, swap_by_teleport, verify_appendix_d, AppendixDReport, SearchReport,
};
pub use operator::{order_of, sequence_to_operator, SequenceOperator};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result, StpError};
use crate::qstate::PairOutcome;

/// A computational spin `c_k` or an ancilla `a_k`, both 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Site {
    C(usize),
    A(usize),
}

impl Site {
    pub fn qubit(self, n_comp: usize) -> usize {
        match self {
            Site::C(k) => k - 1,
            Site::A(k) => n_comp + k - 1,
        }
    }

    fn check(self, n_comp: usize, n_anc: usize) -> Result<()> {
        let ok = match self {
            Site::C(k) => (1..=n_comp).contains(&k),
            Site::A(k) => (1..=n_anc).contains(&k),
        };
        if ok {
            Ok(())
        } else {
            Err(precondition(format!("site {self} out of range")))
        }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::C(k) => write!(f, "c{k}"),
            Site::A(k) => write!(f, "a{k}"),
        }
    }
}

impl FromStr for Site {
    type Err = StpError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || StpError::Invalid(format!("bad site name {s:?}"));
        let (head, num) = s.split_at_checked(1).ok_or_else(bad)?;
        let k: usize = num.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match head {
            "c" => Ok(Site::C(k)),
            "a" => Ok(Site::A(k)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Site {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Site {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "s")]
    S,
    #[serde(rename = "t")]
    T,
}

impl Kind {
    pub fn outcome(self) -> PairOutcome {
        match self {
            Kind::S => PairOutcome::Singlet,
            Kind::T => PairOutcome::Triplet,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProjectorSpec {
    pub kind: Kind,
    pub pair: (Site, Site),
}

impl ProjectorSpec {
    pub fn s(a: Site, b: Site) -> Self {
        Self { kind: Kind::S, pair: (a, b) }
    }

    pub fn t(a: Site, b: Site) -> Self {
        Self { kind: Kind::T, pair: (a, b) }
    }
}

impl fmt::Display for ProjectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            Kind::S => 's',
            Kind::T => 't',
        };
        write!(f, "{k}_{},{}", self.pair.0, self.pair.1)
    }
}

fn yes() -> bool {
    true
}

/// Items in tuple order, so `items[0]` is applied last. The caps are the
/// product of ancilla-pair singlet projectors around the items.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorSequence {
    pub n_comp: usize,
    pub n_anc: usize,
    pub items: Vec<ProjectorSpec>,
    #[serde(default = "yes")]
    pub cap_first: bool,
    #[serde(default = "yes")]
    pub cap_last: bool,
    /// Apply `items` left to right instead.
    #[serde(default)]
    pub reversed: bool,
}

/// One application step: projectors on disjoint or identical pairs applied together.
pub type Step = Vec<(usize, usize, PairOutcome)>;

impl ProjectorSequence {
    pub fn new(n_comp: usize, n_anc: usize, items: Vec<ProjectorSpec>) -> Result<Self> {
        let s = Self { n_comp, n_anc, items, cap_first: true, cap_last: true, reversed: false };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_comp.is_multiple_of(2) || !self.n_anc.is_multiple_of(2) {
            return Err(precondition("spin and ancilla counts must be even"));
        }
        for it in &self.items {
            it.pair.0.check(self.n_comp, self.n_anc)?;
            it.pair.1.check(self.n_comp, self.n_anc)?;
            if it.pair.0 == it.pair.1 {
                return Err(precondition(format!("projector {it} acts on one site")));
            }
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_comp + self.n_anc
    }

    /// Ancilla pairs `(a_1,a_2), (a_3,a_4), ...` as qubits.
    pub fn ancilla_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n_anc / 2).map(|k| (self.n_comp + 2 * k, self.n_comp + 2 * k + 1)).collect()
    }

    fn cap(&self) -> Step {
        self.ancilla_pairs().into_iter().map(|(a, b)| (a, b, PairOutcome::Singlet)).collect()
    }

    /// Steps in application order, caps included.
    pub fn steps(&self) -> Vec<Step> {
        self.labelled_steps().into_iter().map(|(_, s)| s).collect()
    }

    /// As [`steps`](Self::steps) with a printable name for each.
    pub fn labelled_steps(&self) -> Vec<(String, Step)> {
        let mut out = Vec::new();
        if self.cap_first && self.n_anc > 0 {
            out.push(("cap".to_string(), self.cap()));
        }
        let conv = |it: &ProjectorSpec| {
            let step = vec![(it.pair.0.qubit(self.n_comp), it.pair.1.qubit(self.n_comp), it.kind.outcome())];
            (it.to_string(), step)
        };
        if self.reversed {
            out.extend(self.items.iter().map(conv));
        } else {
            out.extend(self.items.iter().rev().map(conv));
        }
        if self.cap_last && self.n_anc > 0 {
            out.push(("cap".to_string(), self.cap()));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let seq: Self = serde_json::from_str(s)?;
        seq.validate()?;
        Ok(seq)
    }
}
