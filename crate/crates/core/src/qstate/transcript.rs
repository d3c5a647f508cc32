use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

use super::PairOutcome;
use crate::error::{Result, StpError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpTag {
    #[serde(rename = "s")]
    S,
    #[serde(rename = "t")]
    T,
    #[serde(rename = "px")]
    Px,
    #[serde(rename = "py")]
    Py,
    #[serde(rename = "pz")]
    Pz,
    #[serde(rename = "heis")]
    Heis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "S")]
    Singlet,
    #[serde(rename = "T")]
    Triplet,
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl From<PairOutcome> for Outcome {
    fn from(o: PairOutcome) -> Self {
        match o {
            PairOutcome::Singlet => Outcome::Singlet,
            PairOutcome::Triplet => Outcome::Triplet,
        }
    }
}

impl Outcome {
    pub fn from_sign(sign: i8) -> Self {
        if sign >= 0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }
}

/// One measurement, post-selection or Heisenberg step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub i: usize,
    pub op: OpTag,
    pub pair: [usize; 2],
    pub out: Outcome,
    /// Branch probability (for `heis`, the squared norm ratio).
    pub w: f64,
    pub forced: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub steps: Vec<Step>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, op: OpTag, pair: [usize; 2], out: Outcome, w: f64, forced: bool) {
        let i = self.steps.len();
        self.steps.push(Step { i, op, pair, out, w, forced });
    }

    /// Product of all recorded branch weights.
    pub fn weight_product(&self) -> f64 {
        self.steps.iter().map(|s| s.w).product()
    }

    pub fn pair_outcomes(&self) -> impl Iterator<Item = PairOutcome> + '_ {
        self.steps.iter().filter_map(|s| match s.out {
            Outcome::Singlet => Some(PairOutcome::Singlet),
            Outcome::Triplet => Some(PairOutcome::Triplet),
            _ => None,
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for s in &self.steps {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut steps = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let s: Step = serde_json::from_str(&line)?;
            if s.i != steps.len() {
                return Err(StpError::Invalid(format!(
                    "transcript step index {} out of order (expected {})",
                    s.i,
                    steps.len()
                )));
            }
            steps.push(s);
        }
        Ok(Self { steps })
    }
}
