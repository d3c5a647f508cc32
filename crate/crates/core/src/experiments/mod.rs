//! Random s/t sequence statistics: triplet profiles, detangling, the
//! cos^2 reference and STSample instances.

mod detangle;
mod histogram;
mod sector;
mod stsample;

#[cfg(test)]
mod tests;

pub use detangle::{detangle, detangle_histogram, detangle_split, DetangleHistograms, DetangleResult, DetangleStep};
pub use histogram::{arcsine_cdf, cos2_reference, ks_distance, Cos2Reference, Histogram};
pub use stsample::{
    stsample_conditional, stsample_generate, stsample_generate_streams, stsample_replay_prefix, StConditional,
    StInstance,
};

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};
use crate::qstate::{PairOutcome, StateVector};
use crate::rng::StreamRng;
use sector::SectorState;

pub const PROFILE_MAX_SPINS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_spins: usize,
    pub n_meas: usize,
    pub n_sequences: usize,
    pub n_runs: usize,
    pub bins: usize,
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// 10 detangling runs on each of 1000 sequences of 1000 measurements.
    pub fn detangle_default(n_spins: usize, master_seed: u64) -> Self {
        Self { n_spins, n_meas: 1000, n_sequences: 1000, n_runs: 10, bins: 100, master_seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_spins.is_multiple_of(2) || self.n_spins < 2 {
            return Err(precondition("spin count must be even and at least 2"));
        }
        if self.bins < 2 {
            return Err(precondition("need at least 2 bins"));
        }
        Ok(())
    }
}

fn check_spins(n: usize, max: usize) -> Result<()> {
    if !n.is_multiple_of(2) || n < 2 {
        return Err(precondition("spin count must be even and at least 2"));
    }
    if n > max {
        return Err(precondition(format!("at most {max} spins")));
    }
    Ok(())
}

/// Singlet dimerization `(0,1), (2,3), ...` on `n` spins.
pub fn dimerization(n: usize) -> Result<StateVector> {
    StateVector::singlet_dimerization(n / 2)
}

pub(crate) fn random_measurements(
    state: &mut SectorState,
    n_meas: usize,
    rng: &mut StreamRng,
) -> Result<Vec<(usize, usize, PairOutcome)>> {
    let n = state.n_qubits();
    let mut out = Vec::with_capacity(n_meas);
    for _ in 0..n_meas {
        let (a, b) = rng.distinct_pair(n);
        let (a, b) = (a.min(b), a.max(b));
        let o = state.measure_pair(a, b, rng)?;
        out.push((a, b, o));
    }
    Ok(out)
}

/// `n_meas` Born-rule s/t measurements on uniformly random pairs, starting
/// from a dimerization. Returns the state and the measurement record.
pub fn random_sequence_state(
    n_spins: usize,
    n_meas: usize,
    rng: &mut StreamRng,
) -> Result<(StateVector, Vec<(usize, usize, PairOutcome)>)> {
    check_spins(n_spins, PROFILE_MAX_SPINS)?;
    let mut state = SectorState::dimerization(n_spins)?;
    let record = random_measurements(&mut state, n_meas, rng)?;
    Ok((state.to_state()?, record))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairProbability {
    pub i: usize,
    pub j: usize,
    pub p_triplet: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub n_spins: usize,
    pub n_meas: usize,
    pub measurements: Vec<(usize, usize, PairOutcome)>,
    /// All `i < j` in lexicographic order.
    pub rows: Vec<PairProbability>,
}

impl Profile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pair_i,pair_j,p_triplet\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{:.17e}\n", r.i, r.j, r.p_triplet));
        }
        s
    }

    pub fn fraction_in(&self, lo: f64, hi: f64) -> f64 {
        let k = self.rows.iter().filter(|r| (lo..=hi).contains(&r.p_triplet)).count();
        k as f64 / self.rows.len().max(1) as f64
    }

    /// Pairs whose triplet probability is within `tol` of 0 or 1.
    pub fn extremes(&self, tol: f64) -> usize {
        self.rows.iter().filter(|r| r.p_triplet <= tol || r.p_triplet >= 1.0 - tol).count()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (i, j) = (i.min(j), i.max(j));
        self.rows.iter().find(|r| r.i == i && r.j == j).map(|r| r.p_triplet)
    }
}

/// Measures `n_meas` random pairs from a dimerization, then records the
/// exact triplet probability of every pair.
pub fn random_sequence_profile(n_spins: usize, n_meas: usize, rng: &mut StreamRng) -> Result<Profile> {
    check_spins(n_spins, PROFILE_MAX_SPINS)?;
    let mut state = SectorState::dimerization(n_spins)?;
    let measurements = random_measurements(&mut state, n_meas, rng)?;
    let mut rows = Vec::with_capacity(n_spins * (n_spins - 1) / 2);
    for i in 0..n_spins {
        for j in i + 1..n_spins {
            let p_triplet = state.pair_weight(i, j, PairOutcome::Triplet);
            rows.push(PairProbability { i, j, p_triplet });
        }
    }
    Ok(Profile { n_spins, n_meas, measurements, rows })
}
