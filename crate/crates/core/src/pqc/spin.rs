use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result, StpError};
use crate::qstate::{PairOutcome, StateVector};
use crate::rng::StreamRng;

/// How a total-spin measurement is carried out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinMode {
    /// Sample the sector from exact weights and project onto it.
    Exact,
    /// Random-pair s/t sampling and inversion of the triplet frequency.
    #[default]
    Protocol,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinEstimate {
    pub twice_s: usize,
    pub n_meas: usize,
    pub triplet_frequency: f64,
}

pub fn default_n_meas(m: usize) -> usize {
    20 * m * m
}

/// `P(t) = (S(S+1) - 3M/4) / (M(M-1)) + 3/4` for a random pair.
pub fn triplet_probability(m: usize, twice_s: usize) -> f64 {
    let mf = m as f64;
    let s = twice_s as f64 / 2.0;
    (s * (s + 1.0) - 0.75 * mf) / (mf * (mf - 1.0)) + 0.75
}

/// Inverse of [`triplet_probability`]: the `S(S+1)` implied by `p`.
pub fn spin_sq_from_triplet(m: usize, p: f64) -> f64 {
    let mf = m as f64;
    (p - 0.75) * mf * (mf - 1.0) + 0.75 * mf
}

/// Admissible `2S` whose predicted triplet probability is closest to `freq`.
pub fn round_twice_spin(m: usize, freq: f64) -> usize {
    round_twice_spin_in(m, freq, (0, m))
}

/// As [`round_twice_spin`] but only over `2S` in `range` (inclusive).
pub fn round_twice_spin_in(m: usize, freq: f64, range: (usize, usize)) -> usize {
    let lo = range.0.max(m % 2);
    (lo..=range.1.min(m))
        .filter(|ts| (m - ts).is_multiple_of(2))
        .min_by(|&a, &b| {
            let da = (triplet_probability(m, a) - freq).abs();
            let db = (triplet_probability(m, b) - freq).abs();
            da.total_cmp(&db)
        })
        .unwrap_or(lo)
}

/// `n_meas` random-pair s/t measurements inside `subset`, then rounding.
pub fn estimate_total_spin(
    state: &mut StateVector,
    subset: &[usize],
    n_meas: usize,
    rng: &mut StreamRng,
) -> Result<SpinEstimate> {
    estimate_total_spin_in(state, subset, n_meas, (0, subset.len()), rng)
}

/// Estimation when the spin is already known to lie in `range`, for
/// example from the triangle rule on measured children.
pub fn estimate_total_spin_in(
    state: &mut StateVector,
    subset: &[usize],
    n_meas: usize,
    range: (usize, usize),
    rng: &mut StreamRng,
) -> Result<SpinEstimate> {
    let m = subset.len();
    if m < 2 {
        return Err(precondition("spin estimation needs at least two qubits"));
    }
    let mut t = 0usize;
    for _ in 0..n_meas {
        let (a, b) = rng.distinct_pair(m);
        if state.measure_pair(subset[a], subset[b], rng)? == PairOutcome::Triplet {
            t += 1;
        }
    }
    let freq = if n_meas == 0 { 0.75 } else { t as f64 / n_meas as f64 };
    Ok(SpinEstimate { twice_s: round_twice_spin_in(m, freq, range), n_meas, triplet_frequency: freq })
}

/// Total-spin measurement of `subset` in either mode. Singletons are
/// spin 1/2 without any measurement.
pub fn measure_total_spin(
    state: &mut StateVector,
    subset: &[usize],
    mode: SpinMode,
    n_meas: Option<usize>,
    rng: &mut StreamRng,
) -> Result<SpinEstimate> {
    let m = subset.len();
    if m == 0 {
        return Err(precondition("empty subset"));
    }
    if m == 1 {
        return Ok(SpinEstimate { twice_s: 1, n_meas: 0, triplet_frequency: 0.0 });
    }
    match mode {
        SpinMode::Protocol => estimate_total_spin(state, subset, n_meas.unwrap_or_else(|| default_n_meas(m)), rng),
        SpinMode::Exact => {
            let sectors: Vec<usize> = (m % 2..=m).step_by(2).collect();
            let weights: Vec<f64> =
                sectors.iter().map(|&ts| state.spin_sector_weight(subset, ts)).collect::<Result<_>>()?;
            let total: f64 = weights.iter().sum();
            let mut u = rng.uniform() * total;
            let mut pick = *sectors.last().expect("at least one sector");
            for (&ts, &w) in sectors.iter().zip(&weights) {
                if u < w {
                    pick = ts;
                    break;
                }
                u -= w;
            }
            state.project_spin_sector(subset, pick)?;
            Ok(SpinEstimate { twice_s: pick, n_meas: 0, triplet_frequency: triplet_probability(m, pick) })
        }
    }
}

/// Fixed singlet pairs plus a totally symmetric remainder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub pairs: Vec<(usize, usize)>,
    pub symmetric: Vec<usize>,
    pub twice_s: usize,
}

/// Repeatedly measures random pairs of the remainder until one is a
/// singlet, and stops once the remainder's spin is maximal.
pub fn canonical_form(
    state: &mut StateVector,
    subset: &[usize],
    rng: &mut StreamRng,
    mode: SpinMode,
    n_meas_factor: usize,
    max_pair_attempts: u64,
) -> Result<CanonicalForm> {
    if subset.is_empty() {
        return Err(precondition("canonical form of an empty set"));
    }
    let mut rem = subset.to_vec();
    let mut pairs = Vec::new();
    while rem.len() >= 2 {
        let m = rem.len();
        let est = measure_total_spin(state, &rem, mode, Some(n_meas_factor * m * m), rng)?;
        if est.twice_s == m {
            break;
        }
        let mut found = false;
        for _ in 0..max_pair_attempts {
            let (a, b) = rng.distinct_pair(m);
            if state.measure_pair(rem[a], rem[b], rng)?.is_singlet() {
                pairs.push((rem[a], rem[b]));
                let (hi, lo) = if a > b { (a, b) } else { (b, a) };
                rem.remove(hi);
                rem.remove(lo);
                found = true;
                break;
            }
        }
        if !found {
            return Err(StpError::RetryExhausted { what: "canonical_form", attempts: max_pair_attempts });
        }
    }
    let twice_s = rem.len();
    Ok(CanonicalForm { pairs, symmetric: rem, twice_s })
}
