use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::histogram::Histogram;
use super::sector::SectorState;
use super::{random_measurements, ExperimentConfig};
use crate::error::{precondition, Result, StpError};
use crate::qstate::{PairOutcome, StateVector};
use crate::rng::StreamRng;

pub const DEFAULT_MAX_MEAS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetangleStep {
    /// Original spin labels.
    pub pair: (usize, usize),
    pub outcome: PairOutcome,
}

#[derive(Clone, Debug)]
pub struct DetangleResult {
    /// Original labels of the spins left, ascending.
    pub survivors: Vec<usize>,
    /// State of the survivors, qubit `k` being `survivors[k]`.
    pub state: StateVector,
    pub steps: Vec<DetangleStep>,
}

impl DetangleResult {
    /// Singlet probability on the first two survivors.
    pub fn p_singlet_12(&self) -> Result<f64> {
        if self.state.n_qubits() < 2 {
            return Err(precondition("fewer than two survivors"));
        }
        self.state.pair_weight(0, 1, PairOutcome::Singlet)
    }
}

/// Measures random pairs among the remaining spins and drops every pair
/// found in a singlet, until at most four spins remain.
pub fn detangle(state: &StateVector, rng: &mut StreamRng, max_meas: u64) -> Result<DetangleResult> {
    let seed = rng.next_u64();
    detangle_split(state, &mut StreamRng::new(seed, 0), &mut StreamRng::new(seed, 1), max_meas)
}

/// As [`detangle`], with pair choices and Born outcomes on separate streams.
pub fn detangle_split(
    state: &StateVector,
    pair_rng: &mut StreamRng,
    outcome_rng: &mut StreamRng,
    max_meas: u64,
) -> Result<DetangleResult> {
    let start = SectorState::from_state(state)?;
    let (survivors, steps, cur) = detangle_sector(&start, pair_rng, outcome_rng, max_meas)?;
    Ok(DetangleResult { survivors, state: cur.to_state()?, steps })
}

pub(crate) fn detangle_sector(
    start: &SectorState,
    pair_rng: &mut StreamRng,
    outcome_rng: &mut StreamRng,
    max_meas: u64,
) -> Result<(Vec<usize>, Vec<DetangleStep>, SectorState)> {
    let mut cur = start.clone();
    let mut labels: Vec<usize> = (0..cur.n_qubits()).collect();
    let mut steps = Vec::new();
    while labels.len() > 4 {
        if steps.len() as u64 >= max_meas {
            return Err(StpError::RetryExhausted { what: "detangle", attempts: max_meas });
        }
        let (a, b) = pair_rng.distinct_pair(labels.len());
        let (a, b) = (a.min(b), a.max(b));
        let outcome = cur.measure_pair(a, b, outcome_rng)?;
        steps.push(DetangleStep { pair: (labels[a], labels[b]), outcome });
        if outcome.is_singlet() {
            cur = cur.drop_singlet(a, b)?;
            labels.remove(b);
            labels.remove(a);
        }
    }
    Ok((labels, steps, cur))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetangleHistograms {
    pub config: ExperimentConfig,
    /// `P(S)` on the first two survivors, one per (sequence, run).
    pub samples: Vec<f64>,
    pub s_view: Histogram,
    pub t_view: Histogram,
}

/// For each sequence: `n_meas` random measurements from a dimerization,
/// then `n_runs` independent detanglings of that state.
pub fn detangle_histogram(cfg: &ExperimentConfig) -> Result<DetangleHistograms> {
    cfg.validate()?;
    if cfg.n_spins < 4 {
        return Err(precondition("detangling needs at least 4 spins"));
    }
    let base = StreamRng::for_label(cfg.master_seed, "experiments/detangle");
    let mut samples = Vec::with_capacity(cfg.n_sequences * cfg.n_runs);
    for seq in 0..cfg.n_sequences {
        let mut rng = base.trial(seq as u64);
        let mut state = SectorState::dimerization(cfg.n_spins)?;
        random_measurements(&mut state, cfg.n_meas, &mut rng)?;
        for _ in 0..cfg.n_runs {
            let seed = rng.next_u64();
            let (_, _, last) =
                detangle_sector(&state, &mut StreamRng::new(seed, 0), &mut StreamRng::new(seed, 1), DEFAULT_MAX_MEAS)?;
            samples.push(last.singlet_weight(0, 1));
        }
    }
    let s_view = Histogram::from_samples(&samples, cfg.bins)?;
    let t_view = s_view.mirrored();
    Ok(DetangleHistograms { config: cfg.clone(), samples, s_view, t_view })
}
