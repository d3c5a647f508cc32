use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{double_singlet, negative_resource_by_projection, reduce_epsilon_with, resource_by_projection, E, F};
use super::apply_heis_with;
use crate::error::{precondition, Result, StpError};
use crate::qstate::StateVector;
use crate::rng::StreamRng;

/// `eps[0] = 4/3`, `eps[i+1] = eps[i]^2 / 4`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub eps: Vec<f64>,
    pub neg_base: f64,
}

impl EpsilonSchedule {
    pub fn new(len: usize) -> Self {
        let mut eps = Vec::with_capacity(len);
        let mut e = 4.0 / 3.0;
        for _ in 0..len {
            eps.push(e);
            e = e * e / 4.0;
        }
        Self { eps, neg_base: -4.0 / 3.0 }
    }

    /// Long enough that the last entry is below `x`.
    pub fn reaching(x: f64) -> Self {
        let mut s = Self::new(1);
        while *s.eps.last().expect("nonempty") >= x && s.eps.len() < 64 {
            s = Self::new(s.eps.len() + 1);
        }
        s
    }

    /// First index whose value lies in `[x^2, 4x/3]`, if any.
    pub fn first_in_interval(&self, x: f64) -> Option<usize> {
        self.eps.iter().position(|&e| e >= x * x && e <= 4.0 * x / 3.0)
    }

    pub fn value(&self, entry: EpsEntry) -> f64 {
        match entry {
            EpsEntry::Pos(i) => self.eps[i],
            EpsEntry::Neg(0) => self.neg_base,
            EpsEntry::Neg(i) => -self.eps[i],
        }
    }
}

/// The resource `+eps_i` or `-eps_i`. Level 0 is a triplet projection on
/// `(E,F)` or on the crossed pair `(C,F)`. One recursion step maps
/// `(e1, e2)` to `-e1 e2 / 4`, so level `i+1` of either sign combines two
/// level-`i` resources of opposite or equal sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EpsEntry {
    Pos(usize),
    Neg(usize),
}

impl EpsEntry {
    pub fn level(self) -> usize {
        match self {
            EpsEntry::Pos(i) | EpsEntry::Neg(i) => i,
        }
    }

    /// Post-selections spent building one resource of this kind.
    pub fn build_ops(self) -> u64 {
        (0..self.level()).fold(1, |acc, _| 2 * acc + 5)
    }

    /// Post-selections for one application to a target pair.
    pub fn apply_ops(self) -> u64 {
        self.build_ops() + 2
    }
}

/// `y` with `1 + x S.S` proportional to `exp(y S.S)`: the log of the
/// triplet/singlet eigenvalue ratio. `None` for the projector `x = 4/3`.
pub fn log_ratio(x: f64) -> Option<f64> {
    let (t, s) = (1.0 + x / 4.0, 1.0 - 0.75 * x);
    if s <= 0.0 || t <= 0.0 {
        None
    } else {
        Some((t / s).ln())
    }
}

/// Inverse of [`log_ratio`].
pub fn eps_from_log_ratio(y: f64) -> f64 {
    let r = (-y).exp();
    4.0 * (1.0 - r) / (3.0 + r)
}

/// `power` applications of the resource `entry`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPlan {
    pub target: f64,
    pub delta: f64,
    pub entry: Option<EpsEntry>,
    pub base_eps: f64,
    pub power: u64,
    pub effective_eps: f64,
    pub ops: u64,
}

impl EpsilonPlan {
    pub fn is_empty(&self) -> bool {
        self.power == 0
    }
}

/// Cheapest `(entry, power)` whose composed operation is within `delta`
/// of `1 + target S.S`, using log bookkeeping on the two sectors.
pub fn approx_epsilon_plan(target: f64, delta: f64) -> Result<EpsilonPlan> {
    if !(-1.0..=1.0).contains(&target) {
        return Err(StpError::Invalid(format!("target eps {target} outside [-1, 1]")));
    }
    if !(delta > 0.0) {
        return Err(StpError::Invalid(format!("delta must be positive, got {delta}")));
    }
    if target == 0.0 {
        return Ok(EpsilonPlan { target, delta, entry: None, base_eps: 0.0, power: 0, effective_eps: 0.0, ops: 0 });
    }
    let sched = EpsilonSchedule::reaching(delta / 2.0);
    let entries: Vec<EpsEntry> = if target > 0.0 {
        (0..sched.eps.len()).map(EpsEntry::Pos).collect()
    } else {
        (0..sched.eps.len()).map(EpsEntry::Neg).collect()
    };
    let y_target = log_ratio(target).expect("target in [-1, 1]");
    let mut best: Option<EpsilonPlan> = None;
    for entry in entries {
        let x = sched.value(entry);
        let (power, eff) = match log_ratio(x) {
            None => (1, x),
            Some(y) => {
                let k = (y_target / y).round().max(1.0);
                if k > 1e15 {
                    continue;
                }
                let eff = if k == 1.0 { x } else { eps_from_log_ratio(k * y) };
                (k as u64, eff)
            }
        };
        if (eff - target).abs() > delta {
            continue;
        }
        let ops = power * entry.apply_ops();
        let better = best.as_ref().is_none_or(|b| (ops, power) < (b.ops, b.power));
        if better {
            best = Some(EpsilonPlan { target, delta, entry: Some(entry), base_eps: x, power, effective_eps: eff, ops });
        }
    }
    best.ok_or_else(|| StpError::Numerical(format!("no plan reaches eps {target} within {delta}")))
}

/// Builds resources by post-selection only and caches one copy of each.
#[derive(Clone, Debug, Default)]
pub struct ResourceFactory {
    cache: BTreeMap<EpsEntry, StateVector>,
    pub post_selections: u64,
}

impl ResourceFactory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn resource(&mut self, entry: EpsEntry, rng: &mut StreamRng) -> Result<StateVector> {
        if let Some(s) = self.cache.get(&entry) {
            return Ok(s.clone());
        }
        let mut s = match entry {
            EpsEntry::Pos(0) => resource_by_projection()?,
            EpsEntry::Neg(0) => negative_resource_by_projection()?,
            EpsEntry::Pos(i) | EpsEntry::Neg(i) => {
                let pos = self.resource(EpsEntry::Pos(i - 1), rng)?;
                let other = match entry {
                    EpsEntry::Pos(_) => self.resource(EpsEntry::Neg(i - 1), rng)?,
                    EpsEntry::Neg(_) => pos.clone(),
                };
                let mut s = double_singlet()?;
                reduce_epsilon_with(&mut s, E, F, &pos, &other, rng)?;
                s
            }
        };
        self.post_selections += s.transcript().len() as u64;
        s.normalize()?;
        s.clear_history();
        self.cache.insert(entry, s.clone());
        Ok(s)
    }
}

/// Applies a plan to `(a,b)`. With a factory the resources are teleported
/// in; without one the composed factor is applied directly.
pub fn execute_plan(
    state: &mut StateVector,
    a: usize,
    b: usize,
    plan: &EpsilonPlan,
    factory: Option<&mut ResourceFactory>,
    rng: &mut StreamRng,
) -> Result<()> {
    let Some(entry) = plan.entry else {
        return Ok(());
    };
    match factory {
        None => {
            for _ in 0..plan.power {
                state.apply_heisenberg(a, b, plan.base_eps)?;
            }
        }
        Some(fac) => {
            let res = fac.resource(entry, rng)?;
            for _ in 0..plan.power {
                apply_heis_with(state, a, b, &res, rng, true)?;
            }
        }
    }
    if plan.power > 0 && state.norm_sq() <= 0.0 {
        return Err(precondition("plan produced a zero state"));
    }
    Ok(())
}
