//! Approximating a target angle by integer multiples of an irrational one.
//!
//! All reductions mod 2π go through a double-double product so that
//! `m * theta` stays accurate to about 1e-15 for `m` up to 1e9.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{precondition, Result, StpError};

const TWO_PI_HI: f64 = TAU;
const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;
const RE_REDUCE_EVERY: u64 = 4096;

/// An angle in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CircleAngle(f64);

impl CircleAngle {
    pub fn new(radians: f64) -> Self {
        Self(reduce(radians, 0.0))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// `m * self` reduced mod 2π in extended precision.
    pub fn times(self, m: i64) -> Self {
        Self(reduce_multiple(self.0, m))
    }

    pub fn distance(self, other: CircleAngle) -> f64 {
        circle_distance(self.0, other.0)
    }
}

/// Error-free `a * b = p + e`.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Reduces the double-double `hi + lo` into `[0, 2π)`.
fn reduce(hi: f64, lo: f64) -> f64 {
    let k = ((hi + lo) / TWO_PI_HI).floor();
    let (p1, e1) = two_prod(k, TWO_PI_HI);
    let p2 = k * TWO_PI_LO;
    let (s, e) = two_sum(hi, -p1);
    let mut r = s + (e + lo - e1 - p2);
    while r < 0.0 {
        r += TWO_PI_HI;
    }
    while r >= TWO_PI_HI {
        r -= TWO_PI_HI;
    }
    r
}

/// `m * theta mod 2π`.
pub fn reduce_multiple(theta: f64, m: i64) -> f64 {
    let (p, e) = two_prod(m as f64, theta);
    reduce(p, e)
}

/// Distance on the circle, in `[0, π]`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = reduce(a - b, 0.0);
    d.min(TWO_PI_HI - d)
}

/// Smallest `m` in `[1, m_max]` with `dist(m theta, phi) <= delta`.
pub fn min_multiple(theta: CircleAngle, phi: CircleAngle, delta: f64, m_max: u64) -> Result<u64> {
    if !(delta > 0.0) {
        return Err(precondition("min_multiple needs delta > 0"));
    }
    let t = theta.radians();
    let target = phi.radians();
    let mut acc = 0.0;
    for m in 1..=m_max {
        if m % RE_REDUCE_EVERY == 0 {
            acc = reduce_multiple(t, m as i64);
        } else {
            acc += t;
            if acc >= TWO_PI_HI {
                acc -= TWO_PI_HI;
            }
        }
        if circle_distance(acc, target) <= delta {
            // confirm against the exact reduction to rule out drift
            if circle_distance(reduce_multiple(t, m as i64), target) <= delta {
                return Ok(m);
            }
        }
    }
    Err(StpError::NotFound { m_max })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub delta: f64,
    pub m: u64,
}

/// `m(delta)` for each delta, reaching for `phi`.
pub fn growth_probe(theta: CircleAngle, phi: CircleAngle, deltas: &[f64], m_max: u64) -> Result<Vec<GrowthRow>> {
    deltas
        .iter()
        .map(|&delta| Ok(GrowthRow { delta, m: min_multiple(theta, phi, delta, m_max)? }))
        .collect()
}

pub fn growth_csv(rows: &[GrowthRow]) -> String {
    let mut s = String::from("delta,m\n");
    for r in rows {
        s.push_str(&format!("{:e},{}\n", r.delta, r.m));
    }
    s
}

/// The magic-state angle, `arctan(1/3)`.
pub fn magic_theta() -> f64 {
    (1.0f64 / 3.0).atan()
}

pub fn default_target() -> f64 {
    PI / 8.0
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 2π * 2^90, floor.
    const TWO_PI_FIX: u128 = 7_778_206_666_007_221_413_453_810_769;
    const FRAC_BITS: i32 = 90;

    /// Fixed-point oracle: theta is exactly mant * 2^exp, so m*theta*2^90 is
    /// an integer we can reduce exactly (up to the 2^-90 error in 2π).
    fn oracle(theta: f64, m: u64) -> f64 {
        assert!(theta > 0.0);
        let bits = theta.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32 - 1075;
        let mant = (bits & ((1 << 52) - 1)) | (1 << 52);
        let shift = exp + FRAC_BITS;
        assert!(shift >= 0);
        let x = (m as u128 * mant as u128) << shift;
        let r = x % TWO_PI_FIX;
        r as f64 / 2f64.powi(FRAC_BITS)
    }

    #[test]
    fn reduction_matches_fixed_point_oracle() {
        let theta = magic_theta();
        for &m in &[1u64, 2, 7, 1000, 123_456, 99_999_999, 1_000_000_000] {
            let got = reduce_multiple(theta, m as i64);
            let want = oracle(theta, m);
            assert!(circle_distance(got, want) < 1e-15, "m={m}: {got} vs {want}");
        }
        let t2 = 2.0 * theta;
        let got = reduce_multiple(t2, 987_654_321);
        assert!(circle_distance(got, oracle(t2, 987_654_321)) < 1e-15);
    }

    #[test]
    fn negative_multiples() {
        let theta = magic_theta();
        let a = reduce_multiple(theta, -5);
        let b = reduce_multiple(theta, 5);
        assert!(circle_distance(a + b, 0.0) < 1e-15);
    }

    #[test]
    fn trivial_cases() {
        let th = CircleAngle::new(magic_theta());
        assert_eq!(min_multiple(th, th, 1e-12, 10).unwrap(), 1);
        assert_eq!(min_multiple(th, CircleAngle::new(0.0), PI, 10).unwrap(), 1);
        let quarter = CircleAngle::new(PI / 2.0);
        assert!(matches!(
            min_multiple(quarter, CircleAngle::new(PI / 3.0), 0.1, 10_000),
            Err(StpError::NotFound { .. })
        ));
    }

    fn rescan_minimal(theta: f64, phi: f64, delta: f64, m: u64) {
        assert!(circle_distance(oracle(theta, m), phi) <= delta);
        for k in 1..m {
            assert!(circle_distance(oracle(theta, k), phi) > delta, "k={k} < m={m}");
        }
    }

    #[test]
    fn doubled_magic_angle_to_pi_over_four() {
        let t2 = 2.0 * magic_theta();
        let m = min_multiple(CircleAngle::new(t2), CircleAngle::new(PI / 4.0), 0.01, 1_000_000).unwrap();
        rescan_minimal(t2, PI / 4.0, 0.01, m);
    }

    #[test]
    fn growth_is_monotone() {
        let th = CircleAngle::new(2.0 * magic_theta());
        let deltas: Vec<f64> = (0..12).map(|k| 0.5f64.powi(k)).collect();
        let rows = growth_probe(th, CircleAngle::new(PI / 4.0), &deltas, 100_000_000).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].m >= w[0].m);
        }
        let csv = growth_csv(&rows);
        assert!(csv.starts_with("delta,m\n"));
        assert_eq!(csv.lines().count(), 13);
    }

    #[test]
    fn re_reduction_keeps_scan_exact_past_the_period() {
        // a target only reached after several re-reduction periods
        let th = magic_theta();
        let m_true = 20_011u64;
        let phi = oracle(th, m_true);
        let m = min_multiple(CircleAngle::new(th), CircleAngle::new(phi), 1e-13, 1_000_000).unwrap();
        rescan_minimal(th, phi, 1e-13, m);
    }

    proptest::proptest! {
        #[test]
        fn min_multiple_is_minimal(seed in 0u64..1000) {
            let theta = 0.1 + (seed as f64) * 0.0061;
            let phi = (seed as f64 * 0.37) % 6.0;
            if let Ok(m) = min_multiple(CircleAngle::new(theta), CircleAngle::new(phi), 0.05, 20_000) {
                rescan_minimal(theta, phi, 0.05, m);
            }
        }
    }
}
