//! Real amplitudes on the `S_z = 0` sector. Spin-0 states from a singlet
//! dimerization stay real and inside this sector under s/t measurements.

use std::sync::OnceLock;

use num_complex::Complex64 as C64;

use crate::error::{precondition, Result, StpError};
use crate::qstate::{PairOutcome, StateVector, CORRUPT_TOL};
use crate::rng::StreamRng;

const MAX_SECTOR_SPINS: usize = 24;
const ABSENT: u32 = u32::MAX;

pub(crate) struct Sector {
    n: usize,
    basis: Vec<u32>,
    /// Full index to sector index, `ABSENT` outside.
    index: Vec<u32>,
    pairs: Vec<OnceLock<PairTable>>,
}

/// For a pair `(i, j)`: sector indices with `x_i = 0, x_j = 1` next to
/// their swapped partner, and the indices with `x_i = x_j`.
struct PairTable {
    partners: Vec<(u32, u32)>,
    equal: Vec<u32>,
}

impl Sector {
    fn table(&self, i: usize, j: usize) -> &PairTable {
        self.pairs[i * self.n + j].get_or_init(|| {
            let (bi, bj) = (1u32 << i, 1u32 << j);
            let mut partners = Vec::new();
            let mut equal = Vec::new();
            for (k, &x) in self.basis.iter().enumerate() {
                let (xi, xj) = (x & bi != 0, x & bj != 0);
                if xi == xj {
                    equal.push(k as u32);
                } else if !xi {
                    partners.push((k as u32, self.index[(x ^ bi ^ bj) as usize]));
                }
            }
            PairTable { partners, equal }
        })
    }
}

fn sector(n: usize) -> &'static Sector {
    static CACHE: [OnceLock<Sector>; MAX_SECTOR_SPINS + 1] = [const { OnceLock::new() }; MAX_SECTOR_SPINS + 1];
    CACHE[n].get_or_init(|| {
        let mut index = vec![ABSENT; 1 << n];
        let mut basis = Vec::new();
        for x in 0..1u32 << n {
            if x.count_ones() as usize * 2 == n {
                index[x as usize] = basis.len() as u32;
                basis.push(x);
            }
        }
        let pairs = (0..n * n).map(|_| OnceLock::new()).collect();
        Sector { n, basis, index, pairs }
    })
}

#[derive(Clone, Debug)]
pub(crate) struct SectorState {
    n: usize,
    amps: Vec<f64>,
    ops: u64,
}

impl SectorState {
    pub fn from_state(s: &StateVector) -> Result<Self> {
        let n = s.n_qubits();
        if !n.is_multiple_of(2) || n > MAX_SECTOR_SPINS {
            return Err(precondition(format!("sector states need an even spin count up to {MAX_SECTOR_SPINS}")));
        }
        let sec = sector(n);
        let mut stray = 0.0;
        for (x, a) in s.amps().iter().enumerate() {
            stray += a.im * a.im;
            if sec.index[x] == ABSENT {
                stray += a.re * a.re;
            }
        }
        if stray > 1e-20 * s.norm_sq().max(1e-300) {
            return Err(precondition("state is not real with S_z = 0"));
        }
        let amps = sec.basis.iter().map(|&x| s.amp(x as usize).re).collect();
        let mut out = Self { n, amps, ops: 0 };
        out.normalize()?;
        Ok(out)
    }

    pub fn dimerization(n: usize) -> Result<Self> {
        Self::from_state(&StateVector::singlet_dimerization(n / 2)?)
    }

    pub fn to_state(&self) -> Result<StateVector> {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << self.n];
        for (&x, &a) in sector(self.n).basis.iter().zip(&self.amps) {
            amps[x as usize] = C64::new(a, 0.0);
        }
        StateVector::from_amps(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    fn normalize(&mut self) -> Result<()> {
        let ns: f64 = self.amps.iter().map(|a| a * a).sum();
        if ns <= CORRUPT_TOL {
            return Err(StpError::ZeroBranch { weight: ns, tol: CORRUPT_TOL });
        }
        let f = 1.0 / ns.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= f);
        Ok(())
    }

    /// Singlet probability on `(i, j)`. The state is kept normalized.
    pub fn singlet_weight(&self, i: usize, j: usize) -> f64 {
        let t = sector(self.n).table(i.min(j), i.max(j));
        let a = &self.amps;
        let anti: f64 = t.partners.iter().map(|&(k, p)| (a[k as usize] - a[p as usize]).powi(2)).sum();
        (0.5 * anti).clamp(0.0, 1.0)
    }

    /// Summed directly, so a pair just projected onto the other outcome
    /// gives exactly 0.
    pub fn triplet_weight(&self, i: usize, j: usize) -> f64 {
        let t = sector(self.n).table(i.min(j), i.max(j));
        let a = &self.amps;
        let eq: f64 = t.equal.iter().map(|&k| a[k as usize].powi(2)).sum();
        let sym: f64 = t.partners.iter().map(|&(k, p)| (a[k as usize] + a[p as usize]).powi(2)).sum();
        (eq + 0.5 * sym).clamp(0.0, 1.0)
    }

    pub fn pair_weight(&self, i: usize, j: usize, o: PairOutcome) -> f64 {
        if o.is_singlet() {
            self.singlet_weight(i, j)
        } else {
            self.triplet_weight(i, j)
        }
    }

    /// Projects onto `o` and rescales by `1/sqrt(w)`.
    fn project(&mut self, i: usize, j: usize, o: PairOutcome, w: f64) -> Result<()> {
        if w <= CORRUPT_TOL {
            return Err(StpError::ZeroBranch { weight: w, tol: CORRUPT_TOL });
        }
        let t = sector(self.n).table(i.min(j), i.max(j));
        let f = 0.5 / w.sqrt();
        let a = &mut self.amps;
        if o.is_singlet() {
            for &k in &t.equal {
                a[k as usize] = 0.0;
            }
            for &(k, p) in &t.partners {
                let d = f * (a[k as usize] - a[p as usize]);
                a[k as usize] = d;
                a[p as usize] = -d;
            }
        } else {
            for &k in &t.equal {
                a[k as usize] *= 2.0 * f;
            }
            for &(k, p) in &t.partners {
                let m = f * (a[k as usize] + a[p as usize]);
                a[k as usize] = m;
                a[p as usize] = m;
            }
        }
        self.ops += 1;
        if self.ops.is_multiple_of(32) {
            self.normalize()?;
        }
        Ok(())
    }

    pub fn measure_pair(&mut self, i: usize, j: usize, rng: &mut StreamRng) -> Result<PairOutcome> {
        let ws = self.singlet_weight(i, j);
        let o = if rng.uniform() < ws { PairOutcome::Singlet } else { PairOutcome::Triplet };
        self.project(i, j, o, if o.is_singlet() { ws } else { 1.0 - ws })?;
        Ok(o)
    }

    /// `<s_ab| psi>` on the other spins, kept in ascending order. Only
    /// meaningful right after a singlet outcome on `(a, b)`.
    pub fn drop_singlet(&self, a: usize, b: usize) -> Result<Self> {
        let n = self.n - 2;
        let (small, big) = (sector(n), sector(self.n));
        let (lo, hi) = (a.min(b), a.max(b));
        let widen = |y: u32| -> u32 {
            let low = y & ((1 << lo) - 1);
            let mid = (y >> lo) & ((1 << (hi - lo - 1)) - 1);
            let top = y >> (hi - 1);
            low | mid << (lo + 1) | top << (hi + 1)
        };
        let amps = small
            .basis
            .iter()
            .map(|&y| {
                let w = widen(y);
                let p = big.index[(w | 1 << a) as usize] as usize;
                let q = big.index[(w | 1 << b) as usize] as usize;
                std::f64::consts::FRAC_1_SQRT_2 * (self.amps[q] - self.amps[p])
            })
            .collect();
        let mut out = Self { n, amps, ops: 0 };
        out.normalize()?;
        Ok(out)
    }
}
