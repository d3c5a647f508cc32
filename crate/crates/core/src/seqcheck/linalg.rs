use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StpError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixNorm {
    #[default]
    Frobenius,
    Operator,
}

impl MatrixNorm {
    pub fn of(self, m: &DMatrix<f64>) -> f64 {
        match self {
            MatrixNorm::Frobenius => m.norm(),
            MatrixNorm::Operator => m.clone().svd(false, false).singular_values.max(),
        }
    }
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<C64> {
    m.complex_eigenvalues().iter().copied().collect()
}

/// Largest distance between paired eigenvalues, minimized over pairings
/// by greedy nearest matching.
pub fn match_eigenvalues(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut left: Vec<C64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = left
            .iter()
            .enumerate()
            .map(|(k, y)| (k, (x - y).norm()))
            .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
        worst = worst.max(d);
        left.remove(k);
    }
    worst
}

pub fn distance_to_identity(m: &DMatrix<f64>, norm: MatrixNorm) -> f64 {
    norm.of(&(m - DMatrix::identity(m.nrows(), m.ncols())))
}

fn inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone().try_inverse().ok_or_else(|| StpError::Numerical("singular matrix".into()))
}

/// Group commutator `a^-1 b^-1 a b`.
pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(inverse(a)? * inverse(b)? * a * b)
}

/// The other group commutator convention, `a b a^-1 b^-1`.
pub fn commutator_abab(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(a * b * inverse(a)? * inverse(b)?)
}

/// Denman-Beavers square root.
fn sqrtm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::identity(n, n);
    for _ in 0..100 {
        let yi = inverse(&y)?;
        let zi = inverse(&z)?;
        let y2 = (&y + zi) * 0.5;
        let z2 = (&z + yi) * 0.5;
        let delta = (&y2 - &y).norm();
        y = y2;
        z = z2;
        if delta <= 1e-15 * y.norm() {
            break;
        }
    }
    Ok(y)
}

/// Principal real logarithm by inverse scaling and squaring. Fails when an
/// eigenvalue lies on the closed negative real axis.
pub fn logm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    for ev in eigenvalues(a) {
        if ev.im.abs() <= 1e-12 * ev.norm().max(1.0) && ev.re <= 0.0 {
            return Err(StpError::Numerical(format!("no real principal log: eigenvalue {ev}")));
        }
    }
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut x = a.clone();
    let mut k = 0;
    while (&x - &id).norm() > 0.25 {
        x = sqrtm(&x)?;
        k += 1;
        if k > 60 {
            return Err(StpError::Numerical("square-root iteration did not approach identity".into()));
        }
    }
    let e = &x - &id;
    let mut term = e.clone();
    let mut sum = DMatrix::zeros(n, n);
    for m in 1..200 {
        let c = if m % 2 == 1 { 1.0 } else { -1.0 } / m as f64;
        sum += &term * c;
        if term.norm() / (m as f64) < 1e-18 {
            break;
        }
        term = &term * &e;
    }
    Ok(sum * 2f64.powi(k))
}
