use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::basis::{permutation_rep, spin0_basis, SubspaceBasis};
use super::checks::{all_permutations, is_no_leakage, signed_permutation_test};
use super::linalg::{commutator, commutator_abab, distance_to_identity, eigenvalues, logm, match_eigenvalues, MatrixNorm};
use super::operator::sequence_to_operator;
use super::{Kind, ProjectorSequence, ProjectorSpec, Site};
use crate::error::Result;
use crate::rng::StreamRng;

use Site::{A, C};

fn s(a: Site, b: Site) -> ProjectorSpec {
    ProjectorSpec::s(a, b)
}

fn t(a: Site, b: Site) -> ProjectorSpec {
    ProjectorSpec::t(a, b)
}

/// `(cap, t_{a6,c1}, s_{a2,a6}, t_{a6,c2}, s_{a4,a6}, t_{a6,c4}, cap)`.
pub fn six_ancilla() -> ProjectorSequence {
    let items = vec![t(A(6), C(1)), s(A(2), A(6)), t(A(6), C(2)), s(A(4), A(6)), t(A(6), C(4))];
    ProjectorSequence::new(4, 6, items).expect("valid sequence")
}

/// `(cap, t_{a3,c3}, t_{a2,c2}, s_{a2,c3}, t_{a3,c2}, s_{a3,c4}, cap)`.
pub fn four_ancilla_order12() -> ProjectorSequence {
    let items = vec![t(A(3), C(3)), t(A(2), C(2)), s(A(2), C(3)), t(A(3), C(2)), s(A(3), C(4))];
    ProjectorSequence::new(4, 4, items).expect("valid sequence")
}

/// `(s_{a1,a2}, t_{a2,c2}, t_{a2,c1}, t_{a2,c4}, s_{a1,a2})`.
pub fn relaxed_two_ancilla() -> ProjectorSequence {
    let items = vec![t(A(2), C(2)), t(A(2), C(1)), t(A(2), C(4))];
    ProjectorSequence::new(4, 2, items).expect("valid sequence")
}

pub fn appendix_d_o1() -> ProjectorSequence {
    let items = vec![
        t(A(2), C(2)),
        t(C(1), C(2)),
        t(A(1), C(1)),
        t(A(1), C(4)),
        t(C(3), C(4)),
        t(C(2), C(3)),
        t(C(1), C(2)),
        t(A(1), C(1)),
    ];
    ProjectorSequence::new(4, 2, items).expect("valid sequence")
}

pub fn appendix_d_o2() -> ProjectorSequence {
    let items = vec![
        t(A(2), C(2)),
        t(C(1), C(2)),
        t(C(1), C(3)),
        t(A(1), C(3)),
        t(A(1), A(2)),
        t(A(2), C(2)),
        t(C(1), C(2)),
        t(A(1), C(1)),
    ];
    ProjectorSequence::new(4, 2, items).expect("valid sequence")
}

/// Swaps `c1, c2` by four singlet teleportations through `a1, a2`.
pub fn swap_by_teleport() -> ProjectorSequence {
    let items = vec![s(A(2), A(1)), s(A(1), C(2)), s(C(2), C(1)), s(C(1), A(1))];
    ProjectorSequence::new(4, 2, items).expect("valid sequence")
}

pub fn printed_o1() -> DMatrix<f64> {
    let (r7, r35) = (7f64.sqrt(), 35f64.sqrt());
    DMatrix::from_row_slice(
        2,
        2,
        &[15f64.sqrt() / (2.0 * r7), 1.0 / (2.0 * r35), -(5f64.sqrt()) / (2.0 * r7), 9.0 * 3f64.sqrt() / (2.0 * r35)],
    )
}

pub fn printed_o2() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.7, -(3f64.sqrt()) / 10.0, -1.0 / (2.0 * 3f64.sqrt()), 1.5])
}

/// Random items on random distinct site pairs, capped on both sides.
pub fn random_sequence(n_comp: usize, n_anc: usize, max_len: usize, rng: &mut StreamRng) -> Result<ProjectorSequence> {
    let sites: Vec<Site> = (1..=n_comp).map(C).chain((1..=n_anc).map(A)).collect();
    let len = 1 + rng.below(max_len.max(1));
    let items = (0..len)
        .map(|_| {
            let (i, j) = rng.distinct_pair(sites.len());
            let kind = if rng.coin() { Kind::S } else { Kind::T };
            ProjectorSpec { kind, pair: (sites[i], sites[j]) }
        })
        .collect();
    ProjectorSequence::new(n_comp, n_anc, items)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchReport {
    pub sequences: usize,
    pub no_leakage: usize,
    pub certified: usize,
    pub counterexamples: Vec<ProjectorSequence>,
}

/// Random search at `2N = 4`, one ancilla pair: every no-leakage sequence
/// should act as a signed permutation.
pub fn search_lemma(count: usize, max_len: usize, rng: &mut StreamRng) -> Result<SearchReport> {
    let basis = spin0_basis(4)?;
    let mut rep = SearchReport { sequences: count, no_leakage: 0, certified: 0, counterexamples: Vec::new() };
    for _ in 0..count {
        let seq = random_sequence(4, 2, max_len, rng)?;
        if !is_no_leakage(&seq, &basis, 1e-9)?.no_leakage {
            continue;
        }
        rep.no_leakage += 1;
        let op = sequence_to_operator(&seq, &basis, false)?;
        if signed_permutation_test(&op.matrix, &basis, 1e-8)?.is_some() {
            rep.certified += 1;
        } else if rep.counterexamples.len() < 10 {
            rep.counterexamples.push(seq);
        }
    }
    Ok(rep)
}

fn pairs(v: &[num_complex::Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorCheck {
    pub eigenvalues: Vec<[f64; 2]>,
    pub printed_eigenvalues: Vec<[f64; 2]>,
    pub eigenvalue_error: f64,
    /// Same comparison with the items applied left to right.
    pub reversed_eigenvalue_error: f64,
    pub det: f64,
    pub sum_log_norm: f64,
    /// `|prod_rho rho(O) - I|_F` in lexicographic order, reported only.
    pub orbit_product_defect: f64,
    /// Best entry-wise residual against the printed matrix over basis sign
    /// flips and transposition, reported only.
    pub entrywise_residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AppendixDReport {
    pub o1: OperatorCheck,
    pub o2: OperatorCheck,
    pub norm: MatrixNorm,
    /// Distance of the `M`-fold nested commutator to the identity, `M = 1..`.
    pub distances: Vec<f64>,
    /// Same with `a b a^-1 b^-1`, reported only.
    pub distances_abab: Vec<f64>,
    pub strictly_decreasing: bool,
    pub log_slope: f64,
    pub passed: bool,
}

fn conj(r: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    r * x * r.transpose()
}

fn check_operator(seq: &ProjectorSequence, printed: &DMatrix<f64>, basis: &SubspaceBasis) -> Result<(DMatrix<f64>, OperatorCheck)> {
    let op = sequence_to_operator(seq, basis, true)?.matrix;
    let mut rev = seq.clone();
    rev.reversed = true;
    let op_rev = sequence_to_operator(&rev, basis, true)?.matrix;
    let ev = eigenvalues(&op);
    let pev = eigenvalues(printed);
    let reps: Vec<DMatrix<f64>> =
        all_permutations(basis.n_spins).iter().map(|p| permutation_rep(basis, p)).collect::<Result<_>>()?;
    let log = logm(&op)?;
    let sum_log = reps.iter().fold(DMatrix::zeros(2, 2), |acc, r| acc + conj(r, &log));
    let prod = reps.iter().fold(DMatrix::identity(2, 2), |acc, r| acc * conj(r, &op));
    let flip = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
    let entrywise_residual = [op.clone(), &flip * &op * &flip, op.transpose(), &flip * op.transpose() * &flip]
        .iter()
        .map(|m| (m - printed).norm())
        .fold(f64::INFINITY, f64::min);
    let check = OperatorCheck {
        eigenvalues: pairs(&ev),
        printed_eigenvalues: pairs(&pev),
        eigenvalue_error: match_eigenvalues(&ev, &pev),
        reversed_eigenvalue_error: match_eigenvalues(&eigenvalues(&op_rev), &pev),
        det: op.determinant(),
        sum_log_norm: sum_log.norm(),
        orbit_product_defect: distance_to_identity(&prod, MatrixNorm::Frobenius),
        entrywise_residual,
    };
    Ok((op, check))
}

fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xs: Vec<f64> = (1..=ys.len()).map(|m| m as f64).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

type Commutator = fn(&DMatrix<f64>, &DMatrix<f64>) -> Result<DMatrix<f64>>;

/// `|[a, [a, ..., [a, b]]] - I|` for `M = 1..=depth` nestings.
pub fn nested_distances(a: &DMatrix<f64>, b: &DMatrix<f64>, depth: usize, norm: MatrixNorm, comm: Commutator) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(depth);
    let mut cur = comm(a, b)?;
    for m in 1..=depth {
        if m > 1 {
            cur = comm(a, &cur)?;
        }
        out.push(distance_to_identity(&cur, norm));
    }
    Ok(out)
}

/// Builds `O_1, O_2` from their sequences and runs the eigenvalue, orbit
/// and nested-commutator checks for `M = 1..=depth`.
pub fn verify_appendix_d(depth: usize, norm: MatrixNorm) -> Result<AppendixDReport> {
    let basis = spin0_basis(4)?;
    let (o1, c1) = check_operator(&appendix_d_o1(), &printed_o1(), &basis)?;
    let (o2, c2) = check_operator(&appendix_d_o2(), &printed_o2(), &basis)?;
    let distances = nested_distances(&o1, &o2, depth, norm, commutator)?;
    let distances_abab = nested_distances(&o1, &o2, depth, norm, commutator_abab)?;
    let strictly_decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    let log_slope = slope(&distances);
    let passed = [&c1, &c2]
        .iter()
        .all(|c| c.eigenvalue_error <= 1e-6 && c.sum_log_norm <= 1e-9 && (c.det - 1.0).abs() <= 1e-10)
        && strictly_decreasing
        && log_slope < 0.0;
    Ok(AppendixDReport { o1: c1, o2: c2, norm, distances, distances_abab, strictly_decreasing, log_slope, passed })
}
