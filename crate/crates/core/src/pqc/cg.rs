use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use super::{enumerate_labellings, Node, Tree};
use crate::error::{precondition, Result};
use crate::qstate::StateVector;

fn factorial(n: i64) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `<j1 m1; j2 m2 | j m>` by the Racah formula, all arguments doubled.
pub fn clebsch_gordan(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
    if m1 + m2 != m || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return 0.0;
    }
    if (j1 - m1) % 2 != 0 || (j2 - m2) % 2 != 0 || (j - m) % 2 != 0 {
        return 0.0;
    }
    if j < (j1 - j2).abs() || j > j1 + j2 || (j1 + j2 - j) % 2 != 0 {
        return 0.0;
    }
    let h = |x: i64| x / 2;
    let pre = ((j + 1) as f64 * factorial(h(j + j1 - j2)) * factorial(h(j - j1 + j2)) * factorial(h(j1 + j2 - j))
        / factorial(h(j1 + j2 + j) + 1))
        .sqrt();
    let norm = (factorial(h(j + m))
        * factorial(h(j - m))
        * factorial(h(j1 - m1))
        * factorial(h(j1 + m1))
        * factorial(h(j2 - m2))
        * factorial(h(j2 + m2)))
    .sqrt();
    let mut sum = 0.0;
    for k in 0..=h(j1 + j2 - j) {
        let d = [
            h(j1 + j2 - j) - k,
            h(j1 - m1) - k,
            h(j2 + m2) - k,
            h(j - j2 + m1) + k,
            h(j - j1 - m2) + k,
        ];
        if d.iter().any(|&x| x < 0) {
            continue;
        }
        let den: f64 = factorial(k) * d.iter().map(|&x| factorial(x)).product::<f64>();
        sum += if k % 2 == 0 { 1.0 } else { -1.0 } / den;
    }
    pre * norm * sum
}

/// Sparse amplitudes of the vertex state `|node, 2S_z = m>`, keyed by the
/// basis index restricted to the node's leaves.
fn vertex_state(node: &Node, m: i64) -> Result<BTreeMap<usize, f64>> {
    let mut out = BTreeMap::new();
    match node {
        Node::Leaf(q) => match m {
            1 => {
                out.insert(0, 1.0);
            }
            -1 => {
                out.insert(1usize << q, 1.0);
            }
            _ => {}
        },
        Node::Internal { left, right, label } => {
            let j = label.ok_or_else(|| precondition("unlabelled vertex"))? as i64;
            let jl = left.label().ok_or_else(|| precondition("unlabelled vertex"))? as i64;
            let jr = right.label().ok_or_else(|| precondition("unlabelled vertex"))? as i64;
            for ml in (-jl..=jl).step_by(2) {
                let mr = m - ml;
                if mr.abs() > jr {
                    continue;
                }
                let c = clebsch_gordan(jl, ml, jr, mr, j, m);
                if c == 0.0 {
                    continue;
                }
                let a = vertex_state(left, ml)?;
                let b = vertex_state(right, mr)?;
                for (ia, va) in &a {
                    for (ib, vb) in &b {
                        *out.entry(ia | ib).or_insert(0.0) += c * va * vb;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Nonzero amplitudes of `|lambda>` over the tree's leaves.
pub fn tree_amplitudes(tree: &Tree) -> Result<BTreeMap<usize, f64>> {
    tree.validate_labelled()?;
    vertex_state(&tree.node, tree.root_2sz.unwrap_or(0))
}

/// `|lambda>` as a dense vector on `n_qubits` qubits (qubits outside the
/// tree stay `|0>`).
pub fn tree_state(tree: &Tree, n_qubits: usize) -> Result<StateVector> {
    if tree.leaves().iter().any(|&q| q >= n_qubits) {
        return Err(precondition("tree leaf outside the register"));
    }
    let amps = tree_amplitudes(tree)?;
    let mut v = vec![C64::new(0.0, 0.0); 1usize << n_qubits];
    for (idx, a) in amps {
        v[idx] = C64::new(a, 0.0);
    }
    StateVector::from_amps(v)
}

/// `|<lambda|lambda'>|^2` for every labelling `lambda'` of `t_prime`, keyed
/// by flat labels; zero entries dropped.
pub fn exact_distribution(lambda: &Tree, t_prime: &Node) -> Result<Vec<(Vec<i64>, f64)>> {
    let a = tree_amplitudes(lambda)?;
    let mut lv = lambda.leaves();
    let mut tv = t_prime.leaves();
    lv.sort_unstable();
    tv.sort_unstable();
    if lv != tv {
        return Err(precondition("trees cover different qubits"));
    }
    let mut out = Vec::new();
    for t in enumerate_labellings(t_prime) {
        let b = tree_amplitudes(&t)?;
        let ov: f64 = b.iter().filter_map(|(k, vb)| a.get(k).map(|va| va * vb)).sum();
        let p = ov * ov;
        if p > 1e-14 {
            out.push((t.flat_labels(), p));
        }
    }
    Ok(out)
}
