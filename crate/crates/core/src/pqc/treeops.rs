use std::collections::BTreeMap;

use super::spin::{estimate_total_spin_in, measure_total_spin, SpinMode};
use super::split::{split, Caps};
use super::{Node, Tree};
use crate::error::{precondition, Result};
use crate::qstate::{Pauli, StateVector};
use crate::rng::StreamRng;

/// Samples a labelling of `tree` by measuring vertex spins from the leaves
/// up, then the root `S_z` when the root spin is nonzero. In protocol mode
/// each estimate is rounded within the range the children's labels allow,
/// and skipped when that range has one value.
pub fn measure_tree(state: &mut StateVector, tree: &Node, rng: &mut StreamRng, caps: &Caps) -> Result<Tree> {
    let mut labels = Vec::new();
    measure_vertex(state, tree, rng, caps, &mut labels)?;
    let node = tree.with_labels(&labels)?;
    let root = node.label().unwrap_or(0);
    let leaves = tree.leaves();
    let sz = if root == 0 {
        0
    } else {
        match caps.mode {
            SpinMode::Exact => {
                let dist = state.hamming_distribution(&leaves)?;
                let mut u = rng.uniform();
                let mut ones = dist.len() - 1;
                for (k, &p) in dist.iter().enumerate() {
                    if u < p {
                        ones = k;
                        break;
                    }
                    u -= p;
                }
                state.project_hamming(&leaves, ones)?;
                leaves.len() as i64 - 2 * ones as i64
            }
            SpinMode::Protocol => {
                let mut sz = 0i64;
                for &q in &leaves {
                    sz += i64::from(state.measure_pauli1(q, Pauli::Z, rng)?);
                }
                sz
            }
        }
    };
    Ok(Tree { node, root_2sz: Some(sz) })
}

/// Measures the subtree at `v` in post-order, appending internal labels.
fn measure_vertex(
    state: &mut StateVector,
    v: &Node,
    rng: &mut StreamRng,
    caps: &Caps,
    labels: &mut Vec<usize>,
) -> Result<usize> {
    let Node::Internal { left, right, .. } = v else {
        return Ok(1);
    };
    let a = measure_vertex(state, left, rng, caps, labels)?;
    let b = measure_vertex(state, right, rng, caps, labels)?;
    let leaves = v.leaves();
    let m = leaves.len();
    let (lo, hi) = (a.abs_diff(b), a + b);
    let ts = match caps.mode {
        SpinMode::Exact => measure_total_spin(state, &leaves, caps.mode, None, rng)?.twice_s,
        SpinMode::Protocol if lo == hi => lo,
        SpinMode::Protocol => estimate_total_spin_in(state, &leaves, caps.n_meas_factor * m * m, (lo, hi), rng)?.twice_s,
    };
    labels.push(ts);
    Ok(ts)
}

/// Projects onto the labels of `lambda` (post-selection) and returns the
/// branch probability.
pub fn project_tree(state: &mut StateVector, lambda: &Tree) -> Result<f64> {
    lambda.validate_labelled()?;
    let mut p = 1.0;
    for v in lambda.node.internal_postorder() {
        let ts = v.label().expect("validated");
        p *= state.project_spin_sector(&v.leaves(), ts)?;
    }
    if lambda.root_spin().unwrap_or(0) > 0 {
        let leaves = lambda.leaves();
        let sz = lambda.root_2sz.unwrap_or(0);
        let ones = (leaves.len() as i64 - sz) / 2;
        p *= state.project_hamming(&leaves, ones as usize)?;
    }
    Ok(p)
}

/// Prepares `|lambda>` (root spin 0) from a singlet dimerization by
/// splitting every internal vertex from the root down. Leaves must be
/// exactly `0..n`.
pub fn prepare_labelled_tree(lambda: &Tree, rng: &mut StreamRng, caps: &Caps) -> Result<StateVector> {
    lambda.validate_labelled()?;
    if lambda.root_spin() != Some(0) {
        return Err(precondition("prepare_labelled_tree needs root spin 0; use reduce_root_spin"));
    }
    let n = lambda.n_leaves();
    let mut sorted = lambda.leaves();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(precondition("tree leaves must be the qubits 0..n"));
    }
    let pairs: Vec<(usize, usize)> = (0..n / 2).map(|k| (2 * k, 2 * k + 1)).collect();
    let mut state = StateVector::singlet_pairs(n, &pairs)?;
    // physical qubit assigned to each leaf
    let mut phys = vec![usize::MAX; n];
    let mut work: Vec<(&Node, Vec<usize>)> = vec![(&lambda.node, (0..n).collect())];
    while let Some((v, qubits)) = work.pop() {
        match v {
            Node::Leaf(q) => phys[*q] = qubits[0],
            Node::Internal { left, right, .. } => {
                let m = left.n_leaves();
                let (l, r) = (left.label().expect("validated"), right.label().expect("validated"));
                let rep = split(&mut state, &qubits, m, l, r, rng, caps)?;
                work.push((left, rep.first));
                work.push((right, rep.second));
            }
        }
    }
    let mut perm = vec![0; n];
    for (leaf, &p) in phys.iter().enumerate() {
        perm[p] = leaf;
    }
    state.permute_qubits(&perm)?;
    state.clear_history();
    Ok(state)
}

/// The construction that turns a nonzero root spin into spin 0 with
/// `2S_root` ancillas.
#[derive(Clone, Debug, PartialEq)]
pub struct RootReduction {
    /// `lambda` joined to the ancilla tree under a spin-0 root.
    pub hat: Tree,
    /// The ancilla tree with labels removed, absent when `S_root = 0`.
    pub ancilla: Option<Node>,
    /// `2S_z` of the original root, restored on induced labellings.
    pub root_2sz: i64,
}

impl RootReduction {
    /// `T'` joined to the ancilla tree.
    pub fn hat_tree(&self, t_prime: &Node) -> Node {
        match &self.ancilla {
            Some(a) => Node::join(t_prime.unlabelled(), a.clone(), None),
            None => t_prime.unlabelled(),
        }
    }

    /// The labelling of `T'` induced by a labelling of `T-hat'`.
    pub fn induce(&self, hat_labelled: &Tree) -> Result<Tree> {
        let node = match (&self.ancilla, &hat_labelled.node) {
            (None, n) => n.clone(),
            (Some(_), Node::Internal { left, .. }) => (**left).clone(),
            (Some(_), Node::Leaf(_)) => return Err(precondition("hat tree has no ancilla branch")),
        };
        Ok(Tree { node, root_2sz: Some(self.root_2sz) })
    }
}

/// Totally symmetric ancilla tree on `first..first + twice_s`.
pub fn default_ancilla_tree(first: usize, twice_s: usize, root_2sz: i64) -> Result<Tree> {
    if twice_s == 0 {
        return Err(precondition("ancilla tree needs at least one qubit"));
    }
    let mut node = Node::Leaf(first);
    for k in 1..twice_s {
        node = Node::join(node, Node::Leaf(first + k), Some(k + 1));
    }
    Tree::labelled(node, root_2sz)
}

pub fn reduce_root_spin(lambda: &Tree, lambda2: Option<&Tree>) -> Result<RootReduction> {
    lambda.validate_labelled()?;
    let j = lambda.root_spin().unwrap_or(0);
    let sz = lambda.root_2sz.unwrap_or(0);
    if j == 0 {
        return Ok(RootReduction { hat: lambda.clone(), ancilla: None, root_2sz: 0 });
    }
    let lambda2 = lambda2.ok_or_else(|| precondition("nonzero root spin needs an ancilla tree"))?;
    lambda2.validate_labelled()?;
    if lambda2.root_spin() != Some(j) {
        return Err(precondition(format!(
            "ancilla root 2S={:?} does not match root 2S={j}",
            lambda2.root_spin()
        )));
    }
    let ours = lambda.leaves();
    if lambda2.leaves().iter().any(|q| ours.contains(q)) {
        return Err(precondition("ancilla tree overlaps the original qubits"));
    }
    let hat = Tree { node: Node::join(lambda.node.clone(), lambda2.node.clone(), Some(0)), root_2sz: Some(0) };
    hat.validate_labelled()?;
    Ok(RootReduction { hat, ancilla: Some(lambda2.node.unlabelled()), root_2sz: sz })
}

/// Counts of flat labellings of `T'`.
pub type SampleCounts = BTreeMap<Vec<i64>, u64>;

/// Weak-model sampling: prepare `|lambda>` (through the root-spin
/// reduction when needed) and measure `T'` `shots` times. Returns the
/// counts and how many shots saw a nonzero reduced root.
pub fn weak_sample(
    lambda: &Tree,
    t_prime: &Node,
    shots: u64,
    rng: &mut StreamRng,
    prep_caps: &Caps,
    meas_caps: &Caps,
) -> Result<(SampleCounts, u64)> {
    let n = lambda.n_leaves();
    let j = lambda.root_spin().unwrap_or(0);
    let ancilla = if j > 0 {
        Some(default_ancilla_tree(n, j, -lambda.root_2sz.unwrap_or(0))?)
    } else {
        None
    };
    let red = reduce_root_spin(lambda, ancilla.as_ref())?;
    let mut prepared = prepare_labelled_tree(&red.hat, rng, prep_caps)?;
    // shots only need the amplitudes, not the preparation record
    prepared.clear_history();
    let hat_t = red.hat_tree(t_prime);
    let mut counts = SampleCounts::new();
    let mut nonzero_root = 0;
    for _ in 0..shots {
        let mut s = prepared.clone();
        let got = measure_tree(&mut s, &hat_t, rng, meas_caps)?;
        if got.root_spin() != Some(0) {
            nonzero_root += 1;
        }
        let induced = red.induce(&got)?;
        *counts.entry(induced.flat_labels()).or_insert(0) += 1;
    }
    Ok((counts, nonzero_root))
}
