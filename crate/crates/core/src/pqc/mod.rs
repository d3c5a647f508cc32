//! Permutational computing on recoupling trees.
//!
//! Spins are stored doubled (`2S`, `2S_z`) so parity and triangle checks
//! stay in integers. Spin up is `|0>`, so `2S_z = n - 2 * popcount`.

mod cg;
mod qudit;
mod spin;
mod split;
mod treeops;


pub use cg::{clebsch_gordan, exact_distribution, tree_amplitudes, tree_state};
pub use qudit::{encode_qudit, qudit_pair_resplit, qudit_pair_spin_measure};
pub use spin::{
    canonical_form, default_n_meas, estimate_total_spin, estimate_total_spin_in, measure_total_spin, round_twice_spin,
    round_twice_spin_in, spin_sq_from_triplet,
    triplet_probability, CanonicalForm, SpinEstimate, SpinMode,
};
pub use split::{split, BStep, Caps, SplitReport};
pub use treeops::{
    default_ancilla_tree, measure_tree, prepare_labelled_tree, project_tree, reduce_root_spin, weak_sample,
    RootReduction, SampleCounts,
};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};
use crate::rng::StreamRng;

/// A binary recoupling tree. Leaves are bare qubit indices in JSON.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Leaf(usize),
    Internal {
        left: Box<Node>,
        right: Box<Node>,
        #[serde(rename = "label_2S")]
        label: Option<usize>,
    },
}

impl Node {
    pub fn join(left: Node, right: Node, label: Option<usize>) -> Node {
        Node::Internal { left: Box::new(left), right: Box::new(right), label }
    }

    /// `2S` at this vertex; leaves are always spin 1/2.
    pub fn label(&self) -> Option<usize> {
        match self {
            Node::Leaf(_) => Some(1),
            Node::Internal { label, .. } => *label,
        }
    }

    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            Node::Leaf(q) => out.push(*q),
            Node::Internal { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Internal { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    /// Internal vertices in post-order (children before parents).
    pub fn internal_postorder(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        self.collect_internal(&mut out);
        out
    }

    fn collect_internal<'a>(&'a self, out: &mut Vec<&'a Node>) {
        if let Node::Internal { left, right, .. } = self {
            left.collect_internal(out);
            right.collect_internal(out);
            out.push(self);
        }
    }

    /// Same shape with every internal label cleared.
    pub fn unlabelled(&self) -> Node {
        match self {
            Node::Leaf(q) => Node::Leaf(*q),
            Node::Internal { left, right, .. } => Node::join(left.unlabelled(), right.unlabelled(), None),
        }
    }

    /// Replaces internal labels, in post-order, from `labels`.
    pub fn with_labels(&self, labels: &[usize]) -> Result<Node> {
        let mut it = labels.iter();
        let out = self.relabel(&mut it)?;
        if it.next().is_some() {
            return Err(precondition("too many labels for tree"));
        }
        Ok(out)
    }

    fn relabel<'a>(&self, it: &mut impl Iterator<Item = &'a usize>) -> Result<Node> {
        match self {
            Node::Leaf(q) => Ok(Node::Leaf(*q)),
            Node::Internal { left, right, .. } => {
                let l = left.relabel(it)?;
                let r = right.relabel(it)?;
                let lab = it.next().ok_or_else(|| precondition("too few labels for tree"))?;
                Ok(Node::join(l, r, Some(*lab)))
            }
        }
    }

    fn check_shape(&self) -> Result<()> {
        let leaves = self.leaves();
        let set: BTreeSet<usize> = leaves.iter().copied().collect();
        if set.len() != leaves.len() {
            return Err(precondition("tree leaves repeat a qubit"));
        }
        Ok(())
    }

    fn check_labels(&self) -> Result<()> {
        if let Node::Internal { left, right, label } = self {
            left.check_labels()?;
            right.check_labels()?;
            let j = label.ok_or_else(|| precondition("internal vertex has no label"))?;
            let (a, b) = (left.label().unwrap_or(0), right.label().unwrap_or(0));
            if !triangle(a, b, j) {
                return Err(precondition(format!("labels {a} x {b} cannot couple to {j}")));
            }
        }
        Ok(())
    }
}

/// `|a - b| <= j <= a + b` with `a + b - j` even, all doubled.
pub fn triangle(a: usize, b: usize, j: usize) -> bool {
    j >= a.abs_diff(b) && j <= a + b && (a + b - j).is_multiple_of(2)
}

/// A tree plus the root `2S_z`. Unlabelled trees carry `None` everywhere.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tree {
    pub node: Node,
    #[serde(rename = "root_2Sz")]
    pub root_2sz: Option<i64>,
}

pub type UnlabelledTree = Tree;
pub type LabelledTree = Tree;

impl Tree {
    pub fn unlabelled(node: Node) -> Tree {
        Tree { node: node.unlabelled(), root_2sz: None }
    }

    pub fn labelled(node: Node, root_2sz: i64) -> Result<Tree> {
        let t = Tree { node, root_2sz: Some(root_2sz) };
        t.validate_labelled()?;
        Ok(t)
    }

    pub fn leaves(&self) -> Vec<usize> {
        self.node.leaves()
    }

    pub fn n_leaves(&self) -> usize {
        self.node.n_leaves()
    }

    pub fn root_spin(&self) -> Option<usize> {
        self.node.label()
    }

    pub fn validate_unlabelled(&self) -> Result<()> {
        self.node.check_shape()
    }

    /// Checks leaf distinctness, the triangle rule everywhere and the root
    /// `S_z` range and parity.
    pub fn validate_labelled(&self) -> Result<()> {
        self.node.check_shape()?;
        self.node.check_labels()?;
        let j = self.root_spin().unwrap_or(0) as i64;
        let sz = self.root_2sz.ok_or_else(|| precondition("labelled tree needs root_2Sz"))?;
        if sz.abs() > j || (j - sz) % 2 != 0 {
            return Err(precondition(format!("root_2Sz {sz} incompatible with root 2S {j}")));
        }
        Ok(())
    }

    /// Internal labels in post-order followed by the root `2S_z`.
    pub fn flat_labels(&self) -> Vec<i64> {
        let mut v: Vec<i64> =
            self.node.internal_postorder().iter().map(|n| n.label().map_or(-1, |l| l as i64)).collect();
        v.push(self.root_2sz.unwrap_or(0));
        v
    }

    pub fn from_flat(node: &Node, flat: &[i64]) -> Result<Tree> {
        let (sz, labels) = flat.split_last().ok_or_else(|| precondition("empty label vector"))?;
        let labels: Vec<usize> = labels.iter().map(|&l| l.max(0) as usize).collect();
        Tree::labelled(node.with_labels(&labels)?, *sz)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Tree> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Every labelling of `node`, all root `S_z` included. These form an
/// orthonormal basis of the leaves' Hilbert space.
pub fn enumerate_labellings(node: &Node) -> Vec<Tree> {
    let mut out = Vec::new();
    for n in labelled_variants(node) {
        let j = n.label().unwrap_or(0) as i64;
        for sz in (-j..=j).step_by(2) {
            out.push(Tree { node: n.clone(), root_2sz: Some(sz) });
        }
    }
    out
}

fn labelled_variants(node: &Node) -> Vec<Node> {
    match node {
        Node::Leaf(q) => vec![Node::Leaf(*q)],
        Node::Internal { left, right, .. } => {
            let ls = labelled_variants(left);
            let rs = labelled_variants(right);
            let mut out = Vec::new();
            for l in &ls {
                for r in &rs {
                    let (a, b) = (l.label().unwrap_or(0), r.label().unwrap_or(0));
                    for j in (a.abs_diff(b)..=a + b).step_by(2) {
                        out.push(Node::join(l.clone(), r.clone(), Some(j)));
                    }
                }
            }
            out
        }
    }
}

/// Random bracketing of `qubits` in shuffled order.
pub fn random_tree(qubits: &[usize], rng: &mut StreamRng) -> Result<Node> {
    if qubits.is_empty() {
        return Err(precondition("tree needs at least one leaf"));
    }
    let mut qs = qubits.to_vec();
    for i in (1..qs.len()).rev() {
        qs.swap(i, rng.below(i + 1));
    }
    let mut nodes: Vec<Node> = qs.into_iter().map(Node::Leaf).collect();
    while nodes.len() > 1 {
        let i = rng.below(nodes.len() - 1);
        let r = nodes.remove(i + 1);
        let l = nodes.remove(i);
        nodes.insert(i, Node::join(l, r, None));
    }
    Ok(nodes.pop().expect("one node left"))
}

/// A uniformly chosen labelling of `node`, optionally restricted to root spin 0.
pub fn random_labelling(node: &Node, root_spin_zero: bool, rng: &mut StreamRng) -> Result<Tree> {
    let all: Vec<Tree> = enumerate_labellings(node)
        .into_iter()
        .filter(|t| !root_spin_zero || t.root_spin() == Some(0))
        .collect();
    if all.is_empty() {
        return Err(precondition("no labelling with the requested root spin"));
    }
    Ok(all[rng.below(all.len())].clone())
}
