use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Finite filtered probability space: nodes at depth `t` are the atoms of
/// `F_t`. Node ids are topologically ordered (parents before children) and
/// every leaf sits at depth `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteTree<T> {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    /// Conditional probability of reaching the node from its parent.
    prob: Vec<T>,
    depth: Vec<usize>,
    horizon: usize,
}

impl<T: Scalar> FiniteTree<T> {
    /// Builds a tree from parent links and branch probabilities. Node 0 is
    /// the root (parent `None`, probability ignored and stored as 1).
    pub fn from_parents(parents: Vec<Option<usize>>, probs: Vec<T>) -> Result<Self> {
        let len = parents.len();
        if len == 0 {
            return Err(Error::Tree("tree needs a root".into()));
        }
        if probs.len() != len {
            return Err(Error::Tree(format!("{} probabilities for {len} nodes", probs.len())));
        }
        if parents[0].is_some() {
            return Err(Error::Tree("node 0 must be the root".into()));
        }
        let mut children = vec![Vec::new(); len];
        let mut depth = vec![0; len];
        for (id, p) in parents.iter().enumerate().skip(1) {
            let p = p.ok_or_else(|| Error::Tree(format!("node {id} has no parent; only node 0 may be a root")))?;
            if p >= id {
                return Err(Error::Tree(format!("node {id} lists parent {p}; parents must precede children")));
            }
            children[p].push(id);
            depth[id] = depth[p] + 1;
        }
        let mut prob = probs;
        prob[0] = T::one();
        let horizon = depth.iter().copied().max().unwrap_or(0);
        let tol = T::probability_tolerance();
        for id in 0..len {
            if children[id].is_empty() {
                if depth[id] != horizon {
                    return Err(Error::Tree(format!("leaf {id} at depth {} but horizon is {horizon}", depth[id])));
                }
                continue;
            }
            let mut total = T::zero();
            for &c in &children[id] {
                if !(prob[c] > T::zero()) {
                    return Err(Error::Tree(format!("branch probability of node {c} must be positive")));
                }
                total = total + prob[c].clone();
            }
            let gap = total - T::one();
            if gap > tol.clone() || -gap > tol.clone() {
                return Err(Error::Tree(format!("probabilities below node {id} do not sum to one")));
            }
        }
        Ok(Self { parent: parents, children, prob, depth, horizon })
    }

    /// Single deterministic path with `depth` steps.
    pub fn single_path(depth: usize) -> Self {
        let parents = (0..=depth).map(|i| i.checked_sub(1)).collect();
        Self::from_parents(parents, vec![T::one(); depth + 1]).expect("path tree is well formed")
    }

    /// Complete tree with `branching` equally likely children per node.
    pub fn uniform(depth: usize, branching: usize) -> Result<Self> {
        if branching == 0 {
            return Err(Error::Tree("branching must be positive".into()));
        }
        let mut parents = vec![None];
        let mut frontier = vec![0usize];
        for _ in 0..depth {
            let mut next = Vec::new();
            for &p in &frontier {
                for _ in 0..branching {
                    next.push(parents.len());
                    parents.push(Some(p));
                }
            }
            frontier = next;
        }
        let p = T::from_ratio(1, branching as i64);
        let len = parents.len();
        Self::from_parents(parents, vec![p; len])
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn prob(&self, node: usize) -> &T {
        &self.prob[node]
    }

    pub fn depth(&self, node: usize) -> usize {
        self.depth[node]
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.children[node].is_empty()
    }

    /// Nodes of the subtree rooted at `node`, including it.
    pub fn subtree(&self, node: usize) -> Vec<usize> {
        let mut out = vec![node];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.children[out[i]]);
            i += 1;
        }
        out
    }

    /// `E[v_{t+1} | node]` for a non-leaf node.
    pub fn conditional_expectation(&self, values: &[T], node: usize) -> T {
        self.children[node]
            .iter()
            .fold(T::zero(), |acc, &c| acc + self.prob[c].clone() * values[c].clone())
    }
}

/// An adapted process: one value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeProcess<T> {
    tree: Arc<FiniteTree<T>>,
    values: Vec<T>,
}

impl<T: Scalar> TreeProcess<T> {
    pub fn new(tree: Arc<FiniteTree<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != tree.len() {
            return Err(Error::Tree(format!("{} values for {} nodes", values.len(), tree.len())));
        }
        Ok(Self { tree, values })
    }

    pub fn constant(tree: Arc<FiniteTree<T>>, value: T) -> Self {
        let values = vec![value; tree.len()];
        Self { tree, values }
    }

    pub fn from_fn(tree: Arc<FiniteTree<T>>, f: impl Fn(usize) -> T) -> Self {
        let values = (0..tree.len()).map(f).collect();
        Self { tree, values }
    }

    pub fn tree(&self) -> &Arc<FiniteTree<T>> {
        &self.tree
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, node: usize) -> &T {
        &self.values[node]
    }

    pub fn same_tree(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.tree, &other.tree) || self.tree == other.tree
    }

    pub(crate) fn ensure_same_tree(&self, other: &Self) -> Result<()> {
        if self.same_tree(other) {
            Ok(())
        } else {
            Err(Error::TreeMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(usize, &T) -> T) -> Self {
        let values = self.values.iter().enumerate().map(|(i, v)| f(i, v)).collect();
        Self { tree: self.tree.clone(), values }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Result<Self> {
        self.ensure_same_tree(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect();
        Ok(Self { tree: self.tree.clone(), values })
    }

    pub(crate) fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// First node where `E[P_{t+1} | F_t] ≠ P_t`, if any.
    pub fn martingale_violation(&self) -> Option<usize> {
        (0..self.tree.len())
            .filter(|&n| !self.tree.is_leaf(n))
            .find(|&n| self.tree.conditional_expectation(&self.values, n) != self.values[n])
    }

    /// First node where `E[P_{t+1} | F_t] > P_t`, if any.
    pub fn supermartingale_violation(&self) -> Option<usize> {
        (0..self.tree.len())
            .filter(|&n| !self.tree.is_leaf(n))
            .find(|&n| self.tree.conditional_expectation(&self.values, n) > self.values[n])
    }

    /// First node whose value exceeds its parent's, if any.
    pub fn increase_violation(&self) -> Option<usize> {
        (1..self.tree.len()).find(|&n| {
            let p = self.tree.parent(n).expect("non-root has parent");
            self.values[n] > self.values[p]
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub prob: String,
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
}

/// JSON form of a tree process: `{"nodes": [{id, parent, prob, value}, …]}`
/// with `"num/den"` strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub nodes: Vec<NodeRecord>,
}

impl TreeDocument {
    pub fn from_process<T: Scalar>(x: &TreeProcess<T>) -> Self {
        let tree = x.tree();
        let nodes = (0..tree.len())
            .map(|id| NodeRecord {
                id,
                parent: tree.parent(id),
                prob: tree.prob(id).to_text(),
                value: x.value(id).to_text(),
                y: None,
                m: None,
                b: None,
                c: None,
            })
            .collect();
        Self { nodes }
    }

    pub fn to_process<T: Scalar>(&self) -> Result<TreeProcess<T>> {
        let mut nodes = self.nodes.clone();
        nodes.sort_by_key(|n| n.id);
        if nodes.iter().enumerate().any(|(i, n)| n.id != i) {
            return Err(Error::Tree("node ids must be 0..len".into()));
        }
        let parse = |s: &str| T::parse_text(s).ok_or_else(|| Error::Tree(format!("cannot parse number {s:?}")));
        let parents = nodes.iter().map(|n| n.parent).collect();
        let probs = nodes.iter().map(|n| parse(&n.prob)).collect::<Result<Vec<_>>>()?;
        let values = nodes.iter().map(|n| parse(&n.value)).collect::<Result<Vec<_>>>()?;
        let tree = Arc::new(FiniteTree::from_parents(parents, probs)?);
        TreeProcess::new(tree, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    #[test]
    fn builds_and_validates() {
        let t = FiniteTree::from_parents(vec![None, Some(0), Some(0)], vec![q(1, 1), q(1, 3), q(2, 3)]).unwrap();
        assert_eq!(t.horizon(), 1);
        assert_eq!(t.children(0), &[1, 2]);
        let bad_sum = FiniteTree::from_parents(vec![None, Some(0), Some(0)], vec![q(1, 1), q(1, 3), q(1, 3)]);
        assert!(bad_sum.is_err());
        let zero_prob = FiniteTree::from_parents(vec![None, Some(0), Some(0)], vec![q(1, 1), q(0, 1), q(1, 1)]);
        assert!(zero_prob.is_err());
        let ragged = FiniteTree::from_parents(vec![None, Some(0), Some(0), Some(1)], vec![q(1, 1), q(1, 2), q(1, 2), q(1, 1)]);
        assert!(ragged.is_err());
        let forward = FiniteTree::<Q>::from_parents(vec![None, Some(2), Some(0)], vec![q(1, 1); 3]);
        assert!(forward.is_err());
    }

    #[test]
    fn uniform_and_path() {
        let t = FiniteTree::<Q>::uniform(3, 2).unwrap();
        assert_eq!(t.len(), 15);
        assert_eq!(t.subtree(1).len(), 7);
        let p = FiniteTree::<Q>::single_path(4);
        assert_eq!(p.len(), 5);
        assert_eq!(p.horizon(), 4);
    }

    #[test]
    fn json_round_trip() {
        let t = Arc::new(FiniteTree::from_parents(vec![None, Some(0), Some(0)], vec![q(1, 1), q(1, 3), q(2, 3)]).unwrap());
        let x = TreeProcess::new(t, vec![q(1, 1), q(-7, 2), q(4, 1)]).unwrap();
        let doc = TreeDocument::from_process(&x);
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.contains(r#""prob":"1/3""#));
        assert!(text.contains(r#""value":"-7/2""#));
        let back: TreeProcess<Q> = serde_json::from_str::<TreeDocument>(&text).unwrap().to_process().unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn martingale_checks() {
        let t = Arc::new(FiniteTree::<Q>::uniform(1, 2).unwrap());
        let m = TreeProcess::new(t.clone(), vec![q(0, 1), q(-1, 1), q(1, 1)]).unwrap();
        assert_eq!(m.martingale_violation(), None);
        let s = TreeProcess::new(t, vec![q(0, 1), q(0, 1), q(1, 1)]).unwrap();
        assert_eq!(s.martingale_violation(), Some(0));
        assert_eq!(s.supermartingale_violation(), Some(0));
        assert_eq!(s.increase_violation(), Some(2));
    }
}
