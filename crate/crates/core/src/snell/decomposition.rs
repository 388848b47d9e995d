use serde::{Deserialize, Serialize};

use super::tree::{TreeDocument, TreeProcess};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest supermartingale dominating `x`:
/// `Y = X` at leaves, `Y = max(X, E[Y_{t+1} | F_t])` above.
pub fn snell_envelope<T: Scalar>(x: &TreeProcess<T>) -> TreeProcess<T> {
    let tree = x.tree().clone();
    let mut y = x.clone();
    for node in (0..tree.len()).rev() {
        if tree.is_leaf(node) {
            continue;
        }
        let cont = tree.conditional_expectation(y.values(), node);
        let v = &mut y.values_mut()[node];
        if cont > *v {
            *v = cont;
        }
    }
    y
}

/// Doob–Meyer split `Y = M + B` of a supermartingale: `M₀ = 0`,
/// `ΔM_{t+1} = Y_{t+1} − E[Y_{t+1} | F_t]` and the predictable
/// `ΔB_{t+1} = E[Y_{t+1} | F_t] − Y_t ≤ 0`, shared by all siblings.
pub fn doob_meyer<T: Scalar>(y: &TreeProcess<T>) -> Result<(TreeProcess<T>, TreeProcess<T>)> {
    let tree = y.tree().clone();
    let mut m = TreeProcess::constant(tree.clone(), T::zero());
    let mut b = TreeProcess::constant(tree.clone(), T::zero());
    b.values_mut()[0] = y.value(0).clone();
    for node in 0..tree.len() {
        if tree.is_leaf(node) {
            continue;
        }
        let e = tree.conditional_expectation(y.values(), node);
        if e > *y.value(node) {
            return Err(Error::NotSupermartingale { node });
        }
        let drop = e.clone() - y.value(node).clone();
        let (m_here, b_here) = (m.value(node).clone(), b.value(node).clone());
        for &c in tree.children(node) {
            m.values_mut()[c] = m_here.clone() + y.value(c).clone() - e.clone();
            b.values_mut()[c] = b_here.clone() + drop.clone();
        }
    }
    Ok((m, b))
}

/// `C_t = max over the subtree at the node of (X − M)`, i.e.
/// `C_t = max(X_t − M_t, max over children C_{t+1})`.
pub fn future_supremum<T: Scalar>(x: &TreeProcess<T>, m: &TreeProcess<T>) -> Result<TreeProcess<T>> {
    let mut c = x.zip_with(m, |a, b| a.clone() - b.clone())?;
    let tree = x.tree().clone();
    for node in (0..tree.len()).rev() {
        for &ch in tree.children(node) {
            if *c.value(ch) > *c.value(node) {
                let v = c.value(ch).clone();
                c.values_mut()[node] = v;
            }
        }
    }
    Ok(c)
}

/// Outcome of a predictability check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictability {
    Predictable,
    /// Two siblings carrying different values.
    Violated { first: usize, second: usize },
}

impl Predictability {
    pub fn holds(&self) -> bool {
        matches!(self, Predictability::Predictable)
    }
}

/// A process is predictable on the tree iff siblings carry equal values
/// (time-`t` value measurable with respect to `F_{t−1}`).
pub fn check_predictable<T: Scalar>(p: &TreeProcess<T>) -> Predictability {
    let tree = p.tree();
    for node in 0..tree.len() {
        let kids = tree.children(node);
        if let Some((&first, rest)) = kids.split_first() {
            if let Some(&second) = rest.iter().find(|&&s| p.value(s) != p.value(first)) {
                return Predictability::Violated { first, second };
            }
        }
    }
    Predictability::Predictable
}

/// `(X, Y, M, B, C)` on one tree.
#[derive(Debug, Clone, PartialEq)]
pub struct SnellDecomposition<T> {
    pub x: TreeProcess<T>,
    pub y: TreeProcess<T>,
    pub m: TreeProcess<T>,
    pub b: TreeProcess<T>,
    pub c: TreeProcess<T>,
}

impl<T: Scalar> SnellDecomposition<T> {
    pub fn compute(x: &TreeProcess<T>) -> Result<Self> {
        let y = snell_envelope(x);
        let (m, b) = doob_meyer(&y)?;
        let c = future_supremum(x, &m)?;
        Ok(Self { x: x.clone(), y, m, b, c })
    }

    /// JSON dump with `y, m, b, c` per node.
    pub fn to_document(&self) -> TreeDocument {
        let mut doc = TreeDocument::from_process(&self.x);
        for rec in &mut doc.nodes {
            rec.y = Some(self.y.value(rec.id).to_text());
            rec.m = Some(self.m.value(rec.id).to_text());
            rec.b = Some(self.b.value(rec.id).to_text());
            rec.c = Some(self.c.value(rec.id).to_text());
        }
        doc
    }
}

/// Checks `Y = M + C` at every node; `Err(node)` names the first violation.
pub fn verify_representation<T: Scalar>(d: &SnellDecomposition<T>) -> std::result::Result<(), usize> {
    let tree = d.y.tree();
    match (0..tree.len()).find(|&n| *d.y.value(n) != d.m.value(n).clone() + d.c.value(n).clone()) {
        Some(node) => Err(node),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniquenessVerdict {
    pub is_predictable: bool,
    pub equals_doob_meyer_m: bool,
}

impl UniquenessVerdict {
    /// A predictable future supremum must come from the Doob–Meyer martingale.
    pub fn consistent(&self) -> bool {
        !self.is_predictable || self.equals_doob_meyer_m
    }
}

/// Future supremum of `X − M̂` for a candidate martingale `M̂` (`M̂₀ = 0`),
/// reported against the Doob–Meyer martingale of the Snell envelope.
pub fn uniqueness_probe<T: Scalar>(x: &TreeProcess<T>, m_hat: &TreeProcess<T>) -> Result<UniquenessVerdict> {
    x.ensure_same_tree(m_hat)?;
    if let Some(node) = m_hat.martingale_violation() {
        return Err(Error::Precondition(format!("candidate is not a martingale at node {node}")));
    }
    if *m_hat.value(0) != T::zero() {
        return Err(Error::Precondition("candidate martingale must start at 0".into()));
    }
    let c_hat = future_supremum(x, m_hat)?;
    let (m, _) = doob_meyer(&snell_envelope(x))?;
    Ok(UniquenessVerdict {
        is_predictable: check_predictable(&c_hat).holds(),
        equals_doob_meyer_m: m.values() == m_hat.values(),
    })
}
