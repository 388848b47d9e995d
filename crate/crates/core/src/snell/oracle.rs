//! Brute-force optimal stopping by enumerating every stopping time.

use super::tree::{FiniteTree, TreeProcess};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default cap on the number of stopping times enumerated at one node.
pub const DEFAULT_ORACLE_LIMIT: u128 = 200_000;

/// Number of stopping times of the subtree at `node` (stop here, or
/// continue and pick one independently in every child), saturating.
pub fn stopping_time_count<T: Scalar>(tree: &FiniteTree<T>, node: usize) -> u128 {
    let mut count = vec![1u128; tree.len()];
    for id in tree.subtree(node).into_iter().rev() {
        if !tree.is_leaf(id) {
            let prod = tree
                .children(id)
                .iter()
                .fold(1u128, |acc, &c| acc.saturating_mul(count[c]));
            count[id] = prod.saturating_add(1);
        }
    }
    count[node]
}

/// `max_τ E[X_τ | node]` over all stopping times of the subtree at `node`,
/// by listing the value of every stopping time.
pub fn enumerate_stopping_value<T: Scalar>(x: &TreeProcess<T>, node: usize, limit: u128) -> Result<T> {
    let tree = x.tree();
    if node >= tree.len() {
        return Err(Error::IndexOutOfRange { index: node, max: tree.len() - 1 });
    }
    let count = stopping_time_count(tree, node);
    if count > limit {
        return Err(Error::OracleSize { node, count, limit });
    }
    let values = stopping_values(x, node);
    debug_assert_eq!(values.len() as u128, count);
    Ok(values.into_iter().reduce(T::max_of).expect("at least one stopping time"))
}

/// `E[X_τ | node]` for every stopping time `τ ≥ node`.
fn stopping_values<T: Scalar>(x: &TreeProcess<T>, node: usize) -> Vec<T> {
    let tree = x.tree();
    let mut out = vec![x.value(node).clone()];
    if tree.is_leaf(node) {
        return out;
    }
    // cartesian product over children of their stopping values
    let mut partial = vec![T::zero()];
    for &c in tree.children(node) {
        let p = tree.prob(c).clone();
        let child = stopping_values(x, c);
        partial = partial
            .iter()
            .flat_map(|acc| {
                let p = &p;
                child.iter().map(move |v| acc.clone() + p.clone() * v.clone())
            })
            .collect();
    }
    out.extend(partial);
    out
}
