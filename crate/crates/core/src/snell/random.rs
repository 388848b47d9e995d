//! Random finite trees and processes with small exact rational data.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{FiniteTree, TreeProcess};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomTreeConfig {
    pub min_depth: usize,
    pub max_depth: usize,
    pub max_branching: usize,
    /// Largest denominator of a branch probability.
    pub max_prob_den: u32,
    /// Values lie in `[−value_bound, value_bound]`.
    pub value_bound: i64,
    pub max_value_den: i64,
}

impl Default for RandomTreeConfig {
    fn default() -> Self {
        Self { min_depth: 1, max_depth: 6, max_branching: 3, max_prob_den: 64, value_bound: 8, max_value_den: 16 }
    }
}

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Random tree: depth in `[min_depth, max_depth]`, branching `1..=max_branching`
/// per node, probabilities `kᵢ/den` with `den ≤ max_prob_den`.
pub fn random_tree<R: Rng>(rng: &mut R, cfg: &RandomTreeConfig) -> Arc<FiniteTree<BigRational>> {
    let depth = rng.gen_range(cfg.min_depth..=cfg.max_depth.max(cfg.min_depth));
    let mut parents = vec![None];
    let mut probs = vec![BigRational::from_integer(1.into())];
    let mut frontier = vec![0usize];
    for _ in 0..depth {
        let mut next = Vec::new();
        for &node in &frontier {
            let branching = rng.gen_range(1..=cfg.max_branching.max(1));
            for p in random_distribution(rng, branching, cfg.max_prob_den) {
                next.push(parents.len());
                parents.push(Some(node));
                probs.push(p);
            }
        }
        frontier = next;
    }
    Arc::new(FiniteTree::from_parents(parents, probs).expect("generated tree is well formed"))
}

/// `k` positive rationals with a common denominator `≤ max_den` summing to 1.
fn random_distribution<R: Rng>(rng: &mut R, k: usize, max_den: u32) -> Vec<BigRational> {
    if k == 1 {
        return vec![rational(1, 1)];
    }
    let den = rng.gen_range(k as u32..=max_den.max(k as u32));
    let mut cuts: Vec<u32> = sample(rng, (den - 1) as usize, k - 1).into_iter().map(|c| c as u32 + 1).collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut out = Vec::with_capacity(k);
    for c in cuts.into_iter().chain(std::iter::once(den)) {
        out.push(rational(i64::from(c - prev), i64::from(den)));
        prev = c;
    }
    out
}

pub fn random_value<R: Rng>(rng: &mut R, cfg: &RandomTreeConfig) -> BigRational {
    let den = rng.gen_range(1..=cfg.max_value_den.max(1));
    let bound = cfg.value_bound * den;
    rational(rng.gen_range(-bound..=bound), den)
}

pub fn random_process<R: Rng>(rng: &mut R, tree: Arc<FiniteTree<BigRational>>, cfg: &RandomTreeConfig) -> TreeProcess<BigRational> {
    let values = (0..tree.len()).map(|_| random_value(rng, cfg)).collect();
    TreeProcess::new(tree, values).expect("one value per node")
}

/// Random submartingale: children are shifted so that
/// `E[X_{t+1} | F_t] = X_t + drift`, `drift ≥ 0`.
pub fn random_submartingale<R: Rng>(
    rng: &mut R,
    tree: Arc<FiniteTree<BigRational>>,
    cfg: &RandomTreeConfig,
) -> TreeProcess<BigRational> {
    let mut values: Vec<BigRational> = (0..tree.len()).map(|_| random_value(rng, cfg)).collect();
    for node in 0..tree.len() {
        if tree.is_leaf(node) {
            continue;
        }
        let drift = rational(rng.gen_range(0..=4), rng.gen_range(1..=8));
        let mean = tree.conditional_expectation(&values, node);
        let shift = values[node].clone() + drift - mean;
        for &c in tree.children(node) {
            values[c] += shift.clone();
        }
    }
    TreeProcess::new(tree, values).expect("one value per node")
}

/// Nonzero martingale `N` with `N₀ = 0`: at up to three branching nodes the
/// children's subtrees are shifted by `δ_c` with `Σ p_c δ_c = 0`. `None`
/// when the tree has no branching node (every martingale is then zero).
pub fn random_martingale<R: Rng>(rng: &mut R, tree: &Arc<FiniteTree<BigRational>>) -> Option<TreeProcess<BigRational>> {
    let branching: Vec<usize> = (0..tree.len()).filter(|&n| tree.children(n).len() >= 2).collect();
    if branching.is_empty() {
        return None;
    }
    let mut values = vec![rational(0, 1); tree.len()];
    let picks = rng.gen_range(1..=branching.len().min(3));
    for k in sample(rng, branching.len(), picks) {
        let node = branching[k];
        let kids = tree.children(node);
        let (last, rest) = kids.split_last().expect("branching node");
        let mut weighted = rational(0, 1);
        let mut deltas = Vec::with_capacity(kids.len());
        for &c in rest {
            let eps = rational(rng.gen_range(1..=32), rng.gen_range(1..=16));
            let delta = if rng.gen_bool(0.5) { eps } else { -eps };
            weighted += tree.prob(c).clone() * delta.clone();
            deltas.push((c, delta));
        }
        deltas.push((*last, -weighted / tree.prob(*last).clone()));
        for (c, delta) in deltas {
            for id in tree.subtree(c) {
                values[id] += delta.clone();
            }
        }
    }
    Some(TreeProcess::new(tree.clone(), values).expect("one value per node"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{Signed, Zero};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_objects_respect_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = RandomTreeConfig::default();
        for _ in 0..200 {
            let tree = random_tree(&mut rng, &cfg);
            assert!(tree.horizon() >= 1 && tree.horizon() <= 6);
            for n in 0..tree.len() {
                assert!(tree.children(n).len() <= 3);
                if n > 0 {
                    assert!(*tree.prob(n.max(1)).denom() <= BigInt::from(64));
                }
            }
            let x = random_process(&mut rng, tree.clone(), &cfg);
            assert!(x.values().iter().all(|v| v.abs() <= rational(8, 1) && *v.denom() <= BigInt::from(16)));
            let sub = random_submartingale(&mut rng, tree.clone(), &cfg);
            for n in (0..tree.len()).filter(|&n| !tree.is_leaf(n)) {
                assert!(tree.conditional_expectation(sub.values(), n) >= *sub.value(n));
            }
            if let Some(m) = random_martingale(&mut rng, &tree) {
                assert_eq!(m.martingale_violation(), None);
                assert!(m.value(0).is_zero());
                assert!(m.values().iter().any(|v| !v.is_zero()));
            }
        }
    }
}
