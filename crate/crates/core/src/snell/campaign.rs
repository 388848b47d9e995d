//! Seeded campaign over random rational trees checking every exact
//! identity of the Snell/Doob–Meyer/future-supremum chain.

use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decomposition::{check_predictable, uniqueness_probe, verify_representation, SnellDecomposition};
use super::oracle::{enumerate_stopping_value, stopping_time_count};
use super::random::{random_martingale, random_process, random_submartingale, random_tree, RandomTreeConfig};
use super::tree::{TreeDocument, TreeProcess};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub trees: usize,
    pub seed: u64,
    pub generator: RandomTreeConfig,
    /// Stopping-time oracle runs on trees no deeper than this.
    pub oracle_max_depth: usize,
    /// Per-node cap on enumerated stopping times.
    pub oracle_limit: u128,
    pub probes_per_tree: usize,
    /// Test hook: corrupt the first tree's decomposition.
    #[serde(default)]
    pub corrupt_decomposition: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            trees: 1000,
            seed: 2024,
            generator: RandomTreeConfig::default(),
            oracle_max_depth: 4,
            oracle_limit: super::oracle::DEFAULT_ORACLE_LIMIT,
            probes_per_tree: 10,
            corrupt_decomposition: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub tree: usize,
    pub check: String,
    pub node: Option<usize>,
    pub witness: TreeDocument,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub trees: usize,
    pub nodes: usize,
    pub oracle_trees: usize,
    pub oracle_nodes: usize,
    pub probes: usize,
    pub predictable_probes: usize,
    pub violations: Vec<Violation>,
}

#[derive(Default)]
struct TreeOutcome {
    nodes: usize,
    oracle_tree: bool,
    oracle_nodes: usize,
    probes: usize,
    predictable_probes: usize,
    violations: Vec<Violation>,
}

pub fn run_campaign(cfg: &CampaignConfig) -> CampaignReport {
    let outcomes: Vec<TreeOutcome> = (0..cfg.trees).into_par_iter().map(|i| check_tree(cfg, i)).collect();
    let mut report = CampaignReport { trees: cfg.trees, ..Default::default() };
    for o in outcomes {
        report.nodes += o.nodes;
        report.oracle_trees += usize::from(o.oracle_tree);
        report.oracle_nodes += o.oracle_nodes;
        report.probes += o.probes;
        report.predictable_probes += o.predictable_probes;
        report.violations.extend(o.violations);
    }
    report
}

fn check_tree(cfg: &CampaignConfig, index: usize) -> TreeOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let tree = random_tree(&mut rng, &cfg.generator);
    let x = random_process(&mut rng, tree.clone(), &cfg.generator);
    let mut out = TreeOutcome { nodes: tree.len(), ..Default::default() };

    let fail = |out: &mut TreeOutcome, check: &str, node: Option<usize>, d: Option<&SnellDecomposition<BigRational>>| {
        let witness = d.map(SnellDecomposition::to_document).unwrap_or_else(|| TreeDocument::from_process(&x));
        out.violations.push(Violation { tree: index, check: check.into(), node, witness });
    };

    let mut d = match SnellDecomposition::compute(&x) {
        Ok(d) => d,
        Err(_) => {
            fail(&mut out, "doob_meyer", None, None);
            return out;
        }
    };
    if cfg.corrupt_decomposition && index == 0 {
        let last = tree.len() - 1;
        d.c.values_mut()[last] += BigRational::from_integer(1.into());
    }

    if let Some(node) = (0..tree.len()).find(|&n| d.y.value(n) < x.value(n)) {
        fail(&mut out, "snell_majorant", Some(node), Some(&d));
    }
    if let Some(node) = d.y.supermartingale_violation() {
        fail(&mut out, "snell_supermartingale", Some(node), Some(&d));
    }
    if let Some(node) = (0..tree.len())
        .filter(|&n| !tree.is_leaf(n))
        .find(|&n| *d.y.value(n) != BigRational::max_of_ref(x.value(n), &tree.conditional_expectation(d.y.values(), n)))
    {
        fail(&mut out, "snell_recursion", Some(node), Some(&d));
    }
    if tree.horizon() <= cfg.oracle_max_depth {
        out.oracle_tree = true;
        for node in 0..tree.len() {
            if stopping_time_count(&tree, node) > cfg.oracle_limit {
                continue;
            }
            out.oracle_nodes += 1;
            match enumerate_stopping_value(&x, node, cfg.oracle_limit) {
                Ok(v) if v == *d.y.value(node) => {}
                _ => fail(&mut out, "stopping_oracle", Some(node), Some(&d)),
            }
        }
    }
    if let Some(node) = (0..tree.len()).find(|&n| *d.y.value(n) != d.m.value(n).clone() + d.b.value(n).clone()) {
        fail(&mut out, "doob_meyer_reconstruction", Some(node), Some(&d));
    }
    if let Some(node) = d.m.martingale_violation() {
        fail(&mut out, "m_martingale", Some(node), Some(&d));
    }
    if *d.m.value(0) != BigRational::from_integer(0.into()) {
        fail(&mut out, "m_starts_at_zero", Some(0), Some(&d));
    }
    if let super::Predictability::Violated { first, .. } = check_predictable(&d.b) {
        fail(&mut out, "b_predictable", Some(first), Some(&d));
    }
    if let Some(node) = d.b.increase_violation() {
        fail(&mut out, "b_nonincreasing", Some(node), Some(&d));
    }
    if let Some(node) = (0..tree.len()).find(|&n| d.c.value(n) != d.b.value(n)) {
        fail(&mut out, "c_equals_b", Some(node), Some(&d));
    }
    if let Err(node) = verify_representation(&d) {
        fail(&mut out, "y_equals_m_plus_c", Some(node), Some(&d));
    }
    if let Some(node) = (0..tree.len()).find(|&n| {
        let own = x.value(n).clone() - d.m.value(n).clone();
        let best = tree.children(n).iter().map(|&c| d.c.value(c).clone()).fold(own, BigRational::max_of);
        best != *d.c.value(n)
    }) {
        fail(&mut out, "c_one_step_recursion", Some(node), Some(&d));
    }

    match uniqueness_probe(&x, &d.m) {
        Ok(v) if v.is_predictable && v.equals_doob_meyer_m => {}
        _ => fail(&mut out, "doob_meyer_probe", None, Some(&d)),
    }
    for _ in 0..cfg.probes_per_tree {
        let Some(n) = random_martingale(&mut rng, &tree) else { break };
        let m_hat = d.m.zip_with(&n, |a, b| a.clone() + b.clone()).expect("same tree");
        out.probes += 1;
        match uniqueness_probe(&x, &m_hat) {
            Ok(v) => {
                out.predictable_probes += usize::from(v.is_predictable);
                if v.is_predictable || v.equals_doob_meyer_m {
                    fail(&mut out, "uniqueness", None, Some(&d));
                }
            }
            Err(_) => fail(&mut out, "uniqueness_precondition", None, Some(&d)),
        }
    }

    let sub = random_submartingale(&mut rng, tree.clone(), &cfg.generator);
    check_submartingale_case(&sub, index, &mut out);
    out
}

/// For a submartingale `X`, `C` is constant and equals `E[X_T]`.
fn check_submartingale_case(x: &TreeProcess<BigRational>, index: usize, out: &mut TreeOutcome) {
    let tree = x.tree();
    let Ok(d) = SnellDecomposition::compute(x) else {
        out.violations.push(Violation { tree: index, check: "submartingale_decomposition".into(), node: None, witness: TreeDocument::from_process(x) });
        return;
    };
    // E[X_T] by summing leaf values against path probabilities
    let mut reach = vec![BigRational::from_integer(1.into()); tree.len()];
    let mut expected_terminal = BigRational::from_integer(0.into());
    for n in 0..tree.len() {
        if let Some(p) = tree.parent(n) {
            reach[n] = reach[p].clone() * tree.prob(n).clone();
        }
        if tree.is_leaf(n) {
            expected_terminal += reach[n].clone() * x.value(n).clone();
        }
    }
    if let Some(node) = (0..tree.len()).find(|&n| *d.c.value(n) != expected_terminal) {
        out.violations.push(Violation { tree: index, check: "submartingale_c_constant".into(), node: Some(node), witness: d.to_document() });
    }
}

trait MaxRef {
    fn max_of_ref(a: &Self, b: &Self) -> Self;
}

impl MaxRef for BigRational {
    fn max_of_ref(a: &Self, b: &Self) -> Self {
        if b > a {
            b.clone()
        } else {
            a.clone()
        }
    }
}
