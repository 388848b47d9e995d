use std::sync::Arc;

use amopt::market::{MarketModel, PayoffSpec};
use amopt::snell::random::{random_martingale, random_process, random_submartingale, random_tree, RandomTreeConfig};
use amopt::snell::{
    check_predictable, doob_meyer, enumerate_stopping_value, future_supremum, snell_envelope, tree_from_market, uniqueness_probe,
    verify_representation, FiniteTree, SnellDecomposition, TreeDocument, TreeProcess, DEFAULT_ORACLE_LIMIT,
};
use amopt::Rational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn small_config() -> RandomTreeConfig {
    RandomTreeConfig { max_depth: 4, max_branching: 2, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn snell_envelope_is_the_optimal_stopping_value(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(&mut rng, &small_config());
        let x = random_process(&mut rng, tree.clone(), &small_config());
        let y = snell_envelope(&x);
        for node in 0..tree.len() {
            prop_assert_eq!(y.value(node), &enumerate_stopping_value(&x, node, DEFAULT_ORACLE_LIMIT).unwrap());
        }
    }

    #[test]
    fn decomposition_identities_hold_exactly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = RandomTreeConfig::default();
        let tree = random_tree(&mut rng, &cfg);
        let x = random_process(&mut rng, tree.clone(), &cfg);
        let d = SnellDecomposition::compute(&x).unwrap();
        prop_assert!(d.y.supermartingale_violation().is_none());
        prop_assert!(d.m.martingale_violation().is_none());
        prop_assert!(d.m.value(0).is_zero());
        prop_assert!(check_predictable(&d.b).holds());
        prop_assert!(d.b.increase_violation().is_none());
        prop_assert_eq!(d.c.values(), d.b.values());
        prop_assert!(verify_representation(&d).is_ok());
        for node in 0..tree.len() {
            prop_assert!(d.y.value(node) >= x.value(node));
            prop_assert_eq!(&(d.m.value(node).clone() + d.b.value(node).clone()), d.y.value(node));
        }
    }

    #[test]
    fn perturbed_martingales_break_predictability(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = RandomTreeConfig::default();
        let tree = random_tree(&mut rng, &cfg);
        let x = random_process(&mut rng, tree.clone(), &cfg);
        let (m, _) = doob_meyer(&snell_envelope(&x)).unwrap();
        if let Some(n) = random_martingale(&mut rng, &tree) {
            let m_hat = m.zip_with(&n, |a, b| a.clone() + b.clone()).unwrap();
            let verdict = uniqueness_probe(&x, &m_hat).unwrap();
            prop_assert!(!verdict.equals_doob_meyer_m);
            prop_assert!(!verdict.is_predictable);
        }
    }

    #[test]
    fn submartingales_have_constant_future_supremum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = RandomTreeConfig::default();
        let tree = random_tree(&mut rng, &cfg);
        let x = random_submartingale(&mut rng, tree.clone(), &cfg);
        let d = SnellDecomposition::compute(&x).unwrap();
        let leaves: Vec<usize> = (0..tree.len()).filter(|&n| tree.is_leaf(n)).collect();
        let expected_terminal = leaves.iter().fold(Rational::zero(), |acc, &leaf| {
            let mut p = Rational::one();
            let mut node = leaf;
            while let Some(parent) = tree.parent(node) {
                p *= tree.prob(node).clone();
                node = parent;
            }
            acc + p * x.value(leaf).clone()
        });
        prop_assert_eq!(d.c.value(0), &expected_terminal);
        for node in 1..tree.len() {
            prop_assert_eq!(d.c.value(node), d.c.value(tree.parent(node).unwrap()));
        }
    }
}

#[test]
fn nonincreasing_payoff_is_its_own_envelope() {
    let tree = Arc::new(FiniteTree::single_path(2));
    let x = TreeProcess::new(tree, vec![q(3, 1), q(2, 1), q(1, 1)]).unwrap();
    let d = SnellDecomposition::compute(&x).unwrap();
    assert_eq!(d.y.values(), x.values());
    assert!(d.m.values().iter().all(Zero::is_zero));
    assert_eq!(d.c.values(), x.values());
}

#[test]
fn unadjusted_future_supremum_is_not_predictable() {
    let tree = Arc::new(FiniteTree::uniform(1, 2).unwrap());
    let x = TreeProcess::new(tree.clone(), vec![q(1, 1), q(0, 1), q(4, 1)]).unwrap();
    let c = future_supremum(&x, &TreeProcess::constant(tree, q(0, 1))).unwrap();
    assert_eq!(c.values(), &[q(4, 1), q(0, 1), q(4, 1)]);
    assert!(!check_predictable(&c).holds());
}

#[test]
fn documents_round_trip_through_json() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let tree = random_tree(&mut rng, &RandomTreeConfig::default());
    let x = random_process(&mut rng, tree, &RandomTreeConfig::default());
    let doc = SnellDecomposition::compute(&x).unwrap().to_document();
    let text = serde_json::to_string(&doc).unwrap();
    let back: TreeDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(back, doc);
    assert_eq!(back.to_process::<Rational>().unwrap().values(), x.values());
}

#[test]
fn exact_lattice_matches_its_expanded_tree() {
    let model = MarketModel::black_scholes(0.05, 0.0, 0.2, 1.0).unwrap();
    let put = PayoffSpec::put_on_min(100.0);
    let lattice = tree_from_market::<Rational, f64>(&model, 10, 100.0, &put, 1 << 20).unwrap();
    let x = lattice.expand().unwrap();
    assert_eq!(x.tree().len(), (1 << 11) - 1);
    let y = snell_envelope(&x);
    assert_eq!(y.value(0), &lattice.root_value());
    let d = SnellDecomposition::compute(&x).unwrap();
    assert_eq!(d.c.values(), d.b.values());
    assert!(verify_representation(&d).is_ok());
    // the double lattice keeps p unrounded; the rational one rounds it to 2^-20
    let approx = tree_from_market::<f64, f64>(&model, 10, 100.0, &put, 1 << 20).unwrap().root_value();
    let exact: f64 = num_traits::ToPrimitive::to_f64(&lattice.root_value()).unwrap();
    assert!((approx - exact).abs() < 1e-4, "{approx} {exact}");
}

#[test]
fn zero_payoff_lattice_is_zero() {
    let model = MarketModel::black_scholes(0.05, 0.0, 0.2, 1.0).unwrap();
    let lattice = tree_from_market::<Rational, f64>(&model, 12, 100.0, &PayoffSpec::zero(1), 1 << 20).unwrap();
    assert!(lattice.snell_envelope().iter().flatten().all(Zero::is_zero));
}
