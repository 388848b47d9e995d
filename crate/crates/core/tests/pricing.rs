mod common;

use amopt::linalg::Matrix;
use amopt::market::{MarketModel, PayoffSpec};
use amopt::pde::{complementarity_residual, solve_obstacle, PsorSettings, SpatialGrid, SweepOrder, ValueSurface};
use amopt::snell::tree_from_market;

fn put_surface(nodes: usize, steps: usize) -> (MarketModel<f64>, ValueSurface<f64>) {
    let model = MarketModel::black_scholes(0.05, 0.0, 0.2, 1.0).unwrap();
    let grid = SpatialGrid::around(&model, &[100.0], &[nodes], 6.0, steps).unwrap();
    let surface = solve_obstacle(&model, &PayoffSpec::put_on_min(100.0), &grid, &PsorSettings::default()).unwrap();
    (model, surface)
}

#[test]
fn american_put_agrees_with_independent_binomial() {
    let (_, surface) = put_surface(400, 1000);
    let pde = surface.eval_v(0.0, &[100.0]).unwrap();
    let crr = common::crr_american_put(100.0, 100.0, 0.05, 0.2, 1.0, 10_000);
    assert!(((pde - crr) / crr).abs() < 0.005, "pde {pde} crr {crr}");
    // early exercise premium over the European price
    assert!(pde > common::bs_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0));
}

#[test]
fn library_lattice_agrees_with_pde_at_1000_steps() {
    let (model, surface) = put_surface(400, 1000);
    let lattice = tree_from_market::<f64, f64>(&model, 1000, 100.0, &PayoffSpec::put_on_min(100.0), 1 << 52).unwrap();
    let tree = lattice.root_value();
    let pde = surface.eval_v(0.0, &[100.0]).unwrap();
    assert!(((pde - tree) / tree).abs() < 0.005, "pde {pde} tree {tree}");
}

#[test]
fn value_dominates_obstacle_and_decreases_in_time() {
    let (_, surface) = put_surface(120, 120);
    let grid = surface.grid();
    for k in 0..grid.layers() - 1 {
        for node in 0..grid.node_count() {
            let v = surface.value_at(k, node);
            let psi = surface.payoff().value(&grid.prices(node));
            assert!(v >= psi - 1e-12);
            // time-homogeneous model: more time to maturity is worth more
            assert!(v >= surface.value_at(k + 1, node) - 1e-8, "layer {k} node {node}");
        }
    }
}

#[test]
fn gradient_respects_the_lipschitz_bound() {
    let (_, surface) = put_surface(150, 150);
    let grid = surface.grid();
    for k in 0..grid.layers() {
        for node in 0..grid.node_count() {
            let g = surface.gradient_at(k, node)[0];
            assert!((-1.0 - 1e-9..=1e-9).contains(&g), "layer {k} node {node}: {g}");
        }
    }
}

#[test]
fn value_is_convex_in_price() {
    let (_, surface) = put_surface(150, 150);
    let grid = surface.grid();
    let prices: Vec<f64> = (0..grid.node_count()).map(|i| grid.prices(i)[0]).collect();
    for k in [0, 50, 100, 149] {
        let v = surface.layer(k);
        let slopes: Vec<f64> = (1..v.len()).map(|i| (v[i] - v[i - 1]) / (prices[i] - prices[i - 1])).collect();
        for i in 1..slopes.len() {
            assert!(slopes[i] >= slopes[i - 1] - 1e-7, "layer {k} node {i}");
        }
    }
}

#[test]
fn refinement_approaches_the_oracle() {
    let crr = common::crr_american_put(100.0, 100.0, 0.05, 0.2, 1.0, 10_000);
    let errors: Vec<f64> = [(50, 50), (100, 200), (400, 1000)]
        .iter()
        .map(|&(n, t)| (put_surface(n, t).1.eval_v(0.0, &[100.0]).unwrap() - crr).abs())
        .collect();
    assert!(errors[2] < errors[0], "{errors:?}");
}

#[test]
fn complementarity_holds_to_solver_tolerance() {
    let (model, surface) = put_surface(100, 100);
    let (positive, continuation) = complementarity_residual(&surface, &model).unwrap();
    assert!(positive < 1e-5 && continuation < 1e-5, "{positive} {continuation}");
}

#[test]
fn red_black_matches_lexicographic_in_two_dimensions() {
    let vol = Matrix::from_rows(&[vec![0.25, 0.0], vec![0.1, 0.2]]);
    let model = MarketModel::constant(0.05, 0.5, 0.01, &[0.0, 0.0], &vol).unwrap();
    let grid = SpatialGrid::around(&model, &[100.0, 100.0], &[25, 25], 4.0, 20).unwrap();
    let payoff = PayoffSpec::put_on_min(100.0);
    let lex: ValueSurface<f64> = solve_obstacle(&model, &payoff, &grid, &PsorSettings::default()).unwrap();
    let rb = solve_obstacle(&model, &payoff, &grid, &PsorSettings { ordering: SweepOrder::RedBlack, ..Default::default() }).unwrap();
    let diff = lex.values().iter().zip(rb.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-6, "{diff}");
    // put on the min of two assets is worth more than the put on either one
    let single = put_surface(100, 100).1.eval_v(0.5, &[100.0]).unwrap();
    assert!(lex.eval_v(0.0, &[100.0, 100.0]).unwrap() > single);
}

#[test]
fn single_precision_surface_tracks_double() {
    let model = MarketModel::<f32>::black_scholes(0.05, 0.0, 0.2, 1.0).unwrap();
    let grid = SpatialGrid::around(&model, &[100.0], &[80], 6.0, 80).unwrap();
    let settings = PsorSettings { tolerance: 1e-5, ..Default::default() };
    let v32 = solve_obstacle(&model, &PayoffSpec::put_on_min(100.0), &grid, &settings).unwrap().eval_v(0.0, &[100.0]).unwrap();
    let v64 = put_surface(80, 80).1.eval_v(0.0, &[100.0]).unwrap();
    assert!((v32 as f64 - v64).abs() < 2e-3, "{v32} {v64}");
}
