//! Parabolic obstacle problem `max{Lf, ψ − f} = 0`, `f(T, ·) = ψ`, solved
//! backward in time on a log-space grid with implicit Euler and projected
//! SOR, plus the price-space gradient of the solution.
//!
//! Boundary nodes are pinned to `ψ`: for the shipped payoffs this is the
//! deep in-the-money asymptote on one side and `0` on the out-of-the-money
//! side.

mod grid;
mod operator;
mod psor;
mod surface;

pub use grid::{Axis, SpatialGrid};
pub use operator::apply_operator;
pub use psor::{PsorSettings, SweepOrder};
pub use surface::{SolverReport, ValueSurface};

use crate::error::{Error, Result};
use crate::market::{MarketModel, PayoffSpec};
use crate::scalar::Real;

/// Backward induction from `f(T, ·) = ψ`.
pub fn solve_obstacle<T: Real>(
    model: &MarketModel<T>,
    payoff: &PayoffSpec<T>,
    grid: &SpatialGrid<T>,
    settings: &PsorSettings,
) -> Result<ValueSurface<T>> {
    let n = model.n();
    if grid.dim() != n {
        return Err(Error::Grid(format!("grid has {} axes for {n} assets", grid.dim())));
    }
    if n > 2 {
        return Err(Error::Grid(format!("the dense-grid solver supports n <= 2, got {n}")));
    }
    payoff.check_dimension(n)?;
    let horizon = model.horizon();
    let tg = grid.time();
    if tg.t0() < T::zero() || tg.end() > horizon + T::epsilon() * horizon {
        return Err(Error::Grid("time layers must lie within [0, T]".into()));
    }
    model.validate(&ellipticity_samples(grid))?;

    let nodes = grid.node_count();
    let layers = grid.layers();
    let obstacle: Vec<T> = (0..nodes).map(|k| payoff.value(&grid.prices(k))).collect();
    let mut values = vec![T::zero(); nodes * layers];
    values[(layers - 1) * nodes..].copy_from_slice(&obstacle);

    let interior = grid.interior_nodes();
    let multi: Vec<Vec<usize>> = interior.iter().map(|&k| grid.multi_index(k)).collect();
    let order = psor::sweep_order(&multi, settings.ordering);
    let dt = tg.dt();
    let time_independent = model.is_time_independent();
    let mut stencils = operator::build_stencils(grid, model, tg.time(layers - 2))?;

    let mut iterations = vec![0; layers];
    let mut residuals = vec![0.0; layers];
    for k in (0..layers - 1).rev() {
        if !time_independent {
            stencils = operator::build_stencils(grid, model, tg.time(k))?;
        }
        let (head, tail) = values.split_at_mut((k + 1) * nodes);
        let rhs = &tail[..nodes];
        let v = &mut head[k * nodes..];
        for node in 0..nodes {
            v[node] = rhs[node].max(obstacle[node]);
        }
        let solve = psor::solve_layer(&stencils, &order, dt, rhs, &obstacle, v, settings);
        if !solve.converged {
            return Err(Error::SolverDivergence { layer: k, residual: solve.residual, iterations: solve.iterations });
        }
        iterations[k] = solve.iterations;
        residuals[k] = solve.residual;
    }

    let mut gradient = vec![T::zero(); nodes * layers * n];
    for k in 0..layers - 1 {
        let layer = &values[k * nodes..(k + 1) * nodes];
        for node in 0..nodes {
            let g = price_gradient(grid, layer, node);
            gradient[(k * nodes + node) * n..(k * nodes + node + 1) * n].copy_from_slice(&g);
        }
    }
    for node in 0..nodes {
        let g = payoff.gradient(&grid.prices(node));
        let at = ((layers - 1) * nodes + node) * n;
        gradient[at..at + n].copy_from_slice(&g);
    }

    let exercise = values
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            let psi = obstacle[idx % nodes];
            psi > T::zero() && v == psi
        })
        .collect();

    let report = SolverReport {
        nodes_per_axis: grid.axes().iter().map(|a| a.nodes).collect(),
        time_steps: tg.steps(),
        psor: *settings,
        total_iterations: iterations.iter().sum(),
        iterations,
        residuals,
        terminal_gradient_from_payoff: true,
    };
    Ok(ValueSurface { grid: grid.clone(), payoff: payoff.clone(), values, gradient, exercise, report })
}

/// `∂v/∂Sⁱ` as the difference quotient across the neighboring price nodes
/// (one-sided on the edges). This matches `(1/S) ∂v/∂x` to `O(h²)` and is
/// exact wherever `v` is linear in `S`.
fn price_gradient<T: Real>(grid: &SpatialGrid<T>, layer: &[T], node: usize) -> Vec<T> {
    let multi = grid.multi_index(node);
    let strides = grid.strides();
    grid.axes()
        .iter()
        .enumerate()
        .map(|(i, axis)| {
            let stride = strides[i];
            let at = multi[i];
            let lo = if at == 0 { 0 } else { at - 1 };
            let hi = if at + 1 == axis.nodes { at } else { at + 1 };
            let lo_node = node + lo * stride - at * stride;
            let hi_node = node + hi * stride - at * stride;
            (layer[hi_node] - layer[lo_node]) / (axis.x(hi).exp() - axis.x(lo).exp())
        })
        .collect()
}

/// Interior nodes of the first and last layers, thinned to at most ~2000
/// points.
fn ellipticity_samples<T: Real>(grid: &SpatialGrid<T>) -> Vec<(T, Vec<T>)> {
    let interior = grid.interior_nodes();
    let stride = (interior.len() / 1000).max(1);
    let tg = grid.time();
    [tg.t0(), tg.end()]
        .into_iter()
        .flat_map(|t| interior.iter().step_by(stride).map(move |&k| (t, grid.log_coords(k))))
        .collect()
}

/// `(max⁺ Lv over interior nodes, max |Lv| over continuation nodes)`,
/// taken over every layer before maturity.
pub fn complementarity_residual<T: Real>(surface: &ValueSurface<T>, model: &MarketModel<T>) -> Result<(T, T)> {
    let grid = surface.grid();
    let interior = grid.interior_nodes();
    let mut positive = T::zero();
    let mut continuation = T::zero();
    for k in 0..grid.layers() - 1 {
        let lv = apply_operator(grid, model, surface.values(), k)?;
        for (&node, &l) in interior.iter().zip(&lv) {
            positive = positive.max(l);
            if surface.value_at(k, node) > surface.payoff().value(&grid.prices(node)) {
                continuation = continuation.max(l.abs());
            }
        }
    }
    Ok((positive, continuation))
}
