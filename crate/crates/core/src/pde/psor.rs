use serde::{Deserialize, Serialize};

use super::operator::Stencil;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    #[default]
    Lexicographic,
    /// Even-parity nodes first, then odd parity.
    RedBlack,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsorSettings {
    pub omega: f64,
    /// Absolute per-node tolerance on the sweep update.
    pub tolerance: f64,
    pub max_iterations: usize,
    #[serde(default)]
    pub ordering: SweepOrder,
}

impl Default for PsorSettings {
    fn default() -> Self {
        Self { omega: 1.5, tolerance: 1e-9, max_iterations: 10_000, ordering: SweepOrder::Lexicographic }
    }
}

/// Outcome of one layer solve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerSolve {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Sweep order over stencil positions.
pub(crate) fn sweep_order(stencils_multi: &[Vec<usize>], ordering: SweepOrder) -> Vec<usize> {
    match ordering {
        SweepOrder::Lexicographic => (0..stencils_multi.len()).collect(),
        SweepOrder::RedBlack => {
            let parity = |m: &Vec<usize>| m.iter().sum::<usize>() % 2;
            let mut order: Vec<usize> = (0..stencils_multi.len()).filter(|&k| parity(&stencils_multi[k]) == 0).collect();
            order.extend((0..stencils_multi.len()).filter(|&k| parity(&stencils_multi[k]) == 1));
            order
        }
    }
}

/// Solves the implicit-Euler complementarity problem for one layer,
/// `(I − Δt A) v ≥ b`, `v ≥ ψ`, with equality in one of the two at every
/// interior node. `v` enters as the initial guess with boundary values set.
pub(crate) fn solve_layer<T: Real>(
    stencils: &[Stencil<T>],
    order: &[usize],
    dt: T,
    rhs: &[T],
    obstacle: &[T],
    v: &mut [T],
    settings: &PsorSettings,
) -> LayerSolve {
    let omega = T::lit(settings.omega);
    let tol = T::lit(settings.tolerance);
    let mut residual = T::zero();
    for iteration in 1..=settings.max_iterations {
        residual = T::zero();
        for &k in order {
            let st = &stencils[k];
            let node = st.node;
            let diag = T::one() - dt * st.center;
            let off = st.neighbors().iter().fold(T::zero(), |acc, &(j, w)| acc + w * v[j]);
            let gauss_seidel = (rhs[node] + dt * off) / diag;
            let old = v[node];
            let new = (old + omega * (gauss_seidel - old)).max(obstacle[node]);
            residual = residual.max((new - old).abs());
            v[node] = new;
        }
        if residual < tol {
            return LayerSolve { iterations: iteration, residual: residual.as_f64(), converged: true };
        }
    }
    LayerSolve { iterations: settings.max_iterations, residual: residual.as_f64(), converged: false }
}
