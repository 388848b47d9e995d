//! Discrete pricing operator in log coordinates.
//!
//! With `x = ln S` the operator
//! `Lf = ½ Σ aᵢⱼ SⁱSʲ ∂²f/∂Sⁱ∂Sʲ + Σ (r − dⁱ) Sⁱ ∂f/∂Sⁱ + ∂f/∂t − r f`
//! becomes `½ Σ âᵢⱼ ∂²f/∂xⁱ∂xʲ + Σ (r − d̂ⁱ − ½ âᵢᵢ) ∂f/∂xⁱ + ∂f/∂t − r f`,
//! discretized with central differences in space.

use super::grid::SpatialGrid;
use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::scalar::Real;

const MAX_NEIGHBORS: usize = 8;

/// Spatial part `A` of the operator at one interior node:
/// `(A v)_node = center · v_node + Σ weight · v_neighbor`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stencil<T> {
    pub node: usize,
    pub center: T,
    neighbors: [(usize, T); MAX_NEIGHBORS],
    len: usize,
}

impl<T: Real> Stencil<T> {
    fn new(node: usize, center: T) -> Self {
        Self { node, center, neighbors: [(0, T::zero()); MAX_NEIGHBORS], len: 0 }
    }

    fn push(&mut self, at: usize, w: T) {
        self.neighbors[self.len] = (at, w);
        self.len += 1;
    }

    pub fn neighbors(&self) -> &[(usize, T)] {
        &self.neighbors[..self.len]
    }

    #[inline]
    pub fn apply(&self, v: &[T]) -> T {
        self.neighbors().iter().fold(self.center * v[self.node], |acc, &(j, w)| acc + w * v[j])
    }
}

/// Stencils of `A` at time `t` for every interior node, in flat order.
pub(crate) fn build_stencils<T: Real>(grid: &SpatialGrid<T>, model: &MarketModel<T>, t: T) -> Result<Vec<Stencil<T>>> {
    let n = grid.dim();
    if n > 2 {
        return Err(Error::Grid(format!("dense operator supports n <= 2, got {n}")));
    }
    let strides = grid.strides();
    let h: Vec<T> = grid.axes().iter().map(|a| a.h()).collect();
    let half = T::half();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let interior = grid.interior_nodes();
    let mut out = Vec::with_capacity(interior.len());
    for node in interior {
        let x = grid.log_coords(node);
        let lc = model.log_coefficients(t, &x)?;
        let a = lc.vol.gram();
        let mut center = -model.rate();
        let mut st = Stencil::new(node, T::zero());
        for i in 0..n {
            let diff = half * a[(i, i)] / (h[i] * h[i]);
            let adv = lc.drift[i] / (two * h[i]);
            center = center - two * diff;
            st.push(node + strides[i], diff + adv);
            st.push(node - strides[i], diff - adv);
        }
        if n == 2 {
            let w = a[(0, 1)] / (four * h[0] * h[1]);
            if w != T::zero() {
                let (s0, s1) = (strides[0], strides[1]);
                st.push(node + s0 + s1, w);
                st.push(node - s0 - s1, w);
                st.push(node + s0 - s1, -w);
                st.push(node - s0 + s1, -w);
            }
        }
        st.center = center;
        out.push(st);
    }
    Ok(out)
}

/// Discrete `Lf` at every interior node of time layer `layer`, aligned
/// with [`SpatialGrid::interior_nodes`]. `values` holds all layers
/// (`[layer][node]`). The time derivative is the forward difference to the
/// next stored layer (backward difference on the terminal layer).
pub fn apply_operator<T: Real>(grid: &SpatialGrid<T>, model: &MarketModel<T>, values: &[T], layer: usize) -> Result<Vec<T>> {
    let nodes = grid.node_count();
    let expected = nodes * grid.layers();
    if values.len() != expected {
        return Err(Error::LayerSize { expected, got: values.len() });
    }
    if layer >= grid.layers() {
        return Err(Error::IndexOutOfRange { index: layer, max: grid.layers() - 1 });
    }
    let dt = grid.time().dt();
    let t = grid.time().time(layer);
    let (now, later) = if layer + 1 < grid.layers() { (layer, layer + 1) } else { (layer - 1, layer) };
    let current = &values[layer * nodes..(layer + 1) * nodes];
    let v_now = &values[now * nodes..(now + 1) * nodes];
    let v_later = &values[later * nodes..(later + 1) * nodes];
    let stencils = build_stencils(grid, model, t)?;
    Ok(stencils
        .iter()
        .map(|st| st.apply(current) + (v_later[st.node] - v_now[st.node]) / dt)
        .collect())
}
