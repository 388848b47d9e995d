use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::scalar::Real;
use crate::sde::TimeGrid;

/// Uniform log-price axis `x_min .. x_max` with `nodes` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis<T> {
    pub x_min: T,
    pub x_max: T,
    pub nodes: usize,
}

impl<T: Real> Axis<T> {
    pub fn new(x_min: T, x_max: T, nodes: usize) -> Result<Self> {
        if nodes < 3 {
            return Err(Error::Grid(format!("an axis needs at least 3 nodes, got {nodes}")));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Grid(format!("axis bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]")));
        }
        Ok(Self { x_min, x_max, nodes })
    }

    pub fn h(&self) -> T {
        (self.x_max - self.x_min) / T::from_usize_lossy(self.nodes - 1)
    }

    pub fn x(&self, i: usize) -> T {
        if i == self.nodes - 1 {
            self.x_max
        } else {
            self.x_min + T::from_usize_lossy(i) * self.h()
        }
    }

    /// Cell index and weight for linear interpolation; `None` outside.
    /// Positions within a relative 1e-9 of a node snap onto it.
    pub(crate) fn locate(&self, x: T) -> Option<(usize, T)> {
        locate_uniform(self.x_min, self.h(), self.nodes - 1, x)
    }
}

/// Locates `x` on `start + k·h`, `k = 0..=cells`.
pub(crate) fn locate_uniform<T: Real>(start: T, h: T, cells: usize, x: T) -> Option<(usize, T)> {
    if cells == 0 {
        return ((x - start).abs() <= T::lit(1e-12) * (T::one() + start.abs())).then_some((0, T::zero()));
    }
    let r = (x - start) / h;
    let snap = T::lit(1e-9);
    let nearest = r.round();
    let cells_t = T::from_usize_lossy(cells);
    if (r - nearest).abs() <= snap && nearest >= T::zero() && nearest <= cells_t {
        let k = nearest.to_usize()?;
        return Some(if k == cells { (cells - 1, T::one()) } else { (k, T::zero()) });
    }
    if !(r >= T::zero() && r <= cells_t) {
        return None;
    }
    let k = r.floor().to_usize()?.min(cells - 1);
    Some((k, r - T::from_usize_lossy(k)))
}

/// Tensor-product log-space grid with aligned time layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct SpatialGrid<T> {
    axes: Vec<Axis<T>>,
    time: TimeGrid<T>,
}

impl<T: Real> SpatialGrid<T> {
    pub fn new(axes: Vec<Axis<T>>, time: TimeGrid<T>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Grid("grid needs at least one axis".into()));
        }
        if time.steps() == 0 {
            return Err(Error::Grid("grid needs at least one time step".into()));
        }
        Ok(Self { axes, time })
    }

    /// Grid spanning `ln S0ᵢ ± margin · σᵢ √T` on each axis, where `σᵢ` is
    /// `sqrt(âᵢᵢ)` at `(0, ln S0)`, over `[0, T]` with `time_steps` layers.
    pub fn around(model: &MarketModel<T>, s0: &[T], nodes: &[usize], margin: T, time_steps: usize) -> Result<Self> {
        let n = model.n();
        if s0.len() != n || nodes.len() != n {
            return Err(Error::Grid(format!("need {n} spot values and node counts")));
        }
        if s0.iter().any(|s| !(*s > T::zero())) {
            return Err(Error::Grid("spot values must be positive".into()));
        }
        if !(margin > T::zero()) {
            return Err(Error::Grid("margin must be positive".into()));
        }
        let x0: Vec<T> = s0.iter().map(|s| s.ln()).collect();
        let a = model.diffusion_log(T::zero(), &x0);
        let sqrt_t = model.horizon().sqrt();
        let axes = (0..n)
            .map(|i| {
                let width = margin * a[(i, i)].sqrt() * sqrt_t;
                Axis::new(x0[i] - width, x0[i] + width, nodes[i])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes, TimeGrid::new(T::zero(), model.horizon(), time_steps)?)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis<T>] {
        &self.axes
    }

    pub fn time(&self) -> &TimeGrid<T> {
        &self.time
    }

    pub fn layers(&self) -> usize {
        self.time.steps() + 1
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(|a| a.nodes).product()
    }

    /// Row-major strides (last axis fastest).
    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for i in (0..self.dim().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.axes[i + 1].nodes;
        }
        strides
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut rest = flat;
        let mut out = vec![0; self.dim()];
        for (i, s) in self.strides().into_iter().enumerate() {
            out[i] = rest / s;
            rest %= s;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn log_coords(&self, flat: usize) -> Vec<T> {
        self.multi_index(flat).iter().zip(&self.axes).map(|(&i, a)| a.x(i)).collect()
    }

    pub fn prices(&self, flat: usize) -> Vec<T> {
        self.log_coords(flat).into_iter().map(T::exp).collect()
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        self.multi_index(flat).iter().zip(&self.axes).any(|(&i, a)| i == 0 || i + 1 == a.nodes)
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&k| !self.is_boundary(k)).collect()
    }

    pub fn contains_log(&self, x: &[T]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.axes).all(|(&xi, a)| a.locate(xi).is_some())
    }
}
