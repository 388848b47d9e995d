use std::io::Write;

use serde::{Deserialize, Serialize};

use super::grid::{locate_uniform, SpatialGrid};
use super::psor::PsorSettings;
use crate::error::{Error, Result};
use crate::market::PayoffSpec;
use crate::scalar::Real;

/// Per-run solver diagnostics, serialized as the solver report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub nodes_per_axis: Vec<usize>,
    pub time_steps: usize,
    pub psor: PsorSettings,
    /// PSOR sweeps per layer, indexed by layer; the terminal layer is 0.
    pub iterations: Vec<usize>,
    /// Final sweep update per layer.
    pub residuals: Vec<f64>,
    pub total_iterations: usize,
    /// The terminal gradient layer is the payoff's a.e. gradient.
    pub terminal_gradient_from_payoff: bool,
}

/// Grid-sampled obstacle-problem solution `v`, its price-space gradient
/// and the exercise mask.
#[derive(Debug, Clone)]
pub struct ValueSurface<T> {
    pub(crate) grid: SpatialGrid<T>,
    pub(crate) payoff: PayoffSpec<T>,
    /// `[layer][node]`
    pub(crate) values: Vec<T>,
    /// `[layer][node][asset]`
    pub(crate) gradient: Vec<T>,
    pub(crate) exercise: Vec<bool>,
    pub(crate) report: SolverReport,
}

/// Time cell and per-axis cells, each as `(lower index, fraction)`.
type Located<T> = ((usize, T), Vec<(usize, T)>);

impl<T: Real> ValueSurface<T> {
    pub fn grid(&self) -> &SpatialGrid<T> {
        &self.grid
    }

    pub fn payoff(&self) -> &PayoffSpec<T> {
        &self.payoff
    }

    pub fn report(&self) -> &SolverReport {
        &self.report
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn layer(&self, k: usize) -> &[T] {
        let n = self.grid.node_count();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn value_at(&self, layer: usize, node: usize) -> T {
        self.values[layer * self.grid.node_count() + node]
    }

    pub fn gradient_at(&self, layer: usize, node: usize) -> &[T] {
        let d = self.grid.dim();
        let at = (layer * self.grid.node_count() + node) * d;
        &self.gradient[at..at + d]
    }

    pub fn exercised_at(&self, layer: usize, node: usize) -> bool {
        self.exercise[layer * self.grid.node_count() + node]
    }

    fn locate(&self, t: T, x: &[T]) -> Result<Located<T>> {
        let out = || Error::Extrapolation { t: t.as_f64(), s: x.iter().map(|v| v.exp().as_f64()).collect() };
        if x.len() != self.grid.dim() {
            return Err(out());
        }
        let tg = self.grid.time();
        let tl = locate_uniform(tg.t0(), tg.dt(), tg.steps(), t).ok_or_else(out)?;
        let xl = x
            .iter()
            .zip(self.grid.axes())
            .map(|(&xi, a)| a.locate(xi))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(out)?;
        Ok((tl, xl))
    }

    /// Multilinear interpolation of `field(layer, node)` in space, then
    /// linear in time. Zero-weight corners are skipped so node queries are
    /// exact.
    fn interpolate(&self, tl: (usize, T), xl: &[(usize, T)], field: impl Fn(usize, usize) -> T) -> T {
        let strides = self.grid.strides();
        let d = xl.len();
        let spatial = |layer: usize| {
            let mut acc = T::zero();
            for corner in 0..(1usize << d) {
                let mut w = T::one();
                let mut node = 0;
                for (i, &(k, frac)) in xl.iter().enumerate() {
                    let up = (corner >> i) & 1 == 1;
                    w = w * if up { frac } else { T::one() - frac };
                    node += (k + usize::from(up)) * strides[i];
                }
                if w != T::zero() {
                    acc = acc + w * field(layer, node);
                }
            }
            acc
        };
        let (k, wt) = tl;
        if wt == T::zero() {
            spatial(k)
        } else if wt == T::one() {
            spatial(k + 1)
        } else {
            (T::one() - wt) * spatial(k) + wt * spatial(k + 1)
        }
    }

    /// `v(t, x)` at log-price `x`.
    pub fn eval_v_log(&self, t: T, x: &[T]) -> Result<T> {
        let (tl, xl) = self.locate(t, x)?;
        Ok(self.interpolate(tl, &xl, |k, node| self.value_at(k, node)))
    }

    /// `v(t, S)`.
    pub fn eval_v(&self, t: T, s: &[T]) -> Result<T> {
        self.eval_v_log(t, &log_of(s))
    }

    /// `∇v(t, x)` in price units at log-price `x`.
    pub fn eval_grad_log(&self, t: T, x: &[T]) -> Result<Vec<T>> {
        let (tl, xl) = self.locate(t, x)?;
        Ok((0..self.grid.dim())
            .map(|i| self.interpolate(tl, &xl, |k, node| self.gradient_at(k, node)[i]))
            .collect())
    }

    /// `∇v(t, S) = (∂v/∂S¹, …)`.
    pub fn eval_grad(&self, t: T, s: &[T]) -> Result<Vec<T>> {
        self.eval_grad_log(t, &log_of(s))
    }

    /// Exercise flag at the grid node nearest to `(t, S)`.
    pub fn is_exercised(&self, t: T, s: &[T]) -> Result<bool> {
        let (tl, xl) = self.locate(t, &log_of(s))?;
        let layer = if tl.1 > T::half() { tl.0 + 1 } else { tl.0 };
        let multi: Vec<usize> = xl.iter().map(|&(k, w)| if w > T::half() { k + 1 } else { k }).collect();
        Ok(self.exercised_at(layer, self.grid.flat_index(&multi)))
    }

    /// CSV dump: `t,x1[,x2],S1[,S2],v,dv_dS1[,dv_dS2],exercised`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.grid.dim();
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|i| format!("x{i}")));
        header.extend((1..=d).map(|i| format!("S{i}")));
        header.push("v".into());
        header.extend((1..=d).map(|i| format!("dv_dS{i}")));
        header.push("exercised".into());
        writeln!(out, "{}", header.join(","))?;
        for k in 0..self.grid.layers() {
            let t = self.grid.time().time(k).as_f64();
            for node in 0..self.grid.node_count() {
                let x = self.grid.log_coords(node);
                let mut row = vec![format!("{t:?}")];
                row.extend(x.iter().map(|v| format!("{:?}", v.as_f64())));
                row.extend(x.iter().map(|v| format!("{:?}", v.exp().as_f64())));
                row.push(format!("{:?}", self.value_at(k, node).as_f64()));
                row.extend(self.gradient_at(k, node).iter().map(|g| format!("{:?}", g.as_f64())));
                row.push(if self.exercised_at(k, node) { "1" } else { "0" }.into());
                writeln!(out, "{}", row.join(","))?;
            }
        }
        Ok(())
    }

    pub fn write_report_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.report)?;
        Ok(())
    }
}

fn log_of<T: Real>(s: &[T]) -> Vec<T> {
    s.iter().map(|v| v.ln()).collect()
}
