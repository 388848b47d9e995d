//! Pathwise balance check for `(v, ∇v)`:
//!
//! `v(t, S_t) = max_{u ≥ t} [e^{−r(u−t)} ψ(S_u) − ∫_t^u e^{−r(θ−t)} (z^φ)ᵀ σ dW_θ]`
//!
//! evaluated on simulated paths with the stochastic integral taken at left
//! points, plus perturbation probes and the compensator check.

mod experiment;
mod field;
mod probe;

pub use experiment::{BalanceExperiment, ExperimentOutcome, LadderLevel};
pub use field::HedgeField;
pub use probe::{compensator_monotonicity, compensator_tolerance, dispersion_ratios, martingale_part, uniqueness_probe, CompensatorStats, ProbeEntry, ProbeReport};

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::pde::ValueSurface;
use crate::scalar::Real;
use crate::sde::{mean_and_std, PathBundle, PathView, TimeGrid};

/// `I(u_k) = Σ_{j<k} e^{−r(θ_j − t)} z^φ(θ_j, S_j)ᵀ σ(θ_j, S_j) ΔW_j`, `I(t) = 0`,
/// with `z^φ_i = S^i φ^i`. One entry per node of the view.
pub fn discrete_integral<T: Real>(
    view: &PathView<'_, T>,
    field: &HedgeField<T>,
    surface: &ValueSurface<T>,
    model: &MarketModel<T>,
) -> Result<Vec<T>> {
    let t = view.time(0);
    let r = model.rate();
    let n = model.n();
    let mut out = Vec::with_capacity(view.steps() + 1);
    let mut acc = T::zero();
    out.push(acc);
    for j in 0..view.steps() {
        let theta = view.time(j);
        let s = view.state(j);
        let dw = view.increment(j);
        let phi = field.eval(surface, theta, s)?;
        if phi.iter().any(|&p| p != T::zero()) && dw.iter().any(|&w| w != T::zero()) {
            let z: Vec<T> = s.iter().zip(&phi).map(|(&si, &pi)| si * pi).collect();
            let sigma = model.vol_price(theta, s);
            let zs = sigma.vec_mul(&z);
            let mut step = T::zero();
            for a in 0..n {
                step = step + zs[a] * dw[a];
            }
            acc = acc + (-(r * (theta - t))).exp() * step;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Residual of one path at one checkpoint, with the location of the max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathResidual<T> {
    pub residual: T,
    /// Local index of the maximizing node (0 = the checkpoint itself).
    pub argmax: usize,
    /// Maximizer sits at the horizon or in the exercise region.
    pub argmax_stops: bool,
    /// `v(u*, S_{u*}) − ψ(S_{u*})` at the maximizer.
    pub gap: T,
}

/// Width of the `v = ψ` neighborhood used to classify maximizers: `Δt^{3/4}`.
pub fn exercise_neighborhood<T: Real>(dt: T) -> T {
    dt.powf(T::lit(0.75))
}

/// `R_t = max_{u ≥ t} [e^{−r(u−t)} ψ(S_u) − I(u)] − v(t, S_t)` on one path.
/// The maximizer counts as a stopping point when it is the last node, an
/// exercised node, or has `v − ψ ≤ neighborhood`.
pub fn path_residual<T: Real>(
    view: &PathView<'_, T>,
    field: &HedgeField<T>,
    surface: &ValueSurface<T>,
    model: &MarketModel<T>,
    neighborhood: T,
) -> Result<PathResidual<T>> {
    let integral = discrete_integral(view, field, surface, model)?;
    let payoff = surface.payoff();
    let t = view.time(0);
    let r = model.rate();
    let mut best = T::neg_infinity();
    let mut argmax = 0;
    for (k, &ik) in integral.iter().enumerate() {
        let u = view.time(k);
        let d = (-(r * (u - t))).exp() * payoff.value(view.state(k)) - ik;
        if d > best {
            best = d;
            argmax = k;
        }
    }
    let u = view.time(argmax);
    let s_star = view.state(argmax);
    let gap = surface.eval_v(u, s_star)? - payoff.value(s_star);
    let argmax_stops = argmax == view.steps() || gap <= neighborhood || surface.is_exercised(u, s_star)?;
    let residual = best - surface.eval_v(t, view.state(0))?;
    Ok(PathResidual { residual, argmax, argmax_stops, gap })
}

/// Per-checkpoint statistics over all paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStats {
    pub t: f64,
    pub mean: f64,
    pub std: f64,
    pub max_abs: f64,
    #[serde(rename = "argmax_at_T_fraction")]
    pub argmax_at_t_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub dt: f64,
    /// Log-space spacing of each surface axis.
    pub h: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub field: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub checkpoints: Vec<CheckpointStats>,
    pub config: ReportConfig,
}

impl BalanceReport {
    /// Standard error of the mean at checkpoint `i`.
    pub fn stderr(&self, i: usize) -> f64 {
        let c = &self.checkpoints[i];
        if self.config.n_paths == 0 {
            return f64::NAN;
        }
        c.std / (self.config.n_paths as f64).sqrt()
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }

    /// One row per checkpoint.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,mean,std,max_abs,argmax_at_T_fraction,dt,n_paths,seed,field")?;
        for c in &self.checkpoints {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.t, c.mean, c.std, c.max_abs, c.argmax_at_t_fraction, self.config.dt, self.config.n_paths, self.config.seed, self.config.field
            )?;
        }
        Ok(())
    }
}

/// Residuals of every path at every checkpoint, plus the aggregated report.
#[derive(Debug, Clone)]
pub struct BalanceRun<T> {
    pub report: BalanceReport,
    /// `residuals[c][p]`.
    pub residuals: Vec<Vec<T>>,
}

/// Checkpoint grid indices for `{0, T/4, T/2, 3T/4}`, nearest node, kept out
/// of the final two layers and deduplicated.
pub fn default_checkpoints<T: Real>(grid: &TimeGrid<T>) -> Vec<usize> {
    let last_allowed = grid.steps().saturating_sub(2);
    let span = grid.end() - grid.t0();
    let mut out: Vec<usize> = [0.0, 0.25, 0.5, 0.75]
        .iter()
        .map(|&f| grid.nearest_index(grid.t0() + span * T::lit(f)).min(last_allowed))
        .collect();
    out.dedup();
    out
}

/// Rejects checkpoints inside the final two layers, where the gradient
/// inherits the payoff kink.
pub fn check_checkpoint_window(checkpoints: &[usize], steps: usize) -> Result<()> {
    let last_allowed = steps.saturating_sub(2);
    for &c in checkpoints {
        if c > last_allowed {
            return Err(Error::Checkpoint { index: c, steps });
        }
    }
    Ok(())
}

/// Evaluates `R_t` on every path for each checkpoint index. Only the range
/// is checked here, so `t = T` may be passed deliberately; use
/// [`check_checkpoint_window`] to enforce the terminal exclusion.
pub fn balance_residuals<T: Real>(
    bundle: &PathBundle<T>,
    surface: &ValueSurface<T>,
    model: &MarketModel<T>,
    field: &HedgeField<T>,
    checkpoints: &[usize],
) -> Result<BalanceRun<T>> {
    let steps = bundle.grid().steps();
    if let Some(&bad) = checkpoints.iter().find(|&&c| c > steps) {
        return Err(Error::Checkpoint { index: bad, steps });
    }
    if bundle.n_assets() != model.n() {
        return Err(Error::Field(format!("bundle has {} assets, model {}", bundle.n_assets(), model.n())));
    }
    let neighborhood = exercise_neighborhood(bundle.grid().dt());
    let mut stats = Vec::with_capacity(checkpoints.len());
    let mut residuals = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        let per_path: Vec<PathResidual<T>> = (0..bundle.n_paths())
            .into_par_iter()
            .map(|p| path_residual(&bundle.subpath_view(p, c)?, field, surface, model, neighborhood))
            .collect::<Result<_>>()?;
        let values: Vec<T> = per_path.iter().map(|r| r.residual).collect();
        let (mean, std) = if values.is_empty() { (T::nan(), T::nan()) } else { mean_and_std(&values) };
        let max_abs = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let stops = per_path.iter().filter(|r| r.argmax_stops).count();
        let fraction = if per_path.is_empty() { f64::NAN } else { stops as f64 / per_path.len() as f64 };
        stats.push(CheckpointStats {
            t: bundle.grid().time(c).as_f64(),
            mean: mean.as_f64(),
            std: std.as_f64(),
            max_abs: max_abs.as_f64(),
            argmax_at_t_fraction: fraction,
        });
        residuals.push(values);
    }
    let report = BalanceReport {
        checkpoints: stats,
        config: ReportConfig {
            dt: bundle.grid().dt().as_f64(),
            h: surface.grid().axes().iter().map(|a| a.h().as_f64()).collect(),
            n_paths: bundle.n_paths(),
            seed: bundle.seed(),
            field: field.descriptor(),
        },
    };
    Ok(BalanceRun { report, residuals })
}
