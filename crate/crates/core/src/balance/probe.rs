use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{balance_residuals, discrete_integral, BalanceReport, HedgeField};
use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::pde::ValueSurface;
use crate::scalar::Real;
use crate::sde::PathBundle;

/// `std(R^pert) / std(R^∇v)` per checkpoint; two equal dispersions give 1,
/// including the case where both vanish.
pub fn dispersion_ratios(baseline: &BalanceReport, other: &BalanceReport) -> Vec<f64> {
    baseline
        .checkpoints
        .iter()
        .zip(&other.checkpoints)
        .map(|(b, o)| if o.std == b.std { 1.0 } else { o.std / b.std })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEntry {
    pub field: String,
    pub ratios: Vec<f64>,
    pub report: BalanceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub baseline: BalanceReport,
    pub probes: Vec<ProbeEntry>,
}

impl ProbeReport {
    /// Smallest ratio over every probe and checkpoint.
    pub fn min_ratio(&self) -> Option<f64> {
        self.probes.iter().flat_map(|p| p.ratios.iter().copied()).reduce(f64::min)
    }
}

/// Balance residuals for `∇v` and for each perturbed field on the same
/// paths. A perturbation that matches `∇v` on every stored node is rejected.
pub fn uniqueness_probe<T: Real>(
    bundle: &PathBundle<T>,
    surface: &ValueSurface<T>,
    model: &MarketModel<T>,
    checkpoints: &[usize],
    perturbations: &[HedgeField<T>],
) -> Result<ProbeReport> {
    for field in perturbations {
        if field.coincides_with_gradient(surface) {
            return Err(Error::ProbeSpec(format!("perturbation {field} equals the surface gradient on every grid node")));
        }
    }
    let baseline = balance_residuals(bundle, surface, model, &HedgeField::Gradient, checkpoints)?.report;
    let probes = perturbations
        .iter()
        .map(|field| {
            let report = balance_residuals(bundle, surface, model, field, checkpoints)?.report;
            Ok(ProbeEntry { field: field.descriptor(), ratios: dispersion_ratios(&baseline, &report), report })
        })
        .collect::<Result<_>>()?;
    Ok(ProbeReport { baseline, probes })
}

/// `M^v_k = Σ_{j<k} e^{−rθ_j} z^{∇v}ᵀ σ ΔW_j` from time 0, one array per path.
pub fn martingale_part<T: Real>(bundle: &PathBundle<T>, surface: &ValueSurface<T>, model: &MarketModel<T>) -> Result<Vec<Vec<T>>> {
    (0..bundle.n_paths())
        .into_par_iter()
        .map(|p| discrete_integral(&bundle.subpath_view(p, 0)?, &HedgeField::Gradient, surface, model))
        .collect()
}

/// Upward moves of `B_k = e^{−rθ_k} v(θ_k, S_k) − M^v_k` beyond a tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompensatorStats {
    pub tolerance: f64,
    pub increments: usize,
    pub exceedances: usize,
    pub fraction: f64,
}

/// Tolerance `scale · Δt^{3/4}`: coarser than the `O(Δt)` discretization
/// noise of a single increment, finer than a Brownian increment.
pub fn compensator_tolerance(dt: f64, scale: f64) -> f64 {
    scale * dt.powf(0.75)
}

pub fn compensator_monotonicity<T: Real>(
    bundle: &PathBundle<T>,
    surface: &ValueSurface<T>,
    model: &MarketModel<T>,
    tolerance: T,
) -> Result<CompensatorStats> {
    let r = model.rate();
    let grid = bundle.grid();
    let counts: Vec<usize> = (0..bundle.n_paths())
        .into_par_iter()
        .map(|p| {
            let m = discrete_integral(&bundle.subpath_view(p, 0)?, &HedgeField::Gradient, surface, model)?;
            let mut prev: Option<T> = None;
            let mut up = 0;
            for (k, &mk) in m.iter().enumerate() {
                let theta = grid.time(k);
                let b = (-(r * theta)).exp() * surface.eval_v(theta, bundle.state(p, k))? - mk;
                if let Some(prev) = prev {
                    if b - prev > tolerance {
                        up += 1;
                    }
                }
                prev = Some(b);
            }
            Ok(up)
        })
        .collect::<Result<_>>()?;
    let increments = bundle.n_paths() * grid.steps();
    let exceedances: usize = counts.iter().sum();
    let fraction = if increments == 0 { 0.0 } else { exceedances as f64 / increments as f64 };
    Ok(CompensatorStats { tolerance: tolerance.as_f64(), increments, exceedances, fraction })
}
