//! Frozen thresholds and reference values written by `--recalibrate`.

use std::path::Path;

use amopt::balance::{BalanceReport, CompensatorStats, ProbeReport};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointThreshold {
    pub t: f64,
    pub mean_abs_max: f64,
    pub std_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeThreshold {
    pub field: String,
    pub min_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub seed: u64,
    pub n_paths: usize,
    pub dt: f64,
    pub checkpoints: Vec<CheckpointThreshold>,
    pub argmax_fraction_min: f64,
    /// Informative only: probes do not gate `verify-balance`.
    pub probes: Vec<ProbeThreshold>,
    pub compensator_fraction_max: f64,
}

impl Thresholds {
    /// Thresholds from a calibration run: `|mean| + 3 SE`, `1.1 · std`, a
    /// probe floor halfway between 1 and the smallest observed ratio.
    pub fn calibrate(report: &BalanceReport, probes: &ProbeReport, compensator: &CompensatorStats) -> Self {
        let checkpoints = report
            .checkpoints
            .iter()
            .enumerate()
            .map(|(i, c)| CheckpointThreshold { t: c.t, mean_abs_max: c.mean.abs() + 3.0 * report.stderr(i), std_max: 1.1 * c.std })
            .collect();
        let probes = probes
            .probes
            .iter()
            .map(|p| {
                let observed = p.ratios.iter().copied().fold(f64::INFINITY, f64::min);
                ProbeThreshold { field: p.field.clone(), min_ratio: 1.0 + 0.5 * (observed - 1.0).max(0.0) }
            })
            .collect();
        Self {
            seed: report.config.seed,
            n_paths: report.config.n_paths,
            dt: report.config.dt,
            checkpoints,
            argmax_fraction_min: 0.5,
            probes,
            compensator_fraction_max: 1.1 * compensator.fraction,
        }
    }

    /// Breaches of the `∇v` thresholds.
    pub fn check(&self, report: &BalanceReport) -> Vec<String> {
        let mut breaches = Vec::new();
        if report.config.seed != self.seed || report.config.n_paths != self.n_paths {
            breaches.push(format!(
                "run uses seed {} with {} paths, thresholds were frozen for seed {} with {} paths",
                report.config.seed, report.config.n_paths, self.seed, self.n_paths
            ));
        }
        if report.checkpoints.len() != self.checkpoints.len() {
            breaches.push(format!("{} checkpoints, thresholds cover {}", report.checkpoints.len(), self.checkpoints.len()));
        }
        for (c, th) in report.checkpoints.iter().zip(&self.checkpoints) {
            if !(c.mean.abs() <= th.mean_abs_max) {
                breaches.push(format!("t = {}: |mean| {} > {}", c.t, c.mean.abs(), th.mean_abs_max));
            }
            if !(c.std <= th.std_max) {
                breaches.push(format!("t = {}: std {} > {}", c.t, c.std, th.std_max));
            }
            if !(c.argmax_at_t_fraction > self.argmax_fraction_min) {
                breaches.push(format!("t = {}: arg-max fraction {} <= {}", c.t, c.argmax_at_t_fraction, self.argmax_fraction_min));
            }
        }
        breaches
    }

    /// Probe floors that a probe report falls below.
    pub fn check_probes(&self, probes: &ProbeReport) -> Vec<String> {
        let mut breaches = Vec::new();
        for th in &self.probes {
            match probes.probes.iter().find(|p| p.field == th.field) {
                None => breaches.push(format!("probe {} missing", th.field)),
                Some(p) => {
                    for (r, c) in p.ratios.iter().zip(&p.report.checkpoints) {
                        if !(*r > th.min_ratio) {
                            breaches.push(format!("probe {} at t = {}: ratio {r} <= {}", th.field, c.t, th.min_ratio));
                        }
                    }
                }
            }
        }
        breaches
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialGolden {
    pub steps: usize,
    pub s0: f64,
    pub value: f64,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    bytes
}

#[cfg(test)]
mod tests {
    use super::*;
    use amopt::balance::{CheckpointStats, ProbeEntry, ReportConfig};

    fn report(std: f64, field: &str) -> BalanceReport {
        BalanceReport {
            checkpoints: vec![CheckpointStats { t: 0.0, mean: 0.01, std, max_abs: 1.0, argmax_at_t_fraction: 0.8 }],
            config: ReportConfig { dt: 0.01, h: vec![0.01], n_paths: 100, seed: 1, field: field.into() },
        }
    }

    #[test]
    fn calibrated_thresholds_accept_their_own_run() {
        let base = report(0.2, "grad");
        let probes = ProbeReport {
            baseline: base.clone(),
            probes: vec![ProbeEntry { field: "perturbed:zero".into(), ratios: vec![5.0], report: report(1.0, "perturbed:zero") }],
        };
        let stats = CompensatorStats { tolerance: 0.1, increments: 10, exceedances: 1, fraction: 0.1 };
        let th = Thresholds::calibrate(&base, &probes, &stats);
        assert!(th.check(&base).is_empty());
        assert!(th.check_probes(&probes).is_empty());
        assert_eq!(th.probes[0].min_ratio, 3.0);
        assert!((th.checkpoints[0].mean_abs_max - 0.07).abs() < 1e-15);
        assert_eq!(th.check(&report(0.3, "grad")).len(), 1);
    }
}
