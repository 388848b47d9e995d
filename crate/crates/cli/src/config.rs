//! Run configuration: one TOML file per experiment.

use std::path::{Path, PathBuf};

use amopt::balance::HedgeField;
use amopt::market::{Coefficient, MarketModel, PayoffKind, PayoffSpec};
use amopt::pde::PsorSettings;
use amopt::snell::random::RandomTreeConfig;
use amopt::snell::{CampaignConfig, DEFAULT_ORACLE_LIMIT};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSection>,
    pub payoff: Option<PayoffSection>,
    pub grid: Option<GridSection>,
    pub mc: Option<McSection>,
    pub probe: Option<ProbeSection>,
    #[serde(default)]
    pub output: OutputSection,
    pub tree: Option<TreeSection>,
    pub thresholds: Option<ThresholdSection>,
    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base: PathBuf,
}

/// A coefficient given either as a bare number or as a tagged table.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Number(f64),
    Full(Coefficient<f64>),
}

impl CoefficientSpec {
    fn build(&self) -> Coefficient<f64> {
        match self {
            CoefficientSpec::Number(v) => Coefficient::constant(*v),
            CoefficientSpec::Full(c) => c.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    pub r: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub lambda: f64,
    pub s0: Vec<f64>,
    pub dividends: Vec<CoefficientSpec>,
    /// Rows of `σ̂`.
    pub volatility: Vec<Vec<CoefficientSpec>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffName {
    PutOnMin,
    CallOnMax,
    Spread,
    BasketPut,
    Zero,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffSection {
    pub kind: PayoffName,
    #[serde(default)]
    pub strike: f64,
    #[serde(default)]
    pub weights: Vec<f64>,
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub space_nodes: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
    pub time_steps: usize,
    #[serde(default)]
    pub psor: PsorSettings,
}

fn default_margin() -> f64 {
    6.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub paths: usize,
    pub seed: Option<u64>,
    /// Checkpoint times; defaults to `{0, T/4, T/2, 3T/4}`.
    pub checkpoints: Option<Vec<f64>>,
    #[serde(default = "default_compensator_scale")]
    pub compensator_scale: f64,
}

fn default_compensator_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(default)]
    pub perturbations: Vec<HedgeField<f64>>,
    /// Declared sup-norm bound every perturbed field must respect.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: default_directory(), formats: default_formats() }
    }
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSection {
    pub count: usize,
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub min_depth: usize,
    pub max_depth: usize,
    #[serde(default = "three")]
    pub max_branching: usize,
    #[serde(default = "four")]
    pub oracle_max_depth: usize,
    pub oracle_limit: Option<u64>,
    #[serde(default = "ten")]
    pub probes_per_tree: usize,
    /// Fault injection for testing the violation path.
    #[serde(default)]
    pub corrupt_decomposition: bool,
}

fn one() -> usize {
    1
}
fn three() -> usize {
    3
}
fn four() -> usize {
    4
}
fn ten() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    /// Frozen gating thresholds for `verify-balance`.
    pub file: Option<PathBuf>,
    /// Frozen balance report the run must reproduce byte for byte.
    pub golden_report: Option<PathBuf>,
    /// Binomial reference value for `price`.
    pub binomial_golden: Option<PathBuf>,
    #[serde(default = "default_binomial_steps")]
    pub binomial_steps: usize,
}

fn default_binomial_steps() -> usize {
    10_000
}

fn missing(section: &str) -> CliError {
    CliError::Config(format!("missing [{section}] section"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn model_section(&self) -> Result<&ModelSection, CliError> {
        self.model.as_ref().ok_or_else(|| missing("model"))
    }

    pub fn grid_section(&self) -> Result<&GridSection, CliError> {
        self.grid.as_ref().ok_or_else(|| missing("grid"))
    }

    pub fn mc_section(&self) -> Result<&McSection, CliError> {
        self.mc.as_ref().ok_or_else(|| missing("mc"))
    }

    pub fn tree_section(&self) -> Result<&TreeSection, CliError> {
        self.tree.as_ref().ok_or_else(|| missing("tree"))
    }

    pub fn build_model(&self) -> Result<MarketModel<f64>, CliError> {
        let m = self.model_section()?;
        let n = m.n;
        if m.s0.len() != n || m.dividends.len() != n || m.volatility.len() != n || m.volatility.iter().any(|row| row.len() != n) {
            return Err(CliError::Config(format!("[model] n = {n} but s0, dividends or volatility have other sizes")));
        }
        let dividends = m.dividends.iter().map(CoefficientSpec::build).collect();
        let vol = m.volatility.iter().map(|row| row.iter().map(CoefficientSpec::build).collect()).collect();
        MarketModel::new(m.r, m.horizon, m.lambda, dividends, vol).map_err(|e| CliError::Config(format!("[model] {e}")))
    }

    pub fn build_payoff(&self) -> Result<PayoffSpec<f64>, CliError> {
        let p = self.payoff.as_ref().ok_or_else(|| missing("payoff"))?;
        let n = self.model_section()?.n;
        let kind = match p.kind {
            PayoffName::Zero => return Ok(PayoffSpec::zero(n)),
            PayoffName::PutOnMin => PayoffKind::PutOnMin,
            PayoffName::CallOnMax => PayoffKind::CallOnMax,
            PayoffName::Spread => PayoffKind::Spread,
            PayoffName::BasketPut => PayoffKind::BasketPut,
        };
        let mut spec = PayoffSpec::new(kind, p.strike, p.weights.clone()).map_err(|e| CliError::Config(format!("[payoff] {e}")))?;
        if let Some(l) = p.lipschitz {
            spec = spec.with_lipschitz(l);
        }
        spec.check_dimension(n).map_err(|e| CliError::Config(format!("[payoff] {e}")))?;
        Ok(spec)
    }

    /// Seed and path count, both mandatory for Monte Carlo commands.
    pub fn mc_seed(&self) -> Result<(usize, u64), CliError> {
        let mc = self.mc_section()?;
        if mc.paths == 0 {
            return Err(CliError::Config("[mc] paths must be positive".into()));
        }
        let seed = mc.seed.ok_or_else(|| CliError::Config("[mc] seed is mandatory".into()))?;
        Ok((mc.paths, seed))
    }

    pub fn campaign(&self) -> Result<CampaignConfig, CliError> {
        let t = self.tree_section()?;
        let seed = t.seed.ok_or_else(|| CliError::Config("[tree] seed is mandatory".into()))?;
        if t.min_depth > t.max_depth || t.max_branching == 0 {
            return Err(CliError::Config("[tree] needs min_depth <= max_depth and max_branching >= 1".into()));
        }
        Ok(CampaignConfig {
            trees: t.count,
            seed,
            generator: RandomTreeConfig {
                min_depth: t.min_depth,
                max_depth: t.max_depth,
                max_branching: t.max_branching,
                ..Default::default()
            },
            oracle_max_depth: t.oracle_max_depth,
            oracle_limit: t.oracle_limit.map_or(DEFAULT_ORACLE_LIMIT, u128::from),
            probes_per_tree: t.probes_per_tree,
            corrupt_decomposition: t.corrupt_decomposition,
        })
    }

    pub fn perturbations(&self) -> Vec<HedgeField<f64>> {
        self.probe.clone().unwrap_or_default().perturbations
    }

    pub fn probe_bound(&self) -> Option<f64> {
        self.probe.as_ref().and_then(|p| p.bound)
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> RunConfig {
        toml::from_str(text).unwrap()
    }

    const MODEL: &str = "[model]\nn = 2\nr = 0.03\nT = 1.0\nlambda = 0.01\ns0 = [1.0, 2.0]\ndividends = [0.0, { kind = \"constant\", value = 0.02 }]\nvolatility = [[0.2, 0.0], [{ kind = \"sqrt_time\", base = 0.1, amplitude = 0.05 }, 0.2]]\n";

    #[test]
    fn coefficients_accept_numbers_and_tables() {
        let cfg = parse(MODEL);
        let model = cfg.build_model().unwrap();
        assert_eq!(model.n(), 2);
        assert!(!model.is_time_independent());
        assert_eq!(model.dividend_log(0.0, &[0.0, 0.0])[1], 0.02);
    }

    #[test]
    fn size_mismatch_is_reported() {
        let cfg = parse(&MODEL.replace("s0 = [1.0, 2.0]", "s0 = [1.0]"));
        assert!(matches!(cfg.build_model(), Err(CliError::Config(_))));
    }

    #[test]
    fn payoff_sections_build() {
        let cfg = parse(&format!("{MODEL}[payoff]\nkind = \"spread\"\nstrike = 1.0\n"));
        assert_eq!(cfg.build_payoff().unwrap().value(&[3.0, 1.0]), 1.0);
        let cfg = parse(&format!("{MODEL}[payoff]\nkind = \"zero\"\n"));
        assert!(cfg.build_payoff().unwrap().is_identically_zero());
        let cfg = parse(&format!("{MODEL}[payoff]\nkind = \"basket_put\"\nstrike = 1.0\nweights = [1.0]\n"));
        assert!(cfg.build_payoff().is_err());
    }

    #[test]
    fn probes_and_defaults_parse() {
        let cfg = parse("[probe]\nperturbations = [{ kind = \"scaled\", factor = 1.25 }, { kind = \"drop_asset\", asset = 0 }]\n");
        let p = cfg.perturbations();
        assert_eq!(p[0], HedgeField::Scaled { factor: 1.25 });
        assert_eq!(p[1], HedgeField::DropAsset { asset: 0 });
        assert_eq!(cfg.output.formats, vec![Format::Json, Format::Csv]);
        assert!(matches!(cfg.model_section(), Err(CliError::Config(m)) if m.contains("[model]")));
    }

    #[test]
    fn campaign_needs_a_seed() {
        assert!(parse("[tree]\ncount = 3\nmax_depth = 2\n").campaign().is_err());
        let c = parse("[tree]\ncount = 3\nseed = 9\nmax_depth = 2\n").campaign().unwrap();
        assert_eq!((c.trees, c.seed, c.generator.max_depth, c.probes_per_tree), (3, 9, 2, 10));
    }
}
