use serde::{Deserialize, Serialize};

use super::{
    balance_residuals, check_checkpoint_window, compensator_monotonicity, compensator_tolerance, default_checkpoints, uniqueness_probe,
    BalanceRun, CompensatorStats, HedgeField, ProbeReport,
};
use crate::error::Result;
use crate::market::{MarketModel, PayoffSpec};
use crate::pde::{solve_obstacle, PsorSettings, SpatialGrid, ValueSurface};
use crate::scalar::Real;
use crate::sde::{simulate, PathBundle, TimeGrid};

/// Everything needed for one solve → simulate → residuals → probes run.
#[derive(Debug, Clone)]
pub struct BalanceExperiment<T> {
    pub model: MarketModel<T>,
    pub payoff: PayoffSpec<T>,
    pub s0: Vec<T>,
    /// Space nodes per axis.
    pub space_nodes: usize,
    /// Half-width of each axis in units of `σ√T` around `ln S0`.
    pub margin: T,
    /// Time steps shared by the solver and the simulation.
    pub time_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub psor: PsorSettings,
    /// Grid indices; `None` selects `{0, T/4, T/2, 3T/4}`.
    pub checkpoints: Option<Vec<usize>>,
    pub perturbations: Vec<HedgeField<T>>,
    /// Scale of the compensator tolerance `scale · Δt^{3/4}`.
    pub compensator_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderLevel {
    pub time_steps: usize,
    pub space_nodes: usize,
}

pub struct ExperimentOutcome<T> {
    pub surface: ValueSurface<T>,
    pub bundle: PathBundle<T>,
    pub checkpoints: Vec<usize>,
    pub balance: BalanceRun<T>,
    pub probes: ProbeReport,
    pub compensator: CompensatorStats,
}

impl<T: Real> BalanceExperiment<T> {
    /// American put on one asset under Black–Scholes dynamics.
    #[allow(clippy::too_many_arguments)]
    pub fn reference_put(strike: f64, s0: f64, rate: f64, vol: f64, horizon: f64, level: LadderLevel, n_paths: usize, seed: u64) -> Result<Self> {
        let model = MarketModel::black_scholes(T::lit(rate), T::zero(), T::lit(vol), T::lit(horizon))?;
        Ok(Self {
            model,
            payoff: PayoffSpec::put_on_min(T::lit(strike)),
            s0: vec![T::lit(s0)],
            space_nodes: level.space_nodes,
            margin: T::lit(6.0),
            time_steps: level.time_steps,
            n_paths,
            seed,
            psor: PsorSettings::default(),
            checkpoints: None,
            perturbations: vec![HedgeField::Scaled { factor: T::lit(1.25) }, HedgeField::Zero],
            compensator_scale: 1.0,
        })
    }

    pub fn with_level(&self, level: LadderLevel) -> Self {
        Self { space_nodes: level.space_nodes, time_steps: level.time_steps, ..self.clone() }
    }

    pub fn solve(&self) -> Result<ValueSurface<T>> {
        let nodes = vec![self.space_nodes; self.model.n()];
        let grid = SpatialGrid::around(&self.model, &self.s0, &nodes, self.margin, self.time_steps)?;
        solve_obstacle(&self.model, &self.payoff, &grid, &self.psor)
    }

    pub fn run(&self) -> Result<ExperimentOutcome<T>> {
        self.run_on(self.solve()?)
    }

    /// Runs the Monte Carlo part against an already solved surface.
    pub fn run_on(&self, surface: ValueSurface<T>) -> Result<ExperimentOutcome<T>> {
        let time = TimeGrid::new(T::zero(), self.model.horizon(), self.time_steps)?;
        let checkpoints = match &self.checkpoints {
            Some(c) => c.clone(),
            None => default_checkpoints(&time),
        };
        check_checkpoint_window(&checkpoints, self.time_steps)?;
        let bundle = simulate(&self.model, &self.s0, time, self.n_paths, self.seed)?;
        let balance = balance_residuals(&bundle, &surface, &self.model, &HedgeField::Gradient, &checkpoints)?;
        let probes = uniqueness_probe(&bundle, &surface, &self.model, &checkpoints, &self.perturbations)?;
        let tol = compensator_tolerance(bundle.grid().dt().as_f64(), self.compensator_scale);
        let compensator = compensator_monotonicity(&bundle, &surface, &self.model, T::lit(tol))?;
        Ok(ExperimentOutcome { surface, bundle, checkpoints, balance, probes, compensator })
    }
}
