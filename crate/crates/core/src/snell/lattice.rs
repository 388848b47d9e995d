//! Recombining CRR lattice for the discounted American payoff process
//! `X_t = e^{−rt} ψ(S_t)`. Its Snell envelope at the root approximates
//! `v(0, S₀)`.

use std::sync::Arc;

use super::tree::{FiniteTree, TreeProcess};
use crate::error::{Error, Result};
use crate::market::{MarketModel, PayoffSpec};
use crate::scalar::{Real, Scalar};

/// Largest step count [`BinomialLattice::expand`] accepts (`2^steps` leaves).
pub const MAX_EXPANDED_STEPS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct BinomialLattice<T> {
    steps: usize,
    s0: f64,
    log_step: f64,
    prob_up: T,
    prob_down: T,
    /// `x[i][j]`: layer `i`, `j` up-moves.
    x: Vec<Vec<T>>,
}

impl<T: Scalar> BinomialLattice<T> {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn prob_up(&self) -> &T {
        &self.prob_up
    }

    pub fn price(&self, layer: usize, ups: usize) -> f64 {
        self.s0 * ((2.0 * ups as f64 - layer as f64) * self.log_step).exp()
    }

    pub fn payoff_process(&self) -> &[Vec<T>] {
        &self.x
    }

    /// Backward induction `Y = max(X, p Y_up + (1 − p) Y_down)`; the payoff
    /// is already discounted.
    pub fn snell_envelope(&self) -> Vec<Vec<T>> {
        let mut y = self.x.clone();
        for i in (0..self.steps).rev() {
            for j in 0..=i {
                let cont = self.prob_up.clone() * y[i + 1][j + 1].clone() + self.prob_down.clone() * y[i + 1][j].clone();
                if cont > y[i][j] {
                    y[i][j] = cont;
                }
            }
        }
        y
    }

    pub fn root_value(&self) -> T {
        self.snell_envelope().swap_remove(0).swap_remove(0)
    }

    /// Unrolls the lattice into a full (non-recombining) tree so the exact
    /// decomposition machinery applies. Children are listed down-move first.
    pub fn expand(&self) -> Result<TreeProcess<T>> {
        if self.steps > MAX_EXPANDED_STEPS {
            return Err(Error::Precondition(format!(
                "cannot expand {} steps (limit {MAX_EXPANDED_STEPS})",
                self.steps
            )));
        }
        let mut parents = vec![None];
        let mut probs = vec![T::one()];
        let mut ups = vec![0usize];
        let mut layer = vec![0usize];
        let mut frontier = vec![0usize];
        for i in 0..self.steps {
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for &node in &frontier {
                for (up, p) in [(0, &self.prob_down), (1, &self.prob_up)] {
                    next.push(parents.len());
                    parents.push(Some(node));
                    probs.push(p.clone());
                    ups.push(ups[node] + up);
                    layer.push(i + 1);
                }
            }
            frontier = next;
        }
        let tree = Arc::new(FiniteTree::from_parents(parents, probs)?);
        let values = (0..tree.len()).map(|n| self.x[layer[n]][ups[n]].clone()).collect();
        TreeProcess::new(tree, values)
    }
}

/// CRR lattice for a one-asset constant-coefficient model: `u = e^{σ√Δt}`,
/// `d = 1/u`, `p = (e^{(r−d)Δt} − d)/(u − d)`, payoff values and
/// probabilities rounded to multiples of `1/precision` (exact for rational
/// scalars; `1 − p` is taken exactly).
pub fn tree_from_market<T: Scalar, R: Real>(
    model: &MarketModel<R>,
    steps: usize,
    s0: R,
    payoff: &PayoffSpec<R>,
    precision: u64,
) -> Result<BinomialLattice<T>> {
    if model.n() != 1 {
        return Err(Error::UnsupportedModel(format!("lattice needs one asset, got {}", model.n())));
    }
    if !model.is_constant() {
        return Err(Error::UnsupportedModel("lattice needs constant coefficients".into()));
    }
    payoff.check_dimension(1)?;
    if !(s0 > R::zero()) {
        return Err(Error::Precondition("S0 must be positive".into()));
    }
    let r = model.rate().as_f64();
    let div = model.dividend_log(R::zero(), &[R::zero()])[0].as_f64();
    let sigma = model.vol_log(R::zero(), &[R::zero()])[(0, 0)].as_f64().abs();
    let horizon = model.horizon().as_f64();
    let s0 = s0.as_f64();
    let rounded = |v: f64| T::from_f64_rounded(v, precision).ok_or_else(|| Error::Precondition(format!("cannot represent {v}")));

    let (log_step, prob_up) = if steps == 0 {
        (0.0, T::one())
    } else {
        let dt = horizon / steps as f64;
        let log_step = sigma * dt.sqrt();
        let (u, d) = (log_step.exp(), (-log_step).exp());
        let p = (((r - div) * dt).exp() - d) / (u - d);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::UnsupportedModel(format!("risk-neutral probability {p} outside (0, 1)")));
        }
        (log_step, rounded(p)?)
    };
    if steps > 0 && !(prob_up > T::zero() && prob_up < T::one()) {
        return Err(Error::Precondition("rounded probability left (0, 1); increase precision".into()));
    }
    let prob_down = T::one() - prob_up.clone();
    let mut lattice = BinomialLattice { steps, s0, log_step, prob_up, prob_down, x: Vec::with_capacity(steps + 1) };
    for i in 0..=steps {
        let t = if steps == 0 { 0.0 } else { horizon * i as f64 / steps as f64 };
        let disc = (-r * t).exp();
        let row = (0..=i)
            .map(|j| {
                let s = R::from_f64(lattice.price(i, j)).unwrap_or_else(R::nan);
                rounded(disc * payoff.value(&[s]).as_f64())
            })
            .collect::<Result<Vec<T>>>()?;
        lattice.x.push(row);
    }
    Ok(lattice)
}
