//! Euler–Maruyama simulation of the price diffusion in log coordinates.
//!
//! Every path draws from its own ChaCha stream keyed by `(seed, path)`, so a
//! bundle is bit-identical regardless of how rayon schedules the work. The
//! Brownian increments are kept: stochastic integrals downstream must be
//! taken against the same noise that drove the states.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{MarketModel, PayoffSpec};
use crate::scalar::Real;

/// Uniform nodes `θ_k = t0 + k Δt`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    t0: T,
    end: T,
    steps: usize,
}

impl<T: Real> TimeGrid<T> {
    /// `steps = 0` is a single node at `t0`.
    pub fn new(t0: T, end: T, steps: usize) -> Result<Self> {
        if !(t0 >= T::zero()) || !t0.is_finite() || !end.is_finite() {
            return Err(Error::Grid(format!("time grid bounds must be finite with t0 >= 0, got [{t0}, {end}]")));
        }
        if steps > 0 && !(end > t0) {
            return Err(Error::Grid(format!("time grid needs end > t0, got [{t0}, {end}]")));
        }
        Ok(Self { t0, end, steps })
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn end(&self) -> T {
        if self.steps == 0 {
            self.t0
        } else {
            self.end
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> T {
        if self.steps == 0 {
            T::zero()
        } else {
            (self.end - self.t0) / T::from_usize_lossy(self.steps)
        }
    }

    pub fn time(&self, k: usize) -> T {
        if k == self.steps {
            self.end()
        } else {
            self.t0 + T::from_usize_lossy(k) * self.dt()
        }
    }

    pub fn times(&self) -> Vec<T> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Index of the node closest to `t`.
    pub fn nearest_index(&self, t: T) -> usize {
        if self.steps == 0 {
            return 0;
        }
        let k = ((t - self.t0) / self.dt()).round();
        k.max(T::zero()).to_usize().unwrap_or(0).min(self.steps)
    }
}

/// Simulated states `S_θ` and the Brownian increments that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle<T> {
    grid: TimeGrid<T>,
    n_assets: usize,
    n_paths: usize,
    /// `[path][node][asset]`, flattened.
    states: Vec<T>,
    /// `[path][step][asset]`, flattened.
    increments: Vec<T>,
    seed: u64,
}

impl<T: Real> PathBundle<T> {
    /// Assembles a bundle from explicit data (crafted paths in tests and
    /// imported dumps).
    pub fn from_parts(grid: TimeGrid<T>, n_assets: usize, states: Vec<T>, increments: Vec<T>, seed: u64) -> Result<Self> {
        let nodes = grid.steps() + 1;
        if n_assets == 0 || !states.len().is_multiple_of(nodes * n_assets) {
            return Err(Error::Grid("state array does not match grid and asset count".into()));
        }
        let n_paths = states.len() / (nodes * n_assets);
        if increments.len() != n_paths * grid.steps() * n_assets {
            return Err(Error::Grid("increment array does not match grid and asset count".into()));
        }
        if states.iter().any(|s| !(*s > T::zero())) {
            return Err(Error::Grid("states must be strictly positive".into()));
        }
        Ok(Self { grid, n_assets, n_paths, states, increments, seed })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn n_assets(&self) -> usize {
        self.n_assets
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn state(&self, path: usize, k: usize) -> &[T] {
        let nodes = self.grid.steps() + 1;
        let at = (path * nodes + k) * self.n_assets;
        &self.states[at..at + self.n_assets]
    }

    pub fn increment(&self, path: usize, k: usize) -> &[T] {
        let at = (path * self.grid.steps() + k) * self.n_assets;
        &self.increments[at..at + self.n_assets]
    }

    /// View of one path from node `from` onward.
    pub fn subpath_view(&self, path: usize, from: usize) -> Result<PathView<'_, T>> {
        if path >= self.n_paths {
            return Err(Error::IndexOutOfRange { index: path, max: self.n_paths.saturating_sub(1) });
        }
        if from > self.grid.steps() {
            return Err(Error::IndexOutOfRange { index: from, max: self.grid.steps() });
        }
        Ok(PathView { bundle: self, path, from })
    }

    /// Discounted terminal payoff: `(mean, standard error)` of `e^{−rT} ψ(S_T)`.
    pub fn european_estimate(&self, payoff: &PayoffSpec<T>, rate: T) -> (T, T) {
        let horizon = self.grid.end() - self.grid.t0();
        let disc = (-rate * horizon).exp();
        let last = self.grid.steps();
        let values: Vec<T> = (0..self.n_paths).map(|p| disc * payoff.value(self.state(p, last))).collect();
        mean_and_stderr(&values)
    }

    /// CSV dump: `path_id,k,theta,S1..Sn,dW1..dWn`; the terminal node has
    /// empty increment cells.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.n_assets;
        let mut header = vec!["path_id".to_string(), "k".into(), "theta".into()];
        header.extend((1..=n).map(|i| format!("S{i}")));
        header.extend((1..=n).map(|i| format!("dW{i}")));
        writeln!(out, "{}", header.join(","))?;
        for p in 0..self.n_paths {
            for k in 0..=self.grid.steps() {
                let mut row = vec![p.to_string(), k.to_string(), format!("{:?}", self.grid.time(k).as_f64())];
                row.extend(self.state(p, k).iter().map(|s| format!("{:?}", s.as_f64())));
                if k < self.grid.steps() {
                    row.extend(self.increment(p, k).iter().map(|w| format!("{:?}", w.as_f64())));
                } else {
                    row.extend(std::iter::repeat_n(String::new(), n));
                }
                writeln!(out, "{}", row.join(","))?;
            }
        }
        Ok(())
    }
}

/// One path seen from node `from` onward; local index 0 is `θ_from`.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a, T> {
    bundle: &'a PathBundle<T>,
    path: usize,
    from: usize,
}

impl<'a, T: Real> PathView<'a, T> {
    pub fn path(&self) -> usize {
        self.path
    }

    pub fn start_index(&self) -> usize {
        self.from
    }

    /// Number of steps remaining (nodes − 1).
    pub fn steps(&self) -> usize {
        self.bundle.grid.steps() - self.from
    }

    pub fn time(&self, k: usize) -> T {
        self.bundle.grid.time(self.from + k)
    }

    pub fn state(&self, k: usize) -> &'a [T] {
        self.bundle.state(self.path, self.from + k)
    }

    pub fn increment(&self, k: usize) -> &'a [T] {
        self.bundle.increment(self.path, self.from + k)
    }
}

/// Simulates `n_paths` paths of the model from `s0` on `grid`:
/// `X_{k+1} = X_k + drift(θ_k, X_k) Δt + σ̂(θ_k, X_k) ΔW_k`, `S = exp(X)`.
pub fn simulate<T: Real>(
    model: &MarketModel<T>,
    s0: &[T],
    grid: TimeGrid<T>,
    n_paths: usize,
    seed: u64,
) -> Result<PathBundle<T>> {
    let n = model.n();
    if s0.len() != n {
        return Err(Error::Precondition(format!("S0 has {} components, expected {n}", s0.len())));
    }
    if s0.iter().any(|s| !(*s > T::zero()) || !s.is_finite()) {
        return Err(Error::Precondition(format!("S0 must be positive, got {s0:?}")));
    }
    if grid.end() > model.horizon() + T::epsilon() * model.horizon() {
        return Err(Error::Precondition(format!("grid ends at {} beyond horizon {}", grid.end(), model.horizon())));
    }
    if n_paths == 0 {
        return Err(Error::Precondition("n_paths must be positive".into()));
    }
    let steps = grid.steps();
    let nodes = steps + 1;
    let mut states = vec![T::zero(); n_paths * nodes * n];
    let mut increments = vec![T::zero(); n_paths * steps * n];
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let x0: Vec<T> = s0.iter().map(|s| s.ln()).collect();
    if steps == 0 {
        for st in states.chunks_mut(n) {
            st.copy_from_slice(s0);
        }
        return Ok(PathBundle { grid, n_assets: n, n_paths, states, increments, seed });
    }

    let failures: Vec<Option<Error>> = states
        .par_chunks_mut(nodes * n)
        .zip(increments.par_chunks_mut(steps * n))
        .enumerate()
        .map(|(p, (st, inc))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let mut x = x0.clone();
            st[..n].copy_from_slice(s0);
            for k in 0..steps {
                let t = grid.time(k);
                let lc = match model.log_coefficients(t.min(model.horizon()), &x) {
                    Ok(lc) => lc,
                    Err(_) => return Some(Error::Simulation { path: p, step: k }),
                };
                let dw = &mut inc[k * n..(k + 1) * n];
                for w in dw.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *w = T::lit(z) * sqrt_dt;
                }
                let shock = lc.vol.mul_vec(dw);
                for i in 0..n {
                    x[i] = x[i] + lc.drift[i] * dt + shock[i];
                }
                let next = &mut st[(k + 1) * n..(k + 2) * n];
                for i in 0..n {
                    next[i] = x[i].exp();
                    if !next[i].is_finite() || !(next[i] > T::zero()) {
                        return Some(Error::Simulation { path: p, step: k });
                    }
                }
            }
            None
        })
        .collect();
    if let Some(err) = failures.into_iter().flatten().next() {
        return Err(err);
    }
    Ok(PathBundle { grid, n_assets: n, n_paths, states, increments, seed })
}

/// Sample mean and standard error (n − 1 normalization).
pub fn mean_and_stderr<T: Real>(values: &[T]) -> (T, T) {
    let (mean, std) = mean_and_std(values);
    let len = T::from_usize_lossy(values.len().max(1));
    (mean, std / len.sqrt())
}

/// Sample mean and standard deviation (n − 1 normalization), summed in
/// index order.
pub fn mean_and_std<T: Real>(values: &[T]) -> (T, T) {
    let n = values.len();
    if n == 0 {
        return (T::nan(), T::nan());
    }
    let len = T::from_usize_lossy(n);
    let mean = values.iter().copied().fold(T::zero(), |a, b| a + b) / len;
    if n == 1 {
        return (mean, T::zero());
    }
    let ss = values.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean));
    (mean, (ss / T::from_usize_lossy(n - 1)).sqrt())
}
