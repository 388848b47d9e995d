use serde::{Deserialize, Serialize};

use super::coefficient::Coefficient;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// A `(t, x)` sample point.
pub type SamplePoint<T> = (T, Vec<T>);

/// Multidimensional dividend-paying diffusion
/// `dSⁱ = Sⁱ (r − dⁱ) dt + Sⁱ Σⱼ σᵢⱼ dWʲ`, with coefficients given in log
/// coordinates (`d̂`, `σ̂`); price-space coefficients are `d̂(t, ln S)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct MarketModel<T> {
    n: usize,
    rate: T,
    horizon: T,
    /// Declared ellipticity floor for `â = σ̂σ̂ᵀ`.
    lambda: T,
    dividends: Vec<Coefficient<T>>,
    volatility: Vec<Vec<Coefficient<T>>>,
}

/// Drift and volatility of `X = ln S`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogCoefficients<T> {
    pub drift: Vec<T>,
    pub vol: Matrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoelderEstimate<T> {
    /// Empirical lower bound for the Hölder constant `c`.
    pub constant: T,
    /// Indices of coincident pairs that were skipped.
    pub skipped: Vec<usize>,
}

impl<T: Real> MarketModel<T> {
    pub fn new(
        rate: T,
        horizon: T,
        lambda: T,
        dividends: Vec<Coefficient<T>>,
        volatility: Vec<Vec<Coefficient<T>>>,
    ) -> Result<Self> {
        let n = dividends.len();
        if n == 0 {
            return Err(Error::Model("asset count must be positive".into()));
        }
        if volatility.len() != n || volatility.iter().any(|row| row.len() != n) {
            return Err(Error::Model(format!("volatility must be {n}x{n}")));
        }
        if !(rate >= T::zero()) || !rate.is_finite() {
            return Err(Error::Model(format!("rate must be finite and >= 0, got {rate}")));
        }
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::Model(format!("horizon must be positive, got {horizon}")));
        }
        if !(lambda > T::zero()) {
            return Err(Error::Model(format!("lambda must be positive, got {lambda}")));
        }
        for c in dividends.iter().chain(volatility.iter().flatten()) {
            c.check_shape(n).map_err(Error::Model)?;
        }
        Ok(Self { n, rate, horizon, lambda, dividends, volatility })
    }

    /// Constant-coefficient model.
    pub fn constant(rate: T, horizon: T, lambda: T, dividends: &[T], vol: &Matrix<T>) -> Result<Self> {
        let n = dividends.len();
        if vol.dim() != n {
            return Err(Error::Model(format!("volatility must be {n}x{n}")));
        }
        let divs = dividends.iter().map(|&d| Coefficient::constant(d)).collect();
        let vols = (0..n).map(|i| (0..n).map(|j| Coefficient::constant(vol[(i, j)])).collect()).collect();
        Self::new(rate, horizon, lambda, divs, vols)
    }

    /// One asset with constant `σ` and dividend yield `d`.
    pub fn black_scholes(rate: T, dividend: T, sigma: T, horizon: T) -> Result<Self> {
        Self::constant(rate, horizon, sigma * sigma, &[dividend], &Matrix::from_rows(&[vec![sigma]]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn dividends(&self) -> &[Coefficient<T>] {
        &self.dividends
    }

    pub fn volatility(&self) -> &[Vec<Coefficient<T>>] {
        &self.volatility
    }

    pub fn is_constant(&self) -> bool {
        self.dividends.iter().chain(self.volatility.iter().flatten()).all(Coefficient::is_constant)
    }

    pub fn is_time_independent(&self) -> bool {
        self.dividends.iter().chain(self.volatility.iter().flatten()).all(Coefficient::is_time_independent)
    }

    /// `d̂(t, x)`.
    pub fn dividend_log(&self, t: T, x: &[T]) -> Vec<T> {
        self.dividends.iter().map(|c| c.eval(t, x)).collect()
    }

    /// `σ̂(t, x)`.
    pub fn vol_log(&self, t: T, x: &[T]) -> Matrix<T> {
        let rows: Vec<Vec<T>> = self.volatility.iter().map(|row| row.iter().map(|c| c.eval(t, x)).collect()).collect();
        Matrix::from_rows(&rows)
    }

    /// `â(t, x) = σ̂σ̂ᵀ`.
    pub fn diffusion_log(&self, t: T, x: &[T]) -> Matrix<T> {
        self.vol_log(t, x).gram()
    }

    /// `d(t, S) = d̂(t, ln S)`.
    pub fn dividend_price(&self, t: T, s: &[T]) -> Vec<T> {
        self.dividend_log(t, &ln_vec(s))
    }

    /// `σ(t, S) = σ̂(t, ln S)`.
    pub fn vol_price(&self, t: T, s: &[T]) -> Matrix<T> {
        self.vol_log(t, &ln_vec(s))
    }

    /// Itô drift and volatility of `ln S`:
    /// `driftᵢ = r − d̂ⁱ − ½ âᵢᵢ`, `vol = σ̂`.
    pub fn log_coefficients(&self, t: T, x: &[T]) -> Result<LogCoefficients<T>> {
        let coefficient_error = || Error::Coefficient { t: t.as_f64(), x: x.iter().map(|v| v.as_f64()).collect() };
        if x.len() != self.n {
            return Err(Error::Model(format!("state has {} components, expected {}", x.len(), self.n)));
        }
        if !(t >= T::zero() && t <= self.horizon) {
            return Err(Error::Precondition(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        let vol = self.vol_log(t, x);
        let divs = self.dividend_log(t, x);
        if !vol.is_finite() || divs.iter().any(|d| !d.is_finite()) {
            return Err(coefficient_error());
        }
        let drift = (0..self.n)
            .map(|i| {
                let aii = (0..self.n).fold(T::zero(), |acc, j| acc + vol[(i, j)] * vol[(i, j)]);
                self.rate - divs[i] - T::half() * aii
            })
            .collect();
        Ok(LogCoefficients { drift, vol })
    }

    /// Smallest eigenvalue of `â` over the sample cloud.
    pub fn check_ellipticity(&self, samples: &[(T, Vec<T>)]) -> Result<T> {
        if samples.is_empty() {
            return Err(Error::Precondition("ellipticity check needs at least one sample".into()));
        }
        let mut worst = T::infinity();
        for (t, x) in samples {
            let a = self.diffusion_log(*t, x);
            if !a.is_finite() {
                return Err(Error::Model(format!("non-finite diffusion matrix at t={t}")));
            }
            let tol = T::lit(1e3) * T::epsilon() * a.as_slice().iter().fold(T::one(), |m, v| m.max(v.abs()));
            if !a.is_symmetric(tol) {
                return Err(Error::Model(format!("diffusion matrix not symmetric at t={t}")));
            }
            worst = worst.min(a.symmetric_eigenvalues()[0]);
        }
        Ok(worst)
    }

    /// Checks the declared `λ` against the sample cloud and that every
    /// dividend yield is nonnegative there.
    pub fn validate(&self, samples: &[(T, Vec<T>)]) -> Result<T> {
        for (t, x) in samples {
            if let Some(d) = self.dividend_log(*t, x).into_iter().find(|d| !(*d >= T::zero())) {
                return Err(Error::Model(format!("negative dividend yield {d} at t={t}")));
            }
        }
        let min_eig = self.check_ellipticity(samples)?;
        if min_eig < self.lambda {
            return Err(Error::Model(format!(
                "ellipticity violated: min eigenvalue {min_eig} < declared lambda {}",
                self.lambda
            )));
        }
        Ok(min_eig)
    }

    /// Largest ratio `|g(t,x) − g(u,y)| / (|t−u|^½ + |x−y|)` over all
    /// coefficients `g ∈ {d̂ⁱ, σ̂ᵢⱼ}` and sample pairs.
    pub fn check_hoelder(&self, pairs: &[(SamplePoint<T>, SamplePoint<T>)]) -> Result<HoelderEstimate<T>> {
        let mut constant = T::zero();
        let mut skipped = Vec::new();
        for (k, ((t, x), (u, y))) in pairs.iter().enumerate() {
            let dist = x.iter().zip(y).map(|(a, b)| (*a - *b) * (*a - *b)).sum::<T>().sqrt();
            let denom = (*t - *u).abs().sqrt() + dist;
            if denom == T::zero() {
                skipped.push(k);
                continue;
            }
            for c in self.dividends.iter().chain(self.volatility.iter().flatten()) {
                let gx = c.eval(*t, x);
                let gy = c.eval(*u, y);
                if !gx.is_finite() || !gy.is_finite() {
                    return Err(Error::Model(format!("non-finite coefficient in pair {k}")));
                }
                constant = constant.max((gx - gy).abs() / denom);
            }
        }
        Ok(HoelderEstimate { constant, skipped })
    }

    /// `sqrt(max_i âᵢᵢ)` over the samples; sets the grid width.
    pub fn max_vol_scale(&self, samples: &[(T, Vec<T>)]) -> T {
        samples
            .iter()
            .map(|(t, x)| {
                let a = self.diffusion_log(*t, x);
                (0..self.n).fold(T::zero(), |m, i| m.max(a[(i, i)]))
            })
            .fold(T::zero(), T::max)
            .sqrt()
    }
}

fn ln_vec<T: Real>(s: &[T]) -> Vec<T> {
    s.iter().map(|v| v.ln()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_model(r: f64, d: f64) -> MarketModel<f64> {
        MarketModel::constant(r, 1.0, 1.0, &[d, d], &Matrix::identity(2)).unwrap()
    }

    #[test]
    fn log_drift_identity_vol() {
        let lc = identity_model(0.0, 0.0).log_coefficients(0.5, &[0.0, 1.0]).unwrap();
        assert_eq!(lc.drift, vec![-0.5, -0.5]);
        assert_eq!(lc.vol, Matrix::identity(2));
    }

    #[test]
    fn log_drift_dividend_cancels_rate() {
        let lc = identity_model(0.07, 0.07).log_coefficients(0.0, &[0.3, -0.2]).unwrap();
        assert_eq!(lc.drift, vec![-0.5, -0.5]);
    }

    #[test]
    fn log_drift_triangular_vol() {
        // â₁₁ = 0.2² = 0.04, â₂₂ = 0.1² + 0.2² = 0.05
        let vol: Matrix<f64> = Matrix::from_rows(&[vec![0.2, 0.0], vec![0.1, 0.2]]);
        let m = MarketModel::constant(0.05, 1.0, 0.01, &[0.01, 0.02], &vol).unwrap();
        let lc = m.log_coefficients(0.0, &[4.6, 4.6]).unwrap();
        assert!((lc.drift[0] - (0.05 - 0.01 - 0.02)).abs() < 1e-15);
        assert!((lc.drift[1] - (0.05 - 0.02 - 0.025)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_coefficient_is_reported() {
        let divs = vec![Coefficient::custom(|_, _: &[f64]| f64::NAN)];
        let vols = vec![vec![Coefficient::constant(0.2)]];
        let m = MarketModel::new(0.0, 1.0, 0.01, divs, vols).unwrap();
        assert!(matches!(m.log_coefficients(0.1, &[0.0]), Err(Error::Coefficient { .. })));
    }

    #[test]
    fn ellipticity_examples() {
        let m = identity_model(0.0, 0.0);
        assert!((m.check_ellipticity(&[(0.0, vec![0.0, 0.0])]).unwrap() - 1.0).abs() < 1e-15);

        // σ̂ = chol([[1, ρ], [ρ, 1]]) gives â with eigenvalues 1 ± ρ
        let rho: f64 = 0.5;
        let vol = Matrix::from_rows(&[vec![1.0, 0.0], vec![rho, (1.0 - rho * rho).sqrt()]]);
        let c = MarketModel::constant(0.0, 1.0, 0.1, &[0.0, 0.0], &vol).unwrap();
        assert!((c.check_ellipticity(&[(0.0, vec![0.0, 0.0])]).unwrap() - 0.5).abs() < 1e-12);
        assert!(c.check_ellipticity(&[]).is_err());
    }

    /// Smallest root of the characteristic polynomial of a symmetric 2×2.
    fn min_eig_2x2(a: &Matrix<f64>) -> f64 {
        let tr = a[(0, 0)] + a[(1, 1)];
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        tr / 2.0 - (tr * tr / 4.0 - det).sqrt()
    }

    /// Smallest root of det(A − μI) for a symmetric 3×3 via the
    /// trigonometric cubic solution.
    fn min_eig_3x3(a: &Matrix<f64>) -> f64 {
        let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        let q = (a[(0, 0)] + a[(1, 1)] + a[(2, 2)]) / 3.0;
        let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let mut b = a.clone();
        for i in 0..3 {
            b[(i, i)] -= q;
        }
        let det = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
            - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
            + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
        let r = (det / (2.0 * p * p * p)).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
    }

    fn local_vol_model(n: usize) -> MarketModel<f64> {
        let divs = (0..n).map(|_| Coefficient::constant(0.01)).collect();
        let vols = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            Coefficient::Sine { base: 0.3, amplitude: 0.1, axis: i, frequency: 1.0 }
                        } else if j < i {
                            Coefficient::Affine { base: 0.05, slope: vec![0.01; n] }
                        } else {
                            Coefficient::constant(0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        MarketModel::new(0.03, 1.0, 0.01, divs, vols).unwrap()
    }

    #[test]
    fn ellipticity_matches_characteristic_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 3] {
            let m = local_vol_model(n);
            for _ in 0..200 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let t = rng.gen_range(0.0..1.0);
                let got = m.check_ellipticity(&[(t, x.clone())]).unwrap();
                let a = m.diffusion_log(t, &x);
                let want = if n == 2 { min_eig_2x2(&a) } else { min_eig_3x3(&a) };
                assert!(got > 0.0);
                assert!((got - want).abs() < 1e-12, "n={n} got {got} want {want}");
            }
        }
    }

    #[test]
    fn validate_rejects_overstated_lambda() {
        let m = MarketModel::constant(0.0, 1.0, 2.0, &[0.0], &Matrix::identity(1)).unwrap();
        assert!(matches!(m.validate(&[(0.0, vec![0.0])]), Err(Error::Model(_))));
    }

    #[test]
    fn hoelder_constant_coefficients_is_zero() {
        let m = identity_model(0.05, 0.01);
        let pairs = vec![((0.0, vec![0.0, 0.0]), (0.5, vec![1.0, -1.0]))];
        let est = m.check_hoelder(&pairs).unwrap();
        assert_eq!(est.constant, 0.0);
    }

    #[test]
    fn hoelder_sine_bounded_by_lipschitz() {
        let divs = vec![Coefficient::constant(0.0)];
        let vols = vec![vec![Coefficient::Sine { base: 0.2, amplitude: 0.1, axis: 0, frequency: 1.0 }]];
        let m: MarketModel<f64> = MarketModel::new(0.0, 1.0, 0.001, divs, vols).unwrap();
        let pairs: Vec<_> = (0..2000)
            .map(|k| {
                let x = -5.0 + k as f64 * 0.005;
                ((0.3, vec![x]), (0.3, vec![x + 1e-3]))
            })
            .chain(std::iter::once(((0.2, vec![1.0]), (0.2, vec![1.0]))))
            .collect();
        let est = m.check_hoelder(&pairs).unwrap();
        assert!(est.constant <= 0.1 + 1e-12);
        assert!(est.constant > 0.099);
        assert_eq!(est.skipped, vec![2000]);
    }

    #[test]
    fn hoelder_sqrt_time_ratio() {
        let divs = vec![Coefficient::constant(0.0)];
        let vols = vec![vec![Coefficient::SqrtTime { base: 0.2, amplitude: 0.1 }]];
        let m: MarketModel<f64> = MarketModel::new(0.0, 1.0, 0.001, divs, vols).unwrap();
        let est = m.check_hoelder(&[((0.64, vec![0.1]), (0.0, vec![0.1]))]).unwrap();
        assert!((est.constant - 0.1).abs() < 1e-14);
    }

    #[test]
    fn price_coefficients_compose_with_log() {
        let m = local_vol_model(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let s: Vec<f64> = x.iter().map(|v: &f64| v.exp()).collect();
            let t = rng.gen_range(0.0..1.0);
            let dl = m.dividend_log(t, &ln_vec(&s));
            assert_eq!(m.dividend_price(t, &s), dl);
            assert_eq!(m.vol_price(t, &s), m.vol_log(t, &ln_vec(&s)));
            let direct = m.vol_log(t, &x);
            for (a, b) in m.vol_price(t, &s).as_slice().iter().zip(direct.as_slice()) {
                assert!((a - b).abs() <= 1e-15);
            }
        }
    }
}
