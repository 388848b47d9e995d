use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKind {
    PutOnMin,
    CallOnMax,
    Spread,
    BasketPut,
}

/// Convex, Lipschitz, nonnegative exercise payoff `ψ(S)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct PayoffSpec<T> {
    pub kind: PayoffKind,
    pub strike: T,
    #[serde(default)]
    pub weights: Vec<T>,
    /// Declared Lipschitz constant (Euclidean norm on `S`).
    pub lipschitz: T,
}

impl<T: Real> PayoffSpec<T> {
    /// Payoff with the tightest Lipschitz constant of its family.
    pub fn new(kind: PayoffKind, strike: T, weights: Vec<T>) -> Result<Self> {
        if !(strike >= T::zero()) {
            return Err(Error::Payoff(format!("strike must be >= 0, got {strike}")));
        }
        let lipschitz = match kind {
            PayoffKind::PutOnMin | PayoffKind::CallOnMax => T::one(),
            PayoffKind::Spread => T::lit(2.0).sqrt(),
            PayoffKind::BasketPut => {
                if weights.is_empty() {
                    return Err(Error::Payoff("basket_put needs weights".into()));
                }
                weights.iter().map(|&w| w * w).sum::<T>().sqrt()
            }
        };
        Ok(Self { kind, strike, weights, lipschitz })
    }

    pub fn put_on_min(strike: T) -> Self {
        Self { kind: PayoffKind::PutOnMin, strike, weights: Vec::new(), lipschitz: T::one() }
    }

    pub fn call_on_max(strike: T) -> Self {
        Self { kind: PayoffKind::CallOnMax, strike, weights: Vec::new(), lipschitz: T::one() }
    }

    pub fn spread(strike: T) -> Self {
        Self { kind: PayoffKind::Spread, strike, weights: Vec::new(), lipschitz: T::lit(2.0).sqrt() }
    }

    /// `ψ ≡ 0` on `(0, ∞)ⁿ`, realized as a basket put struck at zero.
    pub fn zero(n: usize) -> Self {
        Self { kind: PayoffKind::BasketPut, strike: T::zero(), weights: vec![T::one(); n], lipschitz: T::zero() }
    }

    pub fn with_lipschitz(mut self, lipschitz: T) -> Self {
        self.lipschitz = lipschitz;
        self
    }

    /// Checks that the payoff is defined for `n` assets.
    pub fn check_dimension(&self, n: usize) -> Result<()> {
        match self.kind {
            PayoffKind::Spread if n != 2 => Err(Error::Payoff(format!("spread needs n = 2, got {n}"))),
            PayoffKind::BasketPut if self.weights.len() != n => Err(Error::Payoff(format!(
                "basket_put has {} weights for {n} assets",
                self.weights.len()
            ))),
            _ if n == 0 => Err(Error::Payoff("payoff needs at least one asset".into())),
            _ => Ok(()),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        self.kind == PayoffKind::BasketPut && self.strike == T::zero() && self.weights.iter().all(|&w| w >= T::zero())
    }

    /// Checked evaluation.
    pub fn eval(&self, s: &[T]) -> Result<T> {
        self.check_dimension(s.len())?;
        if s.iter().any(|&x| !(x > T::zero())) {
            return Err(Error::Payoff(format!("prices must be positive, got {s:?}")));
        }
        Ok(self.value(s))
    }

    /// Unchecked evaluation for hot loops; dimension validated up front.
    #[inline]
    pub fn value(&self, s: &[T]) -> T {
        let zero = T::zero();
        match self.kind {
            PayoffKind::PutOnMin => {
                let m = s.iter().copied().fold(T::infinity(), T::min);
                (self.strike - m).max(zero)
            }
            PayoffKind::CallOnMax => {
                let m = s.iter().copied().fold(T::neg_infinity(), T::max);
                (m - self.strike).max(zero)
            }
            PayoffKind::Spread => (s[0] - s[1] - self.strike).max(zero),
            PayoffKind::BasketPut => {
                let b = self.weights.iter().zip(s).fold(zero, |acc, (&w, &x)| acc + w * x);
                (self.strike - b).max(zero)
            }
        }
    }

    /// An almost-everywhere gradient of `ψ` in price units.
    pub fn gradient(&self, s: &[T]) -> Vec<T> {
        let n = s.len();
        let mut g = vec![T::zero(); n];
        if self.value(s) <= T::zero() {
            return g;
        }
        match self.kind {
            PayoffKind::PutOnMin => {
                let i = argmin(s);
                g[i] = -T::one();
            }
            PayoffKind::CallOnMax => {
                let i = argmax(s);
                g[i] = T::one();
            }
            PayoffKind::Spread => {
                g[0] = T::one();
                g[1] = -T::one();
            }
            PayoffKind::BasketPut => {
                for (gi, &w) in g.iter_mut().zip(&self.weights) {
                    *gi = -w;
                }
            }
        }
        g
    }
}

fn argmin<T: Real>(s: &[T]) -> usize {
    (0..s.len()).fold(0, |best, i| if s[i] < s[best] { i } else { best })
}

fn argmax<T: Real>(s: &[T]) -> usize {
    (0..s.len()).fold(0, |best, i| if s[i] > s[best] { i } else { best })
}
