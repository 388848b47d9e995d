use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

type CustomFn<T> = Arc<dyn Fn(T, &[T]) -> T + Send + Sync>;

/// A scalar coefficient `g(t, x)` in log coordinates `x = ln S`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub enum Coefficient<T> {
    Constant { value: T },
    /// `base + Σ slope_i x_i`.
    Affine { base: T, slope: Vec<T> },
    /// Piecewise-linear in `x[axis]` through `(knots, values)`; constant
    /// continuation outside the table.
    Tabulated { axis: usize, knots: Vec<T>, values: Vec<T> },
    /// `base + amplitude * sin(frequency * x[axis])`.
    Sine { base: T, amplitude: T, axis: usize, frequency: T },
    /// `base + amplitude * sqrt(t)`.
    SqrtTime { base: T, amplitude: T },
    #[serde(skip)]
    Custom(CustomFn<T>),
}

impl<T: Real> Coefficient<T> {
    pub fn constant(value: T) -> Self {
        Coefficient::Constant { value }
    }

    pub fn custom(f: impl Fn(T, &[T]) -> T + Send + Sync + 'static) -> Self {
        Coefficient::Custom(Arc::new(f))
    }

    pub fn eval(&self, t: T, x: &[T]) -> T {
        match self {
            Coefficient::Constant { value } => *value,
            Coefficient::Affine { base, slope } => {
                slope.iter().zip(x).fold(*base, |acc, (&s, &xi)| acc + s * xi)
            }
            Coefficient::Tabulated { axis, knots, values } => {
                interpolate_table(knots, values, x.get(*axis).copied().unwrap_or_else(T::nan))
            }
            Coefficient::Sine { base, amplitude, axis, frequency } => {
                let xi = x.get(*axis).copied().unwrap_or_else(T::nan);
                *base + *amplitude * (*frequency * xi).sin()
            }
            Coefficient::SqrtTime { base, amplitude } => *base + *amplitude * t.max(T::zero()).sqrt(),
            Coefficient::Custom(f) => f(t, x),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant { .. })
    }

    pub fn is_time_independent(&self) -> bool {
        !matches!(self, Coefficient::SqrtTime { .. } | Coefficient::Custom(_))
    }

    /// Structural sanity (table shapes, axis bounds).
    pub(crate) fn check_shape(&self, n: usize) -> Result<(), String> {
        match self {
            Coefficient::Affine { slope, .. } if slope.len() != n => {
                Err(format!("affine slope has {} entries, expected {n}", slope.len()))
            }
            Coefficient::Tabulated { axis, knots, values } => {
                if *axis >= n {
                    return Err(format!("tabulated axis {axis} >= n = {n}"));
                }
                if knots.is_empty() || knots.len() != values.len() {
                    return Err("tabulated coefficient needs equal, nonempty knots and values".into());
                }
                if knots.windows(2).any(|w| w[1] <= w[0]) {
                    return Err("tabulated knots must be strictly increasing".into());
                }
                Ok(())
            }
            Coefficient::Sine { axis, .. } if *axis >= n => Err(format!("sine axis {axis} >= n = {n}")),
            _ => Ok(()),
        }
    }
}

fn interpolate_table<T: Real>(knots: &[T], values: &[T], x: T) -> T {
    let last = knots.len() - 1;
    if x <= knots[0] {
        return values[0];
    }
    if x >= knots[last] {
        return values[last];
    }
    let hi = knots.partition_point(|&k| k <= x).min(last);
    let lo = hi - 1;
    let w = (x - knots[lo]) / (knots[hi] - knots[lo]);
    values[lo] + w * (values[hi] - values[lo])
}

impl<T: fmt::Debug> fmt::Debug for Coefficient<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant { value } => write!(f, "Constant({value:?})"),
            Coefficient::Affine { base, slope } => write!(f, "Affine({base:?}, {slope:?})"),
            Coefficient::Tabulated { axis, knots, values } => {
                write!(f, "Tabulated(axis {axis}, {knots:?} -> {values:?})")
            }
            Coefficient::Sine { base, amplitude, axis, frequency } => {
                write!(f, "Sine({base:?} + {amplitude:?} sin({frequency:?} x{axis}))")
            }
            Coefficient::SqrtTime { base, amplitude } => write!(f, "SqrtTime({base:?} + {amplitude:?} sqrt t)"),
            Coefficient::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}
