//! Scalar abstractions.
//!
//! Two families of numbers flow through the crate. Floating-point types
//! ([`Real`]) drive the diffusion, the obstacle solver and the balance
//! checks. The tree engine only needs an ordered field ([`Scalar`]) so it
//! can run on exact rationals as well as on floats.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Floating-point scalar used by the continuous-model modules.
pub trait Real:
    Float + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ordered field used by the exact tree engine.
pub trait Scalar: Clone + PartialOrd + Num + Neg<Output = Self> + Debug + Send + Sync {
    /// `num / den`, `den != 0`.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Nearest value on the lattice `k / den`, or the float itself for
    /// floating-point scalars. `None` for non-finite input.
    fn from_f64_rounded(x: f64, den: u64) -> Option<Self>;

    fn approx_f64(&self) -> f64;

    /// Canonical text form; `"num/den"` for rationals.
    fn to_text(&self) -> String;

    fn parse_text(s: &str) -> Option<Self>;

    /// Allowed slack when checking that branch probabilities sum to one.
    fn probability_tolerance() -> Self;

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn is_negative_value(&self) -> bool {
        *self < Self::zero()
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn from_f64_rounded(x: f64, _den: u64) -> Option<Self> {
                x.is_finite().then_some(x as $t)
            }

            fn approx_f64(&self) -> f64 {
                *self as f64
            }

            fn probability_tolerance() -> Self {
                <$t>::EPSILON * 64.0
            }

            fn to_text(&self) -> String {
                format!("{:?}", self)
            }

            fn parse_text(s: &str) -> Option<Self> {
                s.trim().parse().ok()
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64_rounded(x: f64, den: u64) -> Option<Self> {
        if !x.is_finite() || den == 0 {
            return None;
        }
        let scaled = (x * den as f64).round();
        let num = BigInt::from_f64(scaled)?;
        Some(BigRational::new(num, BigInt::from(den)))
    }

    fn approx_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn probability_tolerance() -> Self {
        BigRational::zero()
    }

    fn to_text(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn parse_text(s: &str) -> Option<Self> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().ok()?;
                let d: BigInt = d.trim().parse().ok()?;
                (!d.is_zero()).then(|| BigRational::new(n, d))
            }
            None => Some(BigRational::from_integer(s.parse().ok()?)),
        }
    }

    fn is_negative_value(&self) -> bool {
        self.is_negative()
    }
}

/// `1` as any scalar; keeps call sites short.
pub fn one<T: Scalar>() -> T {
    T::one()
}
