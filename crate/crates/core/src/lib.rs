//! American options in a multi-asset diffusion market: obstacle-problem
//! pricing, path simulation, exact Snell envelope computations on finite
//! trees and a pathwise check of the stochastic balance equation linking
//! the value function and its gradient.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balance;
pub mod error;
pub mod linalg;
pub mod market;
pub mod pde;
pub mod scalar;
pub mod sde;
pub mod snell;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

/// Exact scalar used by the tree engine.
pub type Rational = num_rational::BigRational;

pub type MarketModelF64 = market::MarketModel<f64>;
pub type PayoffF64 = market::PayoffSpec<f64>;
pub type ValueSurfaceF64 = pde::ValueSurface<f64>;
pub type PathBundleF64 = sde::PathBundle<f64>;
pub type HedgeFieldF64 = balance::HedgeField<f64>;
pub type MarketModelF32 = market::MarketModel<f32>;
pub type ValueSurfaceF32 = pde::ValueSurface<f32>;
pub type RationalTree = snell::FiniteTree<Rational>;
pub type RationalProcess = snell::TreeProcess<Rational>;
