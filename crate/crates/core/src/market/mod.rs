//! Diffusion coefficients, payoffs and sampled regularity checks.

mod coefficient;
mod model;
mod payoff;

pub use coefficient::Coefficient;
pub use model::{HoelderEstimate, LogCoefficients, MarketModel, SamplePoint};
pub use payoff::{PayoffKind, PayoffSpec};
