use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::ValueSurface;
use crate::scalar::Real;

/// Candidate hedge `φ(t, S)` entering the balance equation through
/// `z^φ = (S¹φ¹, …, Sⁿφⁿ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub enum HedgeField<T> {
    /// `∇v` read from the value surface.
    Gradient,
    /// `factor · ∇v`.
    Scaled { factor: T },
    /// `∇v` with one component zeroed.
    DropAsset { asset: usize },
    Zero,
    Constant { value: Vec<T> },
}

impl<T: Real> HedgeField<T> {
    pub fn eval(&self, surface: &ValueSurface<T>, t: T, s: &[T]) -> Result<Vec<T>> {
        Ok(match self {
            HedgeField::Gradient => surface.eval_grad(t, s)?,
            HedgeField::Scaled { factor } => surface.eval_grad(t, s)?.into_iter().map(|g| g * *factor).collect(),
            HedgeField::DropAsset { asset } => {
                let mut g = surface.eval_grad(t, s)?;
                *g.get_mut(*asset).ok_or_else(|| Error::Field(format!("asset {asset} out of range")))? = T::zero();
                g
            }
            HedgeField::Zero => vec![T::zero(); s.len()],
            HedgeField::Constant { value } => {
                if value.len() != s.len() {
                    return Err(Error::Field(format!("constant field has {} components for {} assets", value.len(), s.len())));
                }
                value.clone()
            }
        })
    }

    /// Value of the field at a stored grid node.
    fn at_node(&self, surface: &ValueSurface<T>, layer: usize, node: usize) -> Vec<T> {
        let g = surface.gradient_at(layer, node);
        match self {
            HedgeField::Gradient => g.to_vec(),
            HedgeField::Scaled { factor } => g.iter().map(|&x| x * *factor).collect(),
            HedgeField::DropAsset { asset } => {
                let mut g = g.to_vec();
                if let Some(x) = g.get_mut(*asset) {
                    *x = T::zero();
                }
                g
            }
            HedgeField::Zero => vec![T::zero(); g.len()],
            HedgeField::Constant { value } => value.clone(),
        }
    }

    /// Largest `|φⁱ|` over every stored node.
    pub fn sup_norm(&self, surface: &ValueSurface<T>) -> T {
        let grid = surface.grid();
        let mut sup = T::zero();
        for k in 0..grid.layers() {
            for node in 0..grid.node_count() {
                for x in self.at_node(surface, k, node) {
                    sup = sup.max(x.abs());
                }
            }
        }
        sup
    }

    /// Checks `|φ| ≤ bound` and finiteness on every stored node.
    pub fn check_bounded(&self, surface: &ValueSurface<T>, bound: T) -> Result<T> {
        let sup = self.sup_norm(surface);
        if !sup.is_finite() || sup > bound {
            return Err(Error::Field(format!("field sup norm {sup} exceeds declared bound {bound}")));
        }
        Ok(sup)
    }

    /// True when the field agrees with `∇v` on every stored node.
    pub fn coincides_with_gradient(&self, surface: &ValueSurface<T>) -> bool {
        let grid = surface.grid();
        (0..grid.layers()).all(|k| {
            (0..grid.node_count()).all(|node| self.at_node(surface, k, node).as_slice() == surface.gradient_at(k, node))
        })
    }

    /// Report tag: `"grad"` or `"perturbed:<desc>"`.
    pub fn descriptor(&self) -> String {
        match self {
            HedgeField::Gradient => "grad".into(),
            other => format!("perturbed:{other}"),
        }
    }
}

impl<T: Real> fmt::Display for HedgeField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HedgeField::Gradient => f.write_str("grad"),
            HedgeField::Scaled { factor } => write!(f, "scaled({factor})"),
            HedgeField::DropAsset { asset } => write!(f, "drop_asset({})", asset + 1),
            HedgeField::Zero => f.write_str("zero"),
            HedgeField::Constant { value } => {
                let parts: Vec<String> = value.iter().map(|v| v.to_string()).collect();
                write!(f, "constant({})", parts.join(";"))
            }
        }
    }
}
