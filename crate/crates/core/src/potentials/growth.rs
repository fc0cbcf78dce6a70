use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the growth function `f` controlling the potential near its wells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GrowthKind {
    /// `f(t) = t^exponent`.
    Power { exponent: f64 },
    /// `f(t) = t² (1 + t)²`, matching the quartic double well.
    Quartic,
}

/// Growth function together with the comparison constants attached to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFunction {
    pub kind: GrowthKind,
    /// Two-sided comparison `f/C₁ ≤ W ≤ C₁ f`.
    pub c1: f64,
    /// Linear growth `W ≥ |u|/C₂` for `|u| ≥ C₂`.
    pub c2: f64,
    /// Doubling `f(2t) ≤ C₃ f(t)`.
    pub c3: f64,
    /// Radius on which `f` is audited for monotonicity.
    pub radius: f64,
}

impl GrowthFunction {
    pub fn new(kind: GrowthKind, c1: f64, c2: f64, c3: f64, radius: f64) -> Result<Self> {
        if let GrowthKind::Power { exponent } = kind {
            if !(exponent > 0.0) {
                return Err(Error::Parameter("growth exponent must be positive".into()));
            }
        }
        if [c1, c2, c3, radius].iter().any(|c| !(*c > 0.0)) {
            return Err(Error::Parameter("growth constants must be positive".into()));
        }
        Ok(Self {
            kind,
            c1,
            c2,
            c3,
            radius,
        })
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self.kind {
            GrowthKind::Power { exponent } => t.powf(exponent),
            GrowthKind::Quartic => {
                let s = t * (1.0 + t);
                s * s
            }
        }
    }

    /// Growth of the geodesic weight `2√W`, i.e. `√f`.
    #[inline]
    pub fn weight_growth(&self, t: f64) -> f64 {
        self.eval(t).sqrt()
    }

    /// Constant `C_G` of the weight-level growth conditions: large enough for the
    /// two-sided comparison (`2√C₁`), the doubling of `√f` (`√C₃`) and the additive
    /// slack inside the radius (`√f_G(R)`).
    pub fn weight_constant(&self) -> f64 {
        (2.0 * self.c1.sqrt())
            .max(self.c3.sqrt())
            .max(self.weight_growth(self.radius).sqrt())
    }

    /// Exponent `α` such that `f(t) ≤ C t^α` near zero.
    pub fn exponent_near_zero(&self) -> f64 {
        match self.kind {
            GrowthKind::Power { exponent } => exponent,
            GrowthKind::Quartic => 2.0,
        }
    }
}
