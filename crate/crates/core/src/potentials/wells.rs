use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecmath::norm;

use super::domain::SpatialDomain;

/// One smooth branch `x ↦ a_i(x)` of the well field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WellExpr {
    Constant {
        value: Vec<f64>,
    },
    /// `a(x) = offset + slope · x`, `slope` stored row-major as M rows of N entries.
    Affine {
        offset: Vec<f64>,
        slope: Vec<Vec<f64>>,
    },
    /// `a(x) = offset + coeff · |x - center|²`.
    Quadratic {
        offset: Vec<f64>,
        center: Vec<f64>,
        coeff: Vec<f64>,
    },
}

impl WellExpr {
    pub fn constant(value: Vec<f64>) -> Self {
        WellExpr::Constant { value }
    }

    pub fn phase_dim(&self) -> usize {
        match self {
            WellExpr::Constant { value } => value.len(),
            WellExpr::Affine { offset, .. } | WellExpr::Quadratic { offset, .. } => offset.len(),
        }
    }

    fn validate(&self, space_dim: usize) -> Result<()> {
        let m = self.phase_dim();
        if m == 0 || m > 3 {
            return Err(Error::Parameter(format!("phase dimension must be 1..=3, got {m}")));
        }
        match self {
            WellExpr::Constant { .. } => Ok(()),
            WellExpr::Affine { slope, .. } => {
                if slope.len() != m || slope.iter().any(|r| r.len() != space_dim) {
                    return Err(Error::Parameter(format!(
                        "affine slope must be {m}x{space_dim}"
                    )));
                }
                Ok(())
            }
            WellExpr::Quadratic { center, coeff, .. } => {
                if center.len() != space_dim || coeff.len() != m {
                    return Err(Error::Parameter(
                        "quadratic well needs center in space and coeff in phase space".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            WellExpr::Constant { value } => out.copy_from_slice(value),
            WellExpr::Affine { offset, slope } => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = offset[k] + slope[k].iter().zip(x).map(|(s, xi)| s * xi).sum::<f64>();
                }
            }
            WellExpr::Quadratic {
                offset,
                center,
                coeff,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                for (k, o) in out.iter_mut().enumerate() {
                    *o = offset[k] + coeff[k] * r2;
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.phase_dim()];
        self.eval_into(x, &mut out);
        out
    }

    pub fn is_constant(&self) -> bool {
        match self {
            WellExpr::Constant { .. } => true,
            WellExpr::Affine { slope, .. } => slope.iter().flatten().all(|s| *s == 0.0),
            WellExpr::Quadratic { coeff, .. } => coeff.iter().all(|c| *c == 0.0),
        }
    }

    /// Exact sup of `|a(x)|` over the box: the norm is convex in `x` (affine) or in
    /// `|x - c|²` (quadratic), so the extremes sit at corners or at the closest point.
    fn sup_norm(&self, lower: &[f64], upper: &[f64]) -> f64 {
        let corners = box_corners(lower, upper);
        let mut sup = corners
            .iter()
            .map(|c| norm(&self.eval(c)))
            .fold(0.0, f64::max);
        if let WellExpr::Quadratic { center, .. } = self {
            let closest: Vec<f64> = center
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(c, (l, u))| c.clamp(*l, *u))
                .collect();
            sup = sup.max(norm(&self.eval(&closest)));
        }
        sup
    }
}

fn box_corners(lower: &[f64], upper: &[f64]) -> Vec<Vec<f64>> {
    let n = lower.len();
    (0..1usize << n)
        .map(|mask| {
            (0..n)
                .map(|i| if mask >> i & 1 == 1 { upper[i] } else { lower[i] })
                .collect()
        })
        .collect()
}

/// Well field `a(x)` in the symmetric convention `b(x) = -a(x)`, one branch per subdomain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellField {
    branches: Vec<WellExpr>,
    delta: f64,
    sup_norm: f64,
}

impl WellField {
    pub fn new(domain: &SpatialDomain, branches: Vec<WellExpr>, delta: f64) -> Result<Self> {
        if branches.len() != domain.n_subdomains() {
            return Err(Error::Parameter(format!(
                "{} well branches given for {} subdomains",
                branches.len(),
                domain.n_subdomains()
            )));
        }
        if !(delta > 0.0) {
            return Err(Error::Parameter("well separation delta must be positive".into()));
        }
        let m = branches[0].phase_dim();
        for b in &branches {
            b.validate(domain.dim())?;
            if b.phase_dim() != m {
                return Err(Error::Parameter("all well branches must share a phase dimension".into()));
            }
        }
        let sup_norm = branches
            .iter()
            .map(|b| b.sup_norm(domain.lower(), domain.upper()))
            .fold(0.0, f64::max);
        Ok(Self {
            branches,
            delta,
            sup_norm,
        })
    }

    pub fn phase_dim(&self) -> usize {
        self.branches[0].phase_dim()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn branches(&self) -> &[WellExpr] {
        &self.branches
    }

    pub fn branch(&self, i: usize) -> &WellExpr {
        &self.branches[i]
    }

    pub fn eval_branch_into(&self, branch: usize, x: &[f64], out: &mut [f64]) {
        self.branches[branch].eval_into(x, out)
    }

    pub fn is_constant(&self) -> bool {
        self.branches.iter().all(WellExpr::is_constant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_moving_well() {
        let w = WellExpr::Quadratic {
            offset: vec![1.0],
            center: vec![0.5],
            coeff: vec![0.5],
        };
        assert_eq!(w.eval(&[0.5]), vec![1.0]);
        assert!((w.eval(&[1.0])[0] - 1.125).abs() < 1e-15);
        let d = SpatialDomain::interval(0.0, 1.0).unwrap();
        let field = WellField::new(&d, vec![w], 1.0).unwrap();
        assert!((field.sup_norm() - 1.125).abs() < 1e-15);
    }

    #[test]
    fn affine_sup_at_corner() {
        let w = WellExpr::Affine {
            offset: vec![1.0, 0.0],
            slope: vec![vec![0.5], vec![0.0]],
        };
        let d = SpatialDomain::interval(-1.0, 1.0).unwrap();
        let field = WellField::new(&d, vec![w], 0.5).unwrap();
        assert!((field.sup_norm() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn branch_count_must_match() {
        let d = SpatialDomain::interval(0.0, 1.0)
            .unwrap()
            .with_breakpoints(vec![0.5])
            .unwrap();
        let w = WellExpr::constant(vec![1.0]);
        assert!(WellField::new(&d, vec![w.clone()], 1.0).is_err());
        assert!(WellField::new(&d, vec![w.clone(), w], 1.0).is_ok());
    }
}
