use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed when testing whether a point lies in the box.
const BOX_TOL: f64 = 1e-12;

/// A monotone polyline splitting a 2-D box into two subdomains.
///
/// The curve is the graph `other = g(coord[axis])`, linear between vertices.
/// Points with `other > g` belong to subdomain 1, the rest (including the curve
/// itself) to subdomain 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCurve {
    pub axis: usize,
    pub vertices: Vec<[f64; 2]>,
}

impl SplitCurve {
    pub fn new(axis: usize, vertices: Vec<[f64; 2]>) -> Result<Self> {
        if axis > 1 {
            return Err(Error::Parameter(format!("split axis must be 0 or 1, got {axis}")));
        }
        if vertices.len() < 2 {
            return Err(Error::Parameter("split curve needs at least two vertices".into()));
        }
        if vertices.windows(2).any(|w| w[1][axis] <= w[0][axis]) {
            return Err(Error::Parameter(
                "split curve vertices must be strictly increasing along the split axis".into(),
            ));
        }
        Ok(Self { axis, vertices })
    }

    /// Height of the curve over the coordinate `s` along `axis`, extended constantly.
    pub fn height(&self, s: f64) -> f64 {
        let a = self.axis;
        let b = 1 - a;
        let v = &self.vertices;
        if s <= v[0][a] {
            return v[0][b];
        }
        for w in v.windows(2) {
            if s <= w[1][a] {
                let t = (s - w[0][a]) / (w[1][a] - w[0][a]);
                return w[0][b] + t * (w[1][b] - w[0][b]);
            }
        }
        v[v.len() - 1][b]
    }

    fn side(&self, x: &[f64]) -> usize {
        let h = self.height(x[self.axis]);
        usize::from(x[1 - self.axis] > h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Partition {
    Whole,
    /// 1-D breakpoints `b_1 < ... < b_{K-1}` strictly inside the interval.
    Breakpoints(Vec<f64>),
    Split(SplitCurve),
}

/// Axis-aligned box in dimension 1 or 2, optionally partitioned into subdomains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    partition: Partition,
}

impl SpatialDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() > 2 || lower.len() != upper.len() {
            return Err(Error::Parameter(format!(
                "domain bounds must have matching length 1 or 2 (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::Parameter("domain requires finite lower < upper on every axis".into()));
        }
        Ok(Self {
            lower,
            upper,
            partition: Partition::Whole,
        })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn rect(lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        Self::new(lo.to_vec(), hi.to_vec())
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Result<Self> {
        if self.dim() != 1 {
            return Err(Error::Parameter("breakpoints only apply to 1-D domains".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("breakpoints must be strictly increasing".into()));
        }
        if breakpoints
            .iter()
            .any(|&b| b <= self.lower[0] || b >= self.upper[0])
        {
            return Err(Error::Parameter("breakpoints must lie strictly inside the interval".into()));
        }
        self.partition = if breakpoints.is_empty() {
            Partition::Whole
        } else {
            Partition::Breakpoints(breakpoints)
        };
        Ok(self)
    }

    pub fn with_split(mut self, split: SplitCurve) -> Result<Self> {
        if self.dim() != 2 {
            return Err(Error::Parameter("split curves only apply to 2-D domains".into()));
        }
        self.partition = Partition::Split(split);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn n_subdomains(&self) -> usize {
        match &self.partition {
            Partition::Whole => 1,
            Partition::Breakpoints(b) => b.len() + 1,
            Partition::Split(_) => 2,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| {
                let slack = BOX_TOL * (u - l);
                *v >= l - slack && *v <= u + slack
            })
    }

    /// Index of the subdomain containing `x`; boundary ties go to the lower index.
    pub fn subdomain_of(&self, x: &[f64]) -> Result<usize> {
        if !self.contains(x) {
            return Err(Error::Domain(format!("point {x:?} lies outside the domain box")));
        }
        Ok(match &self.partition {
            Partition::Whole => 0,
            Partition::Breakpoints(b) => b.iter().filter(|&&bp| bp < x[0]).count(),
            Partition::Split(curve) => curve.side(x),
        })
    }

    /// Breakpoint (1-D) index `i` such that `x` sits exactly on the boundary between
    /// subdomains `i` and `i + 1`, within `tol`.
    pub fn boundary_at(&self, x: &[f64], tol: f64) -> Option<(usize, usize)> {
        match &self.partition {
            Partition::Breakpoints(b) => b
                .iter()
                .position(|&bp| (bp - x[0]).abs() <= tol)
                .map(|i| (i, i + 1)),
            Partition::Split(curve) => {
                let h = curve.height(x[curve.axis]);
                ((x[1 - curve.axis] - h).abs() <= tol).then_some((0, 1))
            }
            Partition::Whole => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breakpoint_ties_resolve_low() {
        let d = SpatialDomain::interval(0.0, 1.0)
            .unwrap()
            .with_breakpoints(vec![0.25, 0.5])
            .unwrap();
        assert_eq!(d.n_subdomains(), 3);
        assert_eq!(d.subdomain_of(&[0.1]).unwrap(), 0);
        assert_eq!(d.subdomain_of(&[0.25]).unwrap(), 0);
        assert_eq!(d.subdomain_of(&[0.2500001]).unwrap(), 1);
        assert_eq!(d.subdomain_of(&[0.5]).unwrap(), 1);
        assert_eq!(d.subdomain_of(&[1.0]).unwrap(), 2);
        assert!(d.subdomain_of(&[1.5]).is_err());
        assert_eq!(d.boundary_at(&[0.5], 1e-12), Some((1, 2)));
    }

    #[test]
    fn split_curve_sides() {
        let curve = SplitCurve::new(0, vec![[0.0, 0.5], [1.0, 0.5]]).unwrap();
        let d = SpatialDomain::rect([0.0, 0.0], [1.0, 1.0])
            .unwrap()
            .with_split(curve)
            .unwrap();
        assert_eq!(d.subdomain_of(&[0.3, 0.2]).unwrap(), 0);
        assert_eq!(d.subdomain_of(&[0.3, 0.5]).unwrap(), 0);
        assert_eq!(d.subdomain_of(&[0.3, 0.7]).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_boxes() {
        assert!(SpatialDomain::interval(1.0, 0.0).is_err());
        assert!(SpatialDomain::new(vec![0.0; 3], vec![1.0; 3]).is_err());
        assert!(SpatialDomain::interval(0.0, 1.0)
            .unwrap()
            .with_breakpoints(vec![1.0])
            .is_err());
    }
}
