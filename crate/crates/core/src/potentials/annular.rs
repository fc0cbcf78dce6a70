//! Nested-annulus obstacle potential whose geodesics are forced to wind around
//! every ring, so their Euclidean length grows like the harmonic series.
//!
//! Ring `k` occupies `1/(k+1) < |p| ≤ 1/k`. Measured inward from its outer circle
//! it is split into five bands of equal width: outer corridor, obstacle A (open
//! only near the angle `-π/2`), middle corridor, obstacle B (open only near
//! `+π/2`), inner corridor. Corridors carry the cheap level `ε_k` (interpolated to
//! `ε_{k+1}` across the inner half), obstacles rise to `M_k = M₁/k`. Inside the last
//! ring the potential decays linearly to zero at the origin; outside the unit disk
//! it ramps up to `M₁`. A cone factor makes it vanish at the outer well `(0, 1)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BAND: f64 = 0.2;
const RAMP: f64 = 0.05;
const OUTER_RAMP: f64 = 0.05;
const WELL_CONE: f64 = 0.05;

/// Raw (unshifted) annular obstacle landscape on ℝ².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnularShape {
    rings: usize,
    m1: f64,
    /// Corridor levels `ε_1 > ε_2 > ... > ε_{rings+1}`.
    levels: Vec<f64>,
    /// Angular half-width of the openings in the obstacle bands.
    gap: f64,
}

impl AnnularShape {
    pub fn new(rings: usize, m1: f64, levels: Vec<f64>, gap: f64) -> Result<Self> {
        if rings == 0 {
            return Err(Error::Parameter("annular potential needs at least one ring".into()));
        }
        if levels.len() < rings + 1 {
            return Err(Error::Parameter(format!(
                "{rings} rings need {} corridor levels, got {}",
                rings + 1,
                levels.len()
            )));
        }
        if levels.iter().any(|e| !(*e > 0.0)) || levels.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Parameter(
                "corridor levels must be positive and strictly decreasing".into(),
            ));
        }
        if !(m1 > 0.0) || !(levels[0] < m1 / 2.0) {
            return Err(Error::Parameter("first corridor level must satisfy 0 < eps_1 < M_1/2".into()));
        }
        if !(gap > 0.0 && gap < PI / 16.0) {
            return Err(Error::Parameter("angular gap must lie in (0, pi/16)".into()));
        }
        let mut levels = levels;
        levels.truncate(rings + 1);
        Ok(Self {
            rings,
            m1,
            levels,
            gap,
        })
    }

    pub fn rings(&self) -> usize {
        self.rings
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Obstacle height in ring `k` (1-based).
    pub fn obstacle_level(&self, k: usize) -> f64 {
        self.m1 / k as f64
    }

    /// The two zeros of the landscape: the origin and the top of the unit circle.
    pub fn raw_wells() -> ([f64; 2], [f64; 2]) {
        ([0.0, 0.0], [0.0, 1.0])
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        let (x, y) = (p[0], p[1]);
        let r = x.hypot(y);
        let n = self.rings;
        let raw = if r >= 1.0 {
            let e1 = self.levels[0];
            e1 + (self.m1 - e1) * ((r - 1.0) / OUTER_RAMP).min(1.0)
        } else {
            let r_last = 1.0 / (n + 1) as f64;
            if r <= r_last {
                self.levels[n] * r / r_last
            } else {
                let k = ((1.0 / r).floor() as usize).clamp(1, n);
                self.ring_value(k, r, y.atan2(x))
            }
        };
        let cone = (x.hypot(y - 1.0) / WELL_CONE).min(1.0);
        raw * cone
    }

    fn ring_value(&self, k: usize, r: f64, theta: f64) -> f64 {
        let r_out = 1.0 / k as f64;
        let r_in = 1.0 / (k + 1) as f64;
        let xi = ((r_out - r) / (r_out - r_in)).clamp(0.0, 1.0);
        let (e_out, e_in) = (self.levels[k - 1], self.levels[k]);
        let base = if xi <= 0.5 {
            e_out
        } else {
            e_out + (e_in - e_out) * (xi - 0.5) / 0.5
        };
        let (band_start, opening) = if (BAND..2.0 * BAND).contains(&xi) {
            (BAND, -FRAC_PI_2)
        } else if (3.0 * BAND..4.0 * BAND).contains(&xi) {
            (3.0 * BAND, FRAC_PI_2)
        } else {
            return base;
        };
        let radial = ((xi - band_start).min(band_start + BAND - xi) / RAMP).clamp(0.0, 1.0);
        let angular = ((angle_dist(theta, opening) - self.gap) / self.gap).clamp(0.0, 1.0);
        base + (self.obstacle_level(k) - base) * radial * angular
    }
}

fn angle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(rings: usize) -> AnnularShape {
        let levels: Vec<f64> = (0..=rings).map(|k| 1e-4 * 0.25f64.powi(k as i32)).collect();
        AnnularShape::new(rings, 1.0, levels, 0.15).unwrap()
    }

    #[test]
    fn outer_circle_carries_first_level() {
        let s = shape(1);
        // away from the cone around the outer well
        assert!((s.eval(&[1.0, 0.0]) - 1e-4).abs() < 1e-15);
        assert!((s.eval(&[0.0, -1.0]) - 1e-4).abs() < 1e-15);
    }

    #[test]
    fn obstacle_plateau_reaches_m1() {
        let s = shape(1);
        // ring 1 spans (1/2, 1]; band A plateau at xi = 0.3, away from the -pi/2 opening
        let r = 1.0 - 0.3 * 0.5;
        assert!((s.eval(&[r, 0.0]) - 1.0).abs() < 1e-12);
        // inside the opening the obstacle is absent
        assert!((s.eval(&[0.0, -r]) - 1e-4).abs() < 1e-15);
    }

    #[test]
    fn vanishes_only_at_wells() {
        let s = shape(3);
        assert_eq!(s.eval(&[0.0, 0.0]), 0.0);
        assert_eq!(s.eval(&[0.0, 1.0]), 0.0);
        for i in 0..200 {
            for j in 0..200 {
                let p = [-1.2 + 2.4 * i as f64 / 199.0, -1.2 + 2.4 * j as f64 / 199.0];
                let near_well = p[0].hypot(p[1]) < 1e-9 || p[0].hypot(p[1] - 1.0) < 1e-9;
                if !near_well {
                    assert!(s.eval(&p) > 0.0, "zero at {p:?}");
                }
            }
        }
    }

    #[test]
    fn continuous_across_ring_boundaries() {
        let s = shape(4);
        for k in 1..=5usize {
            let r = 1.0 / k as f64;
            for theta in [0.3f64, 1.0, 2.5, -2.0] {
                let (c, sn) = (theta.cos(), theta.sin());
                let a = s.eval(&[(r - 1e-10) * c, (r - 1e-10) * sn]);
                let b = s.eval(&[(r + 1e-10) * c, (r + 1e-10) * sn]);
                assert!((a - b).abs() < 1e-6, "jump at r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_bad_levels() {
        assert!(AnnularShape::new(2, 1.0, vec![0.1, 0.2, 0.05], 0.1).is_err());
        assert!(AnnularShape::new(2, 1.0, vec![0.6, 0.2, 0.05], 0.1).is_err());
        assert!(AnnularShape::new(2, 1.0, vec![0.1, 0.05], 0.1).is_err());
        assert!(AnnularShape::new(1, 1.0, vec![0.1, 0.05], 0.5).is_err());
    }
}
