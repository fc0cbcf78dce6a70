use serde::{Deserialize, Serialize};

use crate::vecmath::dist_pm;

use super::annular::AnnularShape;

/// Double-well shapes, each written in terms of the symmetric wells `±a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// `W = |u - a|² |u + a|²`; for a scalar phase this is `(u² - a²)²`.
    Quartic,
    /// `W = min{|u - a|^q, |u + a|^q}`.
    MinPower { q: f64 },
    /// Annular obstacle landscape, evaluated at `u + shift` (its wells are not symmetric
    /// about the origin, so phase coordinates are pre-shifted by the well midpoint).
    Annular { shape: AnnularShape, shift: [f64; 2] },
}

impl Family {
    #[inline]
    pub fn value(&self, a: &[f64], u: &[f64]) -> f64 {
        match self {
            Family::Quartic => {
                let mut dm = 0.0;
                let mut dp = 0.0;
                for (x, y) in u.iter().zip(a) {
                    dm += (x - y) * (x - y);
                    dp += (x + y) * (x + y);
                }
                dm * dp
            }
            Family::MinPower { q } => {
                let (dm, dp) = dist_pm(u, a);
                dm.min(dp).powf(*q)
            }
            Family::Annular { shape, shift } => shape.eval(&[u[0] + shift[0], u[1] + shift[1]]),
        }
    }

    /// Gradient in `u`. At the kink of the min-power family the branch of `+a` is
    /// selected; at a well with `q ≤ 1` the zero subgradient is returned.
    pub fn grad_into(&self, a: &[f64], u: &[f64], out: &mut [f64]) {
        match self {
            Family::Quartic => {
                let (dm, dp) = dist_pm(u, a);
                let (dm2, dp2) = (dm * dm, dp * dp);
                for k in 0..u.len() {
                    out[k] = 2.0 * (u[k] - a[k]) * dp2 + 2.0 * (u[k] + a[k]) * dm2;
                }
            }
            Family::MinPower { q } => {
                let (dm, dp) = dist_pm(u, a);
                let (d, sign) = if dm <= dp { (dm, -1.0) } else { (dp, 1.0) };
                if d == 0.0 {
                    out.iter_mut().for_each(|o| *o = 0.0);
                    return;
                }
                let c = q * d.powf(q - 2.0);
                for k in 0..u.len() {
                    out[k] = c * (u[k] + sign * a[k]);
                }
            }
            Family::Annular { .. } => {
                let mut probe = [0.0; 3];
                let m = u.len();
                probe[..m].copy_from_slice(u);
                for k in 0..m {
                    let h = 1e-6 * (1.0 + u[k].abs());
                    probe[k] = u[k] + h;
                    let fp = self.value(a, &probe[..m]);
                    probe[k] = u[k] - h;
                    let fm = self.value(a, &probe[..m]);
                    probe[k] = u[k];
                    out[k] = (fp - fm) / (2.0 * h);
                }
            }
        }
    }

    /// Exponent `q` with `W(x, T(x, w)) = |a(x)|^q V(w)`, when the family has that form.
    pub fn well_scaling_exponent(&self) -> Option<f64> {
        match self {
            Family::Quartic => Some(4.0),
            Family::MinPower { q } => Some(*q),
            Family::Annular { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Quartic => "quartic",
            Family::MinPower { .. } => "min-power",
            Family::Annular { .. } => "annular",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_values() {
        let f = Family::Quartic;
        assert_eq!(f.value(&[1.0, 0.0], &[1.0, 0.0]), 0.0);
        assert_eq!(f.value(&[1.0, 0.0], &[0.0, 0.0]), 1.0);
        // scalar form (u² - a²)²
        let (a, u) = (1.3f64, 0.4f64);
        assert!((f.value(&[a], &[u]) - (u * u - a * a).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn min_power_values() {
        let f = Family::MinPower { q: 2.0 };
        assert_eq!(f.value(&[1.0, 0.0], &[0.0, 0.0]), 1.0);
        assert_eq!(f.value(&[1.0, 0.0], &[-1.0, 0.0]), 0.0);
        assert!((f.value(&[1.0, 0.0], &[0.5, 0.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_differences() {
        let a = [0.8, -0.4];
        let u = [0.3, 0.9];
        for fam in [Family::Quartic, Family::MinPower { q: 2.0 }, Family::MinPower { q: 1.5 }] {
            let mut g = [0.0; 2];
            fam.grad_into(&a, &u, &mut g);
            for k in 0..2 {
                let h = 1e-6;
                let mut up = u;
                let mut um = u;
                up[k] += h;
                um[k] -= h;
                let fd = (fam.value(&a, &up) - fam.value(&a, &um)) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-7 * (1.0 + g[k].abs()), "{fam:?} {k}");
            }
        }
    }
}
