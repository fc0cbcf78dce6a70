//! A-priori constants around geodesics: Lipschitz budgets, the radius bounding
//! ε-minimizers, default truncation levels and the fitted path-length constant.

use serde::Serialize;

use super::solver::{CapProvenance, TruncationCap};
use crate::error::{Error, Result};
use crate::potentials::{GrowthFunction, PhaseDensity};
use crate::vecmath::norm;

/// Sampled `sup 2√W` over the convex hull of up to three points.
pub fn sup_weight_on_hull<D: PhaseDensity + ?Sized>(density: &D, points: &[&[f64]], samples: usize) -> f64 {
    let m = density.phase_dim();
    let n = samples.max(1);
    let mut buf = vec![0.0; m];
    let mut best: f64 = 0.0;
    match points.len() {
        0 => {}
        1 => best = density.weight(points[0]),
        _ => {
            let (a, b) = (points[0], points[1]);
            let c = points.get(2).copied().unwrap_or(b);
            for i in 0..=n {
                for j in 0..=n - i {
                    let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
                    let u = 1.0 - s - t;
                    for k in 0..m {
                        buf[k] = u * a[k] + s * b[k] + t * c[k];
                    }
                    best = best.max(density.weight(&buf));
                }
            }
        }
    }
    best
}

/// Sampled `sup W` over the closed ball `B_radius(0)` on a cubic lattice.
pub fn sup_on_ball<D: PhaseDensity + ?Sized>(density: &D, radius: f64, per_axis: usize) -> f64 {
    let m = density.phase_dim();
    let n = per_axis.max(2);
    let total = n.pow(m as u32);
    let mut buf = vec![0.0; m];
    let mut best: f64 = 0.0;
    for idx in 0..total {
        let mut r = idx;
        for v in buf.iter_mut() {
            let k = r % n;
            r /= n;
            *v = -radius + 2.0 * radius * k as f64 / (n - 1) as f64;
        }
        if norm(&buf) <= radius * (1.0 + 1e-12) {
            best = best.max(density.value(&buf));
        }
    }
    best
}

/// Radius `K` bounding every ε-minimizer (ε < 1) between points of `B_r(0)`.
///
/// `sup_weight_ball` bounds `2√W` on `B_r(0)`, so that the diameter of the ball in
/// the degenerate metric is at most `2 r · sup_weight_ball`. Starting from
/// `max(r, R)` (the growth from below is only asserted outside `B_R`), the radius
/// is advanced in steps of `t₀/16` until
/// `Σ √f(t_{i-1}) Δt > 2 C_G (d_max + 1)`.
pub fn minimizer_radius(growth: &GrowthFunction, r: f64, sup_weight_ball: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Parameter("ball radius must be positive".into()));
    }
    let cg = growth.weight_constant();
    let dmax = 2.0 * r * sup_weight_ball;
    let target = 2.0 * cg * (dmax + 1.0);
    let t0 = r.max(growth.radius);
    let dt = t0 / 16.0;
    let mut t = t0;
    let mut acc = 0.0;
    for _ in 0..10_000_000 {
        acc += growth.weight_growth(t) * dt;
        t += dt;
        if acc > target {
            return Ok(t);
        }
    }
    Err(Error::Parameter("growth too weak to bound minimizers".into()))
}

/// Default truncation: four times the sampled supremum of `W` on `B_K(0)`.
pub fn derived_cap<D: PhaseDensity + ?Sized>(density: &D, radius: f64, per_axis: usize) -> Result<TruncationCap> {
    let sup = sup_on_ball(density, radius, per_axis);
    if !(sup > 0.0) {
        return Err(Error::Degenerate("potential vanishes on the whole ball".into()));
    }
    Ok(TruncationCap {
        level: 4.0 * sup,
        provenance: CapProvenance::DerivedFromBall { radius },
    })
}

/// `1 + f_G(|p|)|p| + f_G(|q|)|q|` with `f_G = √f` the weight-level growth.
pub fn path_length_scale(growth: &GrowthFunction, p: &[f64], q: &[f64]) -> f64 {
    let (np, nq) = (norm(p), norm(q));
    1.0 + growth.weight_growth(np) * np + growth.weight_growth(nq) * nq
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathLengthFit {
    /// Smallest `C` with `L ≤ C (1 + f(|p|)|p| + f(|q|)|q|)` over all samples.
    pub constant: f64,
    pub ratios: Vec<f64>,
}

/// Fits the path-length constant over `(p, q, length)` samples.
pub fn fit_path_length_constant(growth: &GrowthFunction, samples: &[(Vec<f64>, Vec<f64>, f64)]) -> PathLengthFit {
    let ratios: Vec<f64> = samples
        .iter()
        .map(|(p, q, l)| l / path_length_scale(growth, p, q))
        .collect();
    PathLengthFit {
        constant: ratios.iter().copied().fold(0.0, f64::max),
        ratios,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{FnDensity, GrowthKind};

    #[test]
    fn hull_sup_of_linear_weight_sits_on_a_vertex() {
        let d = FnDensity::new(2, |u: &[f64]| (u[0] + 2.0).powi(2) / 4.0);
        let s = sup_weight_on_hull(&d, &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]], 16);
        assert!((s - 3.0).abs() < 1e-12);
    }

    #[test]
    fn radius_grows_with_the_ball() {
        let g = GrowthFunction::new(GrowthKind::Quartic, 4.0, 2.0, 16.0, 3.0).unwrap();
        let k1 = minimizer_radius(&g, 1.0, 2.0).unwrap();
        let k2 = minimizer_radius(&g, 2.0, 8.0).unwrap();
        assert!(k1 > 3.0 && k2 > k1);
    }

    #[test]
    fn derived_cap_is_four_sups() {
        let d = FnDensity::new(2, |u: &[f64]| u[0] * u[0] + u[1] * u[1]);
        let c = derived_cap(&d, 2.0, 41).unwrap();
        assert!((c.level - 16.0).abs() < 1e-9);
    }

    #[test]
    fn fit_takes_the_largest_ratio() {
        let g = GrowthFunction::new(GrowthKind::Power { exponent: 2.0 }, 1.0, 2.0, 4.0, 3.0).unwrap();
        let fit = fit_path_length_constant(
            &g,
            &[(vec![0.0, 0.0], vec![0.0, 0.0], 0.5), (vec![1.0, 0.0], vec![0.0, 0.0], 4.0)],
        );
        assert_eq!(fit.ratios, vec![0.5, 2.0]);
        assert_eq!(fit.constant, 2.0);
    }
}
