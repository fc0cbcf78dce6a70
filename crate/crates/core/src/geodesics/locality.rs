use rand::Rng;
use serde::Serialize;

use super::polyline::curve_energy_paneled;
use super::solver::{geodesic_distance, GeodesicQuery, GeodesicResult};
use crate::error::Result;
use crate::potentials::PhaseDensity;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalityReport {
    pub checked: usize,
    pub violations: usize,
    /// Largest `segment energy - (sub-distance + ε + tol)`; non-positive when all pass.
    pub max_violation: f64,
    /// Parameter interval achieving `max_violation`.
    pub worst_interval: (f64, f64),
}

impl LocalityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Checks that every sampled piece `γ|[t₁, t₂]` of an ε-minimizer costs at most
/// `d(γ(t₁), γ(t₂)) + ε + tol`, with `ε` the larger of the gap of `result` and the
/// certification level of `template`.
///
/// Sub-distances are solved with `template`'s settings.
pub fn verify_locality<D: PhaseDensity + ?Sized, R: Rng>(
    density: &D,
    result: &GeodesicResult,
    template: &GeodesicQuery,
    intervals: usize,
    tol: f64,
    rng: &mut R,
) -> Result<LocalityReport> {
    let eps = result.gap.max(template.eps_cert);
    let mut report = LocalityReport {
        checked: 0,
        violations: 0,
        max_violation: f64::NEG_INFINITY,
        worst_interval: (-1.0, 1.0),
    };
    let mut pairs = vec![(-1.0, 1.0)];
    while pairs.len() < intervals {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        if a != b {
            pairs.push((a.min(b), a.max(b)));
        }
    }
    pairs.truncate(intervals.max(1));
    for (t1, t2) in pairs {
        let piece = result.curve.sub_curve(t1, t2);
        let cost = curve_energy_paneled(density, &piece, template.quadrature, template.panel_length());
        let q = template.with_endpoints(piece.first(), piece.last());
        let d = geodesic_distance(density, &q)?.value;
        let excess = cost - (d + eps + tol);
        report.checked += 1;
        if excess > 0.0 {
            report.violations += 1;
        }
        if excess > report.max_violation {
            report.max_violation = excess;
            report.worst_interval = (t1, t2);
        }
    }
    Ok(report)
}
