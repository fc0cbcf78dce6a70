use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Field, SpaceGrid};
use crate::error::{Error, Result};
use crate::geodesics::{geodesic_distance, GeodesicQuery, GeodesicResult};
use crate::potentials::{Adjustment, Potential};
use crate::profiles::{reparameterize, Profile, ProfileConfig};
use crate::vecmath::{dist, norm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    /// Exponent of the lattice scale `r = ε^α`.
    pub alpha: f64,
    /// Exponent of the mollification scale `η = ε^β`.
    pub beta: f64,
    /// Bound `L̄` on the Euclidean length of the transition curves.
    pub path_length_bound: f64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            beta: 0.5,
            path_length_bound: 4.0,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.alpha && self.alpha < self.beta && self.beta < 1.0) {
            return Err(Error::Parameter("recovery exponents need 0 < alpha < beta < 1".into()));
        }
        if !(self.path_length_bound > 0.0) {
            return Err(Error::Parameter("path-length bound must be positive".into()));
        }
        Ok(())
    }

    pub fn lattice_scale(&self, eps: f64) -> f64 {
        eps.powf(self.alpha)
    }

    pub fn mollifier_scale(&self, eps: f64) -> f64 {
        eps.powf(self.beta)
    }

    /// Tube half-width `max(L̄ ε, τ/2)`: wide enough to hold the whole profile.
    pub fn half_width(&self, eps: f64, tau: f64) -> f64 {
        (self.path_length_bound * eps).max(0.5 * tau)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovery {
    pub field: Field,
    pub profile: Profile,
    pub geodesic: GeodesicResult,
    /// Half-width `ℓ` of the transition tube.
    pub half_width: f64,
}

/// Geodesic and profile at the frozen point `x0`, and the transition map
/// `d ↦ T_a(x) T_a⁻¹(x0) γ(g(d + τ/2))` used inside the tube.
fn frozen_profile(pot: &Potential, x0: &[f64], eps: f64, query: &GeodesicQuery) -> Result<(GeodesicResult, Profile, Adjustment)> {
    if !(eps > 0.0) {
        return Err(Error::Parameter("eps must be positive".into()));
    }
    let frozen = pot.at(x0)?;
    let a0 = frozen.well().to_vec();
    let neg: Vec<f64> = a0.iter().map(|v| -v).collect();
    let mut q = query.with_endpoints(&neg, &a0);
    if q.box_center.is_empty() {
        q.box_radius = q.box_radius.max(1.25 * norm(&a0));
    }
    let geo = geodesic_distance(&frozen, &q)?;
    let profile = reparameterize(&frozen, &geo.curve, &ProfileConfig::new(eps * eps, eps))?;
    let t0 = Adjustment::new(&a0)?;
    Ok((geo, profile, t0))
}

fn transition_value(
    pot: &Potential,
    x: &[f64],
    signed: f64,
    half_width: f64,
    profile: &Profile,
    t0: &Adjustment,
    out: &mut [f64],
) -> Result<()> {
    let a = pot.well(x)?;
    if signed > half_width {
        out.copy_from_slice(&a);
    } else if signed < -half_width {
        out.iter_mut().zip(&a).for_each(|(o, v)| *o = -v);
    } else {
        let g = profile.point(signed + 0.5 * profile.tau);
        let w = t0.inverse(&g);
        Adjustment::new(&a)?.apply_into(&w, out);
    }
    Ok(())
}

/// Recovery field for a single interface at `x0` on a 1-D grid: `-a` to the left of
/// the tube, `+a` to the right, the adjusted optimal profile inside. The trace is
/// fixed to the wells at both ends.
pub fn build_recovery_1d(
    pot: &Potential,
    grid: &SpaceGrid,
    x0: f64,
    eps: f64,
    rec: &RecoveryConfig,
    query: &GeodesicQuery,
) -> Result<Recovery> {
    rec.validate()?;
    if grid.dim() != 1 || pot.space_dim() != 1 {
        return Err(Error::Parameter("1-D recovery needs a 1-D grid and domain".into()));
    }
    let (geodesic, profile, t0) = frozen_profile(pot, &[x0], eps, query)?;
    let half_width = rec.half_width(eps, profile.tau);
    let (lo, hi) = (grid.lower()[0], grid.upper()[0]);
    if !(x0 - half_width > lo && x0 + half_width < hi) {
        return Err(Error::Parameter(format!(
            "transition tube [{}, {}] leaves the domain",
            x0 - half_width,
            x0 + half_width
        )));
    }
    let m = pot.phase_dim();
    let mut values = vec![0.0; m * grid.len()];
    for i in 0..grid.len() {
        let x = grid.coord(0, i);
        transition_value(pot, &[x], x - x0, half_width, &profile, &t0, &mut values[i * m..(i + 1) * m])?;
    }
    let field = Field::new(grid.clone(), m, values, super::Boundary::Free)?.with_fixed_trace();
    Ok(Recovery {
        field,
        profile,
        geodesic,
        half_width,
    })
}

/// Recovery field for the flat interface `{x_axis = x0}` of a rectangle. The
/// profile is computed once, at the midpoint of the interface.
pub fn build_recovery_flat(
    pot: &Potential,
    grid: &SpaceGrid,
    axis: usize,
    x0: f64,
    eps: f64,
    rec: &RecoveryConfig,
    query: &GeodesicQuery,
) -> Result<Recovery> {
    rec.validate()?;
    if grid.dim() != 2 || pot.space_dim() != 2 || axis > 1 {
        return Err(Error::Parameter("flat recovery needs a 2-D grid and domain".into()));
    }
    let other = 1 - axis;
    let mut centre = [0.0; 2];
    centre[axis] = x0;
    centre[other] = 0.5 * (grid.lower()[other] + grid.upper()[other]);
    let (geodesic, profile, t0) = frozen_profile(pot, &centre, eps, query)?;
    let half_width = rec.half_width(eps, profile.tau);
    if !(x0 - half_width > grid.lower()[axis] && x0 + half_width < grid.upper()[axis]) {
        return Err(Error::Parameter("transition tube leaves the domain".into()));
    }
    let m = pot.phase_dim();
    let mut values = vec![0.0; m * grid.len()];
    let mut x = [0.0; 2];
    for i in 0..grid.len() {
        grid.node_into(i, &mut x);
        transition_value(pot, &x, x[axis] - x0, half_width, &profile, &t0, &mut values[i * m..(i + 1) * m])?;
    }
    let field = Field::new(grid.clone(), m, values, super::Boundary::Free)?.with_fixed_trace();
    Ok(Recovery {
        field,
        profile,
        geodesic,
        half_width,
    })
}

/// `c = -(N+1) / (ω_N r^N)`, normalizing the hat `1 - |x - x0|/r` to unit integral
/// (with a minus sign) in `N` space dimensions.
pub fn bump_constant(n: usize, r: f64) -> f64 {
    let omega = match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI.powf(n as f64 / 2.0) / gamma_half_int(n + 2),
    };
    -((n + 1) as f64) / (omega * r.powi(n as i32))
}

/// `Γ(k/2)` for integer `k ≥ 1`.
fn gamma_half_int(k: usize) -> f64 {
    let mut g = if k % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut j = if k % 2 == 0 { 2 } else { 1 };
    while j < k {
        g *= j as f64 / 2.0;
        j += 2;
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpResult {
    pub field: Field,
    /// Continuum normalization `-(N+1)/(ω_N r^N)`.
    pub constant: f64,
    /// Normalization actually used: `-1 / Σ w_i hat(x_i)`, exact for the trapezoid mass.
    pub discrete_constant: f64,
    /// Mass deficit `∫ u - m |Ω|` before the correction.
    pub deficit: Vec<f64>,
}

/// Adds `c (m_u - m) (1 - |x - x0|/r)` on the ball `B(x0, r)`, where `u` must sit in
/// the well `a(x)`, so that the mean of the result equals `target`.
pub fn mass_correction_bump(u: &Field, pot: &Potential, target: &[f64], center: &[f64], radius: f64) -> Result<BumpResult> {
    let m = u.phase_dim();
    let dim = u.grid.dim();
    if target.len() != m || center.len() != dim {
        return Err(Error::Parameter("bump target or centre has the wrong dimension".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::Parameter("bump radius must be positive".into()));
    }
    for k in 0..dim {
        if center[k] - radius < u.grid.lower()[k] || center[k] + radius > u.grid.upper()[k] {
            return Err(Error::Parameter("bump ball leaves the domain".into()));
        }
    }
    let w = u.grid.weights();
    let mut x = vec![0.0; dim];
    let mut hat = vec![0.0; u.grid.len()];
    let mut mass_of_hat = 0.0;
    for i in 0..u.grid.len() {
        u.grid.node_into(i, &mut x);
        let r = dist(&x, center);
        if r < radius {
            let a = pot.well(&x)?;
            let scale = 1.0 + norm(&a);
            if dist(u.value(i), &a) > 1e-9 * scale {
                return Err(Error::Parameter("bump ball meets the transition region".into()));
            }
            hat[i] = 1.0 - r / radius;
            mass_of_hat += w[i] * hat[i];
        }
    }
    if !(mass_of_hat > 0.0) {
        return Err(Error::Parameter("bump ball contains no grid node".into()));
    }
    let vol = u.grid.volume();
    let mean = u.mean();
    // deficits at rounding level count as zero
    let deficit: Vec<f64> = (0..m)
        .map(|k| {
            let d = mean[k] - target[k];
            if d.abs() <= 8.0 * f64::EPSILON * (1.0 + target[k].abs()) {
                0.0
            } else {
                d * vol
            }
        })
        .collect();
    let c = -1.0 / mass_of_hat;
    let mut field = u.clone();
    {
        let vals = field.values_mut();
        for (i, h) in hat.iter().enumerate() {
            if *h > 0.0 {
                for k in 0..m {
                    vals[i * m + k] += c * deficit[k] * h;
                }
            }
        }
    }
    Ok(BumpResult {
        field,
        constant: bump_constant(dim, radius),
        discrete_constant: c,
        deficit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasefield::{energy_eps, locate_interface, Discretization};
    use crate::potentials::{Family, SpatialDomain, WellExpr};

    fn moving() -> Potential {
        let d = SpatialDomain::interval(0.0, 1.0).unwrap();
        let a = WellExpr::Quadratic { offset: vec![1.0], center: vec![0.5], coeff: vec![0.5] };
        Potential::single(d, Family::Quartic, a).unwrap()
    }

    fn constant() -> Potential {
        let d = SpatialDomain::interval(0.0, 1.0).unwrap();
        Potential::single(d, Family::Quartic, WellExpr::constant(vec![1.0])).unwrap()
    }

    #[test]
    fn bump_constants() {
        assert!((bump_constant(1, 0.1) + 10.0).abs() < 1e-12);
        assert!((bump_constant(2, 0.1) + 300.0 / PI).abs() < 1e-9);
        assert!((bump_constant(3, 1.0) + 3.0 / PI).abs() < 1e-12);
        assert!((gamma_half_int(5) - 0.75 * PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn constant_wells_recovery_is_near_optimal() {
        let eps = 0.005;
        let grid = SpaceGrid::line(0.0, 1.0, 8192).unwrap();
        let r = build_recovery_1d(&constant(), &grid, 0.5, eps, &RecoveryConfig::default(), &GeodesicQuery::default()).unwrap();
        let e = energy_eps(&r.field, &constant(), eps).unwrap();
        assert!(e <= 8.0 / 3.0 + 0.05, "{e}");
        assert!(e >= 8.0 / 3.0 - 0.05, "{e}");
        assert_eq!(r.field.value(0), &[-1.0]);
        assert_eq!(r.field.value(8191), &[1.0]);
    }

    #[test]
    fn moving_wells_recovery_converges() {
        let pot = moving();
        let mut gaps = Vec::new();
        for eps in [0.04, 0.02, 0.01, 0.005] {
            let grid = SpaceGrid::line(0.0, 1.0, 8192).unwrap();
            let r = build_recovery_1d(&pot, &grid, 0.5, eps, &RecoveryConfig::default(), &GeodesicQuery::default()).unwrap();
            let e = energy_eps(&r.field, &pot, eps).unwrap();
            gaps.push((e - 8.0 / 3.0).abs());
            let x = locate_interface(&r.field, &pot).unwrap();
            assert_eq!(x.len(), 1);
            assert!((x[0] - 0.5).abs() < 1e-3);
        }
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }

    #[test]
    fn tube_edges_are_continuous_with_the_wells() {
        let pot = moving();
        let eps = 0.02;
        let grid = SpaceGrid::line(0.0, 1.0, 2001).unwrap();
        let r = build_recovery_1d(&pot, &grid, 0.4, eps, &RecoveryConfig::default(), &GeodesicQuery::default()).unwrap();
        // the jump across each tube edge is at most one node's worth of variation
        let h = grid.spacing()[0];
        let mut worst: f64 = 0.0;
        for i in 0..grid.len() - 1 {
            let (x, y) = (grid.coord(0, i), grid.coord(0, i + 1));
            let edge = |t: f64| (t - 0.4).abs() > r.half_width;
            if edge(x) != edge(y) {
                worst = worst.max((r.field.value(i + 1)[0] - r.field.value(i)[0]).abs());
            }
        }
        assert!(worst < 10.0 * h, "{worst}");
    }

    #[test]
    fn tube_outside_domain_is_rejected() {
        let grid = SpaceGrid::line(0.0, 1.0, 512).unwrap();
        let r = build_recovery_1d(&constant(), &grid, 0.01, 0.02, &RecoveryConfig::default(), &GeodesicQuery::default());
        assert!(matches!(r, Err(Error::Parameter(_))));
    }

    #[test]
    fn flat_recovery_costs_width_times_tension() {
        let d = SpatialDomain::rect([0.0, 0.0], [1.0, 0.5]).unwrap();
        let pot = Potential::single(d, Family::Quartic, WellExpr::constant(vec![1.0, 0.0])).unwrap();
        let grid = SpaceGrid::rect([0.0, 0.0], [1.0, 0.5], [801, 5]).unwrap();
        let mut q = GeodesicQuery::default();
        q.grid_nodes = 61;
        let eps = 0.02;
        let r = build_recovery_flat(&pot, &grid, 0, 0.5, eps, &RecoveryConfig::default(), &q).unwrap();
        let e = energy_eps(&r.field, &pot, eps).unwrap();
        assert!((e - 0.5 * 8.0 / 3.0).abs() < 0.05, "{e}");
    }

    #[test]
    fn bump_restores_mass_exactly() {
        let pot = moving();
        let eps = 0.02;
        let grid = SpaceGrid::line(0.0, 1.0, 4001).unwrap();
        let r = build_recovery_1d(&pot, &grid, 0.4, eps, &RecoveryConfig::default(), &GeodesicQuery::default()).unwrap();
        let target = [0.05];
        let b = mass_correction_bump(&r.field, &pot, &target, &[0.8], 0.1).unwrap();
        assert!((b.field.mean()[0] - 0.05).abs() < 1e-10);
        assert!((b.discrete_constant / b.constant - 1.0).abs() < 1e-3);
        // unchanged outside the ball
        let d = Discretization::new(&pot, &grid).unwrap();
        assert_eq!(d.grid().len(), 4001);
        assert_eq!(b.field.value(100), r.field.value(100));
    }

    #[test]
    fn bump_with_zero_deficit_changes_nothing() {
        let pot = constant();
        let grid = SpaceGrid::line(0.0, 1.0, 101).unwrap();
        let u = Field::constant(grid, &[1.0]).unwrap();
        let b = mass_correction_bump(&u, &pot, &[1.0], &[0.5], 0.2).unwrap();
        assert_eq!(b.field, u);
    }

    #[test]
    fn bump_on_the_transition_is_rejected() {
        let grid = SpaceGrid::line(0.0, 1.0, 1001).unwrap();
        let r = build_recovery_1d(&constant(), &grid, 0.5, 0.02, &RecoveryConfig::default(), &GeodesicQuery::default()).unwrap();
        assert!(mass_correction_bump(&r.field, &constant(), &[0.0], &[0.55], 0.1).is_err());
        assert!(mass_correction_bump(&r.field, &constant(), &[0.0], &[0.95], 0.1).is_err());
    }
}
