use serde::Serialize;

use super::{Field, SpaceGrid};
use crate::error::{Error, Result};
use crate::potentials::{Adjustment, Family, Potential};

/// A potential sampled once at the nodes of a grid, together with the quadrature
/// weights and difference stencil used by the energy.
#[derive(Debug, Clone)]
pub struct Discretization<'a> {
    pot: &'a Potential,
    grid: SpaceGrid,
    m: usize,
    branch: Vec<usize>,
    wells: Vec<f64>,
    weights: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParts {
    /// `(1/ε) ∫ W(x, u)`.
    pub potential: f64,
    /// `ε ∫ |∇u|²`.
    pub gradient: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.potential + self.gradient
    }
}

impl<'a> Discretization<'a> {
    pub fn new(pot: &'a Potential, grid: &SpaceGrid) -> Result<Self> {
        if grid.dim() != pot.space_dim() {
            return Err(Error::Domain(format!(
                "{}-D grid on a {}-D domain",
                grid.dim(),
                pot.space_dim()
            )));
        }
        let m = pot.phase_dim();
        let mut branch = Vec::with_capacity(grid.len());
        let mut wells = Vec::with_capacity(m * grid.len());
        let mut x = vec![0.0; grid.dim()];
        for idx in 0..grid.len() {
            grid.node_into(idx, &mut x);
            let frozen = pot.at(&x)?;
            branch.push(frozen.branch());
            wells.extend_from_slice(frozen.well());
        }
        Ok(Self {
            pot,
            grid: grid.clone(),
            m,
            branch,
            wells,
            weights: grid.weights(),
            edges: grid.edges(),
        })
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `a(x_i)`.
    pub fn well(&self, i: usize) -> &[f64] {
        &self.wells[i * self.m..(i + 1) * self.m]
    }

    fn family(&self, i: usize) -> &Family {
        &self.pot.branches()[self.branch[i]]
    }

    /// `W(x_i, u)`.
    pub fn density(&self, i: usize, u: &[f64]) -> f64 {
        self.family(i).value(self.well(i), u)
    }

    fn check(&self, u: &Field) -> Result<()> {
        if u.grid != self.grid || u.phase_dim() != self.m {
            return Err(Error::Domain("field grid does not match the discretization".into()));
        }
        Ok(())
    }

    pub fn energy_parts(&self, u: &[f64], eps: f64) -> EnergyParts {
        let m = self.m;
        let mut pot = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            pot += w * self.density(i, &u[i * m..(i + 1) * m]);
        }
        let mut grad = 0.0;
        for &(i, j, c) in &self.edges {
            let d2: f64 = (0..m).map(|k| (u[j * m + k] - u[i * m + k]).powi(2)).sum();
            grad += c * d2;
        }
        EnergyParts {
            potential: pot / eps,
            gradient: eps * grad,
        }
    }

    pub fn energy(&self, u: &[f64], eps: f64) -> f64 {
        self.energy_parts(u, eps).total()
    }

    /// Discrete L² gradient `(∂E/∂u_i) / w_i`, zero where `free` is false.
    pub fn gradient_into(&self, u: &[f64], eps: f64, free: &[bool], out: &mut [f64]) {
        let m = self.m;
        let mut g = [0.0; 3];
        for (i, w) in self.weights.iter().enumerate() {
            self.family(i).grad_into(self.well(i), &u[i * m..(i + 1) * m], &mut g[..m]);
            for k in 0..m {
                out[i * m + k] = w * g[k] / eps;
            }
        }
        for &(i, j, c) in &self.edges {
            for k in 0..m {
                let d = 2.0 * eps * c * (u[i * m + k] - u[j * m + k]);
                out[i * m + k] += d;
                out[j * m + k] -= d;
            }
        }
        for (i, w) in self.weights.iter().enumerate() {
            for k in 0..m {
                out[i * m + k] = if free[i] { out[i * m + k] / w } else { 0.0 };
            }
        }
    }

    pub fn field_energy(&self, u: &Field, eps: f64) -> Result<f64> {
        self.check(u)?;
        Ok(self.energy(u.values(), eps))
    }

    pub fn field_gradient(&self, u: &Field, eps: f64) -> Result<Field> {
        self.check(u)?;
        let mut out = u.clone();
        let mask = u.free_mask();
        let mut g = vec![0.0; u.values().len()];
        self.gradient_into(u.values(), eps, &mask, &mut g);
        out.values_mut().copy_from_slice(&g);
        Ok(out.into_free())
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::Parameter("eps must be positive".into()));
    }
    Ok(())
}

/// `F_ε(u) = ∫ (1/ε) W(x, u) + ε |∇u|²` by the trapezoid rule with forward differences.
pub fn energy_eps(u: &Field, pot: &Potential, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Discretization::new(pot, &u.grid)?.field_energy(u, eps)
}

/// L² gradient of [`energy_eps`]; vanishes at fixed-trace nodes.
pub fn gradient_eps(u: &Field, pot: &Potential, eps: f64) -> Result<Field> {
    check_eps(eps)?;
    Discretization::new(pot, &u.grid)?.field_gradient(u, eps)
}

/// Positions where the adjusted first component `(T_a⁻¹(x) u(x))₁` changes sign
/// along a 1-D field, by linear interpolation between nodes.
pub fn locate_interface(u: &Field, pot: &Potential) -> Result<Vec<f64>> {
    if u.grid.dim() != 1 {
        return Err(Error::Usage("interfaces are located on 1-D fields".into()));
    }
    let n = u.grid.len();
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        let x = u.grid.node(i);
        let t = Adjustment::new(&pot.well(&x)?)?;
        s.push(t.inverse(u.value(i))[0]);
    }
    let mut out = Vec::new();
    for i in 0..n - 1 {
        let (a, b) = (s[i], s[i + 1]);
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            if b == 0.0 && i + 2 < n && s[i + 2] == 0.0 {
                continue;
            }
            let (xa, xb) = (u.grid.coord(0, i), u.grid.coord(0, i + 1));
            out.push(xa + (xb - xa) * a / (a - b));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{Family, SpatialDomain, WellExpr};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quartic_1d(lo: f64, hi: f64) -> Potential {
        let d = SpatialDomain::interval(lo, hi).unwrap();
        Potential::single(d, Family::Quartic, WellExpr::constant(vec![1.0])).unwrap()
    }

    #[test]
    fn wells_cost_nothing() {
        let pot = quartic_1d(0.0, 1.0);
        let g = SpaceGrid::line(0.0, 1.0, 33).unwrap();
        let u = Field::constant(g, &[1.0]).unwrap();
        assert_eq!(energy_eps(&u, &pot, 0.1).unwrap(), 0.0);
        let grad = gradient_eps(&u, &pot, 0.1).unwrap();
        assert!(grad.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_field_costs_volume_over_eps() {
        let pot = quartic_1d(0.0, 1.0);
        let g = SpaceGrid::line(0.0, 1.0, 33).unwrap();
        let u = Field::constant(g, &[0.0]).unwrap();
        assert!((energy_eps(&u, &pot, 0.1).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn tanh_profile_has_surface_tension() {
        let eps = 0.01;
        let pot = quartic_1d(-20.0 * eps, 20.0 * eps);
        let g = SpaceGrid::line(-20.0 * eps, 20.0 * eps, 8192).unwrap();
        let u = Field::from_fn(g, 1, |x| vec![(x[0] / eps).tanh()]).unwrap();
        let e = energy_eps(&u, &pot, eps).unwrap();
        assert!((e - 8.0 / 3.0).abs() < 1e-3, "{e}");
    }

    #[test]
    fn grid_outside_domain_is_rejected() {
        let pot = quartic_1d(0.0, 1.0);
        let u = Field::constant(SpaceGrid::line(0.0, 2.0, 9).unwrap(), &[0.0]).unwrap();
        assert!(matches!(energy_eps(&u, &pot, 0.1), Err(Error::Domain(_))));
        let u = Field::constant(SpaceGrid::rect([0.0, 0.0], [1.0, 1.0], [3, 3]).unwrap(), &[0.0]).unwrap();
        assert!(matches!(energy_eps(&u, &pot, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn gradient_vanishes_on_fixed_nodes() {
        let pot = quartic_1d(0.0, 1.0);
        let g = SpaceGrid::line(0.0, 1.0, 17).unwrap();
        let u = Field::from_fn(g, 1, |x| vec![0.3 * x[0]]).unwrap().with_fixed_trace();
        let grad = gradient_eps(&u, &pot, 0.1).unwrap();
        assert_eq!(grad.value(0), &[0.0]);
        assert_eq!(grad.value(16), &[0.0]);
        assert!(grad.value(8)[0] != 0.0);
    }

    fn directional_check(pot: &Potential, grid: SpaceGrid, m: usize, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = 0.05;
        let u = Field::from_fn(grid.clone(), m, |_| (0..m).map(|_| rng.gen_range(-1.5..1.5)).collect()).unwrap();
        let v: Vec<f64> = (0..u.values().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let disc = Discretization::new(pot, &grid).unwrap();
        let g = disc.field_gradient(&u, eps).unwrap();
        let analytic = u.inner(g.values(), &v);
        let t = 1e-6;
        let shift = |s: f64| -> Vec<f64> { u.values().iter().zip(&v).map(|(a, b)| a + s * b).collect() };
        let fd = (disc.energy(&shift(t), eps) - disc.energy(&shift(-t), eps)) / (2.0 * t);
        assert!(((fd - analytic) / analytic).abs() < 1e-5, "{fd} vs {analytic}");
    }

    #[test]
    fn gradient_matches_central_differences() {
        let d1 = SpatialDomain::interval(0.0, 1.0).unwrap();
        let moving = WellExpr::Quadratic { offset: vec![1.0], center: vec![0.5], coeff: vec![0.5] };
        let p1 = Potential::single(d1, Family::Quartic, moving).unwrap();
        directional_check(&p1, SpaceGrid::line(0.0, 1.0, 41).unwrap(), 1, 1);
        let d2 = SpatialDomain::rect([0.0, 0.0], [1.0, 1.0]).unwrap();
        for (k, fam) in [Family::Quartic, Family::MinPower { q: 2.0 }, Family::MinPower { q: 1.5 }]
            .into_iter()
            .enumerate()
        {
            let p = Potential::single(d2.clone(), fam, WellExpr::constant(vec![1.0, 0.0])).unwrap();
            directional_check(&p, SpaceGrid::rect([0.0, 0.0], [1.0, 1.0], [9, 7]).unwrap(), 2, 10 + k as u64);
        }
    }

    #[test]
    fn interface_of_odd_profile_is_at_the_centre() {
        let pot = quartic_1d(0.0, 1.0);
        let g = SpaceGrid::line(0.0, 1.0, 100).unwrap();
        let u = Field::from_fn(g, 1, |x| vec![((x[0] - 0.37) / 0.02).tanh()]).unwrap();
        let x = locate_interface(&u, &pot).unwrap();
        assert_eq!(x.len(), 1);
        assert!((x[0] - 0.37).abs() < 1e-3);
    }
}
