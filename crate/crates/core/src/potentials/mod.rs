//! Spatial domains, moving well fields, double-well potential families, the
//! adjustment map and sampled audits of the structural hypotheses.

mod adjustment;
mod annular;
pub mod audit;
pub mod config;
mod domain;
mod family;
mod growth;
mod wells;

use serde::{Deserialize, Serialize};

pub use adjustment::Adjustment;
pub use annular::AnnularShape;
pub use domain::{Partition, SpatialDomain, SplitCurve};
pub use family::Family;
pub use growth::{GrowthFunction, GrowthKind};
pub use wells::{WellExpr, WellField};

use crate::error::{Error, Result};
use crate::vecmath::{all_finite, norm};

/// Non-decreasing modulus of continuity `ω` for the adjusted potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Modulus {
    Zero,
    Linear { slope: f64 },
}

impl Modulus {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Modulus::Zero => 0.0,
            Modulus::Linear { slope } => slope * t.max(0.0),
        }
    }
}

/// A frozen-in-space energy density `u ↦ W(u)` on phase space.
pub trait PhaseDensity: Sync {
    fn phase_dim(&self) -> usize;

    fn value(&self, u: &[f64]) -> f64;

    /// Conformal weight `2√W` of the degenerate metric.
    #[inline]
    fn weight(&self, u: &[f64]) -> f64 {
        2.0 * self.value(u).max(0.0).sqrt()
    }
}

impl<T: PhaseDensity + ?Sized> PhaseDensity for &T {
    fn phase_dim(&self) -> usize {
        (**self).phase_dim()
    }

    fn value(&self, u: &[f64]) -> f64 {
        (**self).value(u)
    }
}

/// The potential with its spatial argument frozen at `x` (one subdomain branch).
#[derive(Debug, Clone)]
pub struct FrozenPotential<'a> {
    family: &'a Family,
    growth: GrowthFunction,
    well: [f64; 3],
    m: usize,
    x: Vec<f64>,
    branch: usize,
}

impl FrozenPotential<'_> {
    pub fn well(&self) -> &[f64] {
        &self.well[..self.m]
    }

    pub fn neg_well(&self) -> Vec<f64> {
        self.well().iter().map(|v| -v).collect()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn branch(&self) -> usize {
        self.branch
    }

    pub fn family(&self) -> &Family {
        self.family
    }

    pub fn growth(&self) -> &GrowthFunction {
        &self.growth
    }

    /// `∇_u W`, see [`Family::grad_into`] for the selection at kinks.
    pub fn grad_into(&self, u: &[f64], out: &mut [f64]) {
        self.family.grad_into(self.well(), u, out);
    }
}

impl PhaseDensity for FrozenPotential<'_> {
    fn phase_dim(&self) -> usize {
        self.m
    }

    #[inline]
    fn value(&self, u: &[f64]) -> f64 {
        self.family.value(&self.well[..self.m], u)
    }
}

/// `min{W, cap}`.
#[derive(Debug, Clone)]
pub struct Capped<D> {
    pub inner: D,
    pub cap: f64,
}

impl<D: PhaseDensity> PhaseDensity for Capped<D> {
    fn phase_dim(&self) -> usize {
        self.inner.phase_dim()
    }

    #[inline]
    fn value(&self, u: &[f64]) -> f64 {
        self.inner.value(u).min(self.cap)
    }
}

/// Density given by a closure.
pub struct FnDensity<F> {
    m: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnDensity<F> {
    pub fn new(m: usize, f: F) -> Self {
        Self { m, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> PhaseDensity for FnDensity<F> {
    fn phase_dim(&self) -> usize {
        self.m
    }

    fn value(&self, u: &[f64]) -> f64 {
        (self.f)(u)
    }
}

/// Space-dependent double-well potential `W(x, u) = W_i(x, u)` on subdomain `Ω_i`.
///
/// Immutable once built; all evaluators are pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    domain: SpatialDomain,
    wells: WellField,
    branches: Vec<Family>,
    growth: GrowthFunction,
    modulus: Modulus,
    /// Midpoint subtracted from asymmetric well pairs before construction.
    phase_offset: Option<Vec<f64>>,
}

impl Potential {
    pub fn new(
        domain: SpatialDomain,
        wells: WellField,
        branches: Vec<Family>,
        growth: GrowthFunction,
        modulus: Option<Modulus>,
    ) -> Result<Self> {
        if branches.len() != domain.n_subdomains() {
            return Err(Error::Parameter(format!(
                "{} potential branches for {} subdomains",
                branches.len(),
                domain.n_subdomains()
            )));
        }
        let m = wells.phase_dim();
        for b in &branches {
            if matches!(b, Family::Annular { .. }) && m != 2 {
                return Err(Error::Parameter("annular family needs phase dimension 2".into()));
            }
            if let Family::MinPower { q } = b {
                if !(*q >= 1.0) {
                    return Err(Error::Parameter("min-power exponent must be at least 1".into()));
                }
            }
        }
        let modulus = match modulus {
            Some(m) => m,
            None => derive_modulus(&domain, &wells, &branches),
        };
        Ok(Self {
            domain,
            wells,
            branches,
            growth,
            modulus,
            phase_offset: None,
        })
    }

    /// Single-branch potential with constants derived from the family.
    pub fn single(domain: SpatialDomain, family: Family, well: WellExpr) -> Result<Self> {
        let n = domain.n_subdomains();
        let branches = vec![family; n];
        let wells = vec![well; n];
        Self::with_default_constants(domain, branches, wells, None)
    }

    /// Builds a potential deriving `δ`, `C₁`, `C₂`, `C₃` and `ω` from the branches.
    pub fn with_default_constants(
        domain: SpatialDomain,
        branches: Vec<Family>,
        wells: Vec<WellExpr>,
        delta: Option<f64>,
    ) -> Result<Self> {
        let delta = match delta {
            Some(d) => d,
            None => sampled_min_norm(&domain, &wells),
        };
        let wells = WellField::new(&domain, wells, delta)?;
        let growth = default_growth(&branches, &wells)?;
        Self::new(domain, wells, branches, growth, None)
    }

    pub fn with_phase_offset(mut self, offset: Vec<f64>) -> Self {
        self.phase_offset = Some(offset);
        self
    }

    pub fn domain(&self) -> &SpatialDomain {
        &self.domain
    }

    pub fn wells(&self) -> &WellField {
        &self.wells
    }

    pub fn branches(&self) -> &[Family] {
        &self.branches
    }

    pub fn growth(&self) -> &GrowthFunction {
        &self.growth
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn phase_offset(&self) -> Option<&[f64]> {
        self.phase_offset.as_deref()
    }

    pub fn phase_dim(&self) -> usize {
        self.wells.phase_dim()
    }

    pub fn space_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn delta(&self) -> f64 {
        self.wells.delta()
    }

    fn check_phase(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.phase_dim() || !all_finite(u) {
            return Err(Error::Domain(format!(
                "phase point {u:?} must be finite with {} components",
                self.phase_dim()
            )));
        }
        Ok(())
    }

    /// Well `a(x)`.
    pub fn well(&self, x: &[f64]) -> Result<Vec<f64>> {
        let i = self.domain.subdomain_of(x)?;
        Ok(self.wells.branch(i).eval(x))
    }

    /// `W(x, u)`.
    pub fn eval(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        self.check_phase(u)?;
        Ok(self.at(x)?.value(u))
    }

    /// `W(x, T_a(x) w)`; vanishes exactly at `w = ±e₁`.
    pub fn eval_adjusted(&self, x: &[f64], w: &[f64]) -> Result<f64> {
        self.check_phase(w)?;
        let frozen = self.at(x)?;
        let t = Adjustment::new(frozen.well())?;
        let u = t.apply(w);
        Ok(frozen.value(&u))
    }

    pub fn adjustment(&self, x: &[f64]) -> Result<Adjustment> {
        Adjustment::new(&self.well(x)?)
    }

    /// The potential frozen at `x`.
    pub fn at(&self, x: &[f64]) -> Result<FrozenPotential<'_>> {
        let i = self.domain.subdomain_of(x)?;
        Ok(self.at_branch(x, i))
    }

    /// Branch `i` frozen at `x`, regardless of which subdomain contains `x`.
    pub fn at_branch(&self, x: &[f64], i: usize) -> FrozenPotential<'_> {
        let m = self.phase_dim();
        let mut well = [0.0; 3];
        self.wells.eval_branch_into(i, x, &mut well[..m]);
        FrozenPotential {
            family: &self.branches[i],
            growth: self.growth,
            well,
            m,
            x: x.to_vec(),
            branch: i,
        }
    }
}

fn default_growth(branches: &[Family], wells: &WellField) -> Result<GrowthFunction> {
    let sup = wells.sup_norm();
    let delta = wells.delta();
    let c2 = (2.0 * sup).max(2.0);
    let radius = 2.0 * sup + 1.0;
    match &branches[0] {
        Family::Quartic => {
            let upper = (1.0f64).max(2.0 * sup).powi(2);
            let lower = 4.0 / delta.min(1.0).powi(2);
            GrowthFunction::new(GrowthKind::Quartic, upper.max(lower), c2, 16.0, radius)
        }
        Family::MinPower { q } => {
            GrowthFunction::new(GrowthKind::Power { exponent: *q }, 1.0, c2, 2f64.powf(*q), radius)
        }
        Family::Annular { .. } => {
            GrowthFunction::new(GrowthKind::Power { exponent: 1.0 }, 1.0, c2, 2.0, radius)
        }
    }
}

const MODULUS_SAMPLES_1D: usize = 4097;
const MODULUS_SAMPLES_2D: usize = 257;

/// `ω(t) = L t / δ^q` with `L` a (padded) sampled Lipschitz constant of `|a|^q`.
fn derive_modulus(domain: &SpatialDomain, wells: &WellField, branches: &[Family]) -> Modulus {
    if wells.is_constant() {
        return Modulus::Zero;
    }
    let q = branches
        .iter()
        .filter_map(Family::well_scaling_exponent)
        .fold(0.0, f64::max);
    if q == 0.0 {
        return Modulus::Zero;
    }
    let mut lip: f64 = 0.0;
    let scaled = |x: &[f64], i: usize| norm(&wells.branch(i).eval(x)).powf(q);
    let (lo, hi) = (domain.lower(), domain.upper());
    if domain.dim() == 1 {
        let n = MODULUS_SAMPLES_1D;
        let h = (hi[0] - lo[0]) / (n - 1) as f64;
        for i in 0..wells.branches().len() {
            for k in 0..n - 1 {
                let x0 = lo[0] + k as f64 * h;
                lip = lip.max((scaled(&[x0 + h], i) - scaled(&[x0], i)).abs() / h);
            }
        }
    } else {
        let n = MODULUS_SAMPLES_2D;
        let hx = (hi[0] - lo[0]) / (n - 1) as f64;
        let hy = (hi[1] - lo[1]) / (n - 1) as f64;
        for i in 0..wells.branches().len() {
            for a in 0..n - 1 {
                for b in 0..n - 1 {
                    let x = [lo[0] + a as f64 * hx, lo[1] + b as f64 * hy];
                    let f0 = scaled(&x, i);
                    let gx = (scaled(&[x[0] + hx, x[1]], i) - f0) / hx;
                    let gy = (scaled(&[x[0], x[1] + hy], i) - f0) / hy;
                    lip = lip.max(gx.hypot(gy));
                }
            }
        }
    }
    Modulus::Linear {
        slope: 1.05 * lip / wells.delta().powf(q),
    }
}

fn sampled_min_norm(domain: &SpatialDomain, wells: &[WellExpr]) -> f64 {
    let n = if domain.dim() == 1 { 1025 } else { 129 };
    let (lo, hi) = (domain.lower(), domain.upper());
    let mut min = f64::INFINITY;
    for w in wells {
        if domain.dim() == 1 {
            for k in 0..n {
                let x = lo[0] + (hi[0] - lo[0]) * k as f64 / (n - 1) as f64;
                min = min.min(norm(&w.eval(&[x])));
            }
        } else {
            for a in 0..n {
                for b in 0..n {
                    let x = [
                        lo[0] + (hi[0] - lo[0]) * a as f64 / (n - 1) as f64,
                        lo[1] + (hi[1] - lo[1]) * b as f64 / (n - 1) as f64,
                    ];
                    min = min.min(norm(&w.eval(&x)));
                }
            }
        }
    }
    min
}

/// Annular obstacle potential with `rings` nested rings and wells at the origin
/// and at `(0, 1)`, expressed in coordinates shifted by their midpoint `(0, 1/2)`.
///
/// The two wells are therefore `∓(0, 1/2)`; the potential does not depend on `x`.
pub fn make_annular_potential(rings: usize, m1: f64, levels: &[f64], gap: f64) -> Result<Potential> {
    let shape = AnnularShape::new(rings, m1, levels.to_vec(), gap)?;
    let domain = SpatialDomain::interval(0.0, 1.0)?;
    let family = Family::Annular {
        shape,
        shift: [0.0, 0.5],
    };
    let pot = Potential::with_default_constants(
        domain,
        vec![family],
        vec![WellExpr::constant(vec![0.0, 0.5])],
        Some(0.5),
    )?;
    Ok(pot.with_phase_offset(vec![0.0, 0.5]))
}
