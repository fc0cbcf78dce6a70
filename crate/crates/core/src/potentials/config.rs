//! TOML description of a potential.
//!
//! ```toml
//! family = { name = "quartic" }            # or { name = "min-power", q = 2.0 }
//! delta = 1.0                              # optional, sampled when absent
//!
//! [domain]
//! lower = [0.0]
//! upper = [1.0]
//! breakpoints = [0.5]                      # optional, 1-D partition
//!
//! [[wells]]                                # one entry, or one per subdomain
//! kind = "affine"
//! offset = [1.0]
//! slope = [[0.5]]
//! ```
//!
//! A constant asymmetric pair can be given as `asymmetric = { a = [...], b = [...] }`
//! instead of `wells`; it is shifted by its midpoint. The annular obstacle family
//! (`{ name = "annular", rings = 3, m1 = 1.0, levels = [...], gap = 0.15 }`) ignores
//! `domain` and `wells`.

use serde::{Deserialize, Serialize};

use super::{
    make_annular_potential, Family, GrowthFunction, GrowthKind, Modulus, Potential, SpatialDomain,
    SplitCurve, WellExpr, WellField,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum FamilySpec {
    Quartic,
    MinPower {
        q: f64,
    },
    Annular {
        rings: usize,
        m1: f64,
        levels: Vec<f64>,
        gap: f64,
    },
}

impl FamilySpec {
    fn to_family(&self) -> Result<Family> {
        match self {
            FamilySpec::Quartic => Ok(Family::Quartic),
            FamilySpec::MinPower { q } => Ok(Family::MinPower { q: *q }),
            FamilySpec::Annular { .. } => Err(Error::Config(
                "annular family cannot be combined with other branches".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub axis: usize,
    pub vertices: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    pub split: Option<SplitSpec>,
}

impl DomainSpec {
    pub fn build(&self) -> Result<SpatialDomain> {
        let mut d = SpatialDomain::new(self.lower.clone(), self.upper.clone())?;
        if !self.breakpoints.is_empty() {
            d = d.with_breakpoints(self.breakpoints.clone())?;
        }
        if let Some(s) = &self.split {
            d = d.with_split(SplitCurve::new(s.axis, s.vertices.clone())?)?;
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymmetricWells {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Overrides for the hypothesis constants; anything left out is derived.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSpec {
    pub growth: Option<GrowthKind>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub family: FamilySpec,
    /// Per-subdomain families; defaults to `family` everywhere.
    #[serde(default)]
    pub branch_families: Vec<FamilySpec>,
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub wells: Vec<WellExpr>,
    pub asymmetric: Option<AsymmetricWells>,
    pub delta: Option<f64>,
    #[serde(default)]
    pub constants: ConstantsSpec,
    pub modulus: Option<Modulus>,
}

impl PotentialSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<Potential> {
        if let FamilySpec::Annular {
            rings,
            m1,
            levels,
            gap,
        } = &self.family
        {
            return make_annular_potential(*rings, *m1, levels, *gap);
        }
        let domain = self
            .domain
            .as_ref()
            .ok_or_else(|| Error::Config("missing [domain]".into()))?
            .build()?;
        let k = domain.n_subdomains();

        let (wells, offset) = match (&self.asymmetric, self.wells.is_empty()) {
            (Some(pair), true) => {
                if pair.a.len() != pair.b.len() {
                    return Err(Error::Config("asymmetric wells differ in dimension".into()));
                }
                let half: Vec<f64> = pair.a.iter().zip(&pair.b).map(|(a, b)| 0.5 * (a - b)).collect();
                let mid: Vec<f64> = pair.a.iter().zip(&pair.b).map(|(a, b)| 0.5 * (a + b)).collect();
                (vec![WellExpr::constant(half); k], Some(mid))
            }
            (None, false) => {
                let w = if self.wells.len() == 1 {
                    vec![self.wells[0].clone(); k]
                } else {
                    self.wells.clone()
                };
                (w, None)
            }
            _ => {
                return Err(Error::Config(
                    "give exactly one of `wells` or `asymmetric`".into(),
                ))
            }
        };

        let branches: Vec<Family> = if self.branch_families.is_empty() {
            vec![self.family.to_family()?; k]
        } else {
            self.branch_families
                .iter()
                .map(FamilySpec::to_family)
                .collect::<Result<_>>()?
        };

        let mut pot = Potential::with_default_constants(domain.clone(), branches.clone(), wells, self.delta)?;
        let c = &self.constants;
        if c.growth.is_some() || c.c1.is_some() || c.c2.is_some() || c.c3.is_some() || c.radius.is_some()
            || self.modulus.is_some()
        {
            let g = pot.growth();
            let growth = GrowthFunction::new(
                c.growth.unwrap_or(g.kind),
                c.c1.unwrap_or(g.c1),
                c.c2.unwrap_or(g.c2),
                c.c3.unwrap_or(g.c3),
                c.radius.unwrap_or(g.radius),
            )?;
            let wells = WellField::new(&domain, pot.wells().branches().to_vec(), pot.delta())?;
            pot = Potential::new(domain, wells, branches, growth, self.modulus.or(Some(*pot.modulus())))?;
        }
        if let Some(off) = offset {
            pot = pot.with_phase_offset(off);
        }
        Ok(pot)
    }
}

/// Parses and builds a potential from TOML text.
pub fn potential_from_toml(text: &str) -> Result<Potential> {
    PotentialSpec::from_toml(text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_moving_quartic() {
        let text = r#"
family = { name = "quartic" }
[domain]
lower = [0.0]
upper = [1.0]
[[wells]]
kind = "quadratic"
offset = [1.0]
center = [0.5]
coeff = [0.5]
"#;
        let p = potential_from_toml(text).unwrap();
        assert_eq!(p.phase_dim(), 1);
        assert!((p.well(&[1.0]).unwrap()[0] - 1.125).abs() < 1e-14);
        assert!((p.delta() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_pair_is_shifted() {
        let text = r#"
family = { name = "min-power", q = 2.0 }
asymmetric = { a = [3.0, 1.0], b = [1.0, 1.0] }
[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]
"#;
        let p = potential_from_toml(text).unwrap();
        assert_eq!(p.well(&[0.2, 0.2]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(p.phase_offset().unwrap(), &[2.0, 1.0]);
    }

    #[test]
    fn overrides_constants() {
        let text = r#"
family = { name = "quartic" }
[domain]
lower = [0.0]
upper = [1.0]
breakpoints = [0.5]
[[wells]]
kind = "constant"
value = [1.0]
[[wells]]
kind = "constant"
value = [2.0]
[constants]
c1 = 100.0
"#;
        let p = potential_from_toml(text).unwrap();
        assert_eq!(p.growth().c1, 100.0);
        assert_eq!(p.well(&[0.75]).unwrap(), vec![2.0]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(
            potential_from_toml("family = 3"),
            Err(Error::Config(_))
        ));
        let missing = "family = { name = \"quartic\" }";
        assert!(potential_from_toml(missing).is_err());
    }
}
