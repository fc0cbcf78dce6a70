//! Sampled audits of the structural hypotheses on a [`Potential`].
//!
//! Every check walks a finite sample set and records the worst margin seen.
//! A negative margin below the tolerance is a failure; the sample achieving the
//! worst margin is kept as a witness.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Adjustment, Potential, PhaseDensity};
use crate::vecmath::norm;

/// Sample densities and tolerances for [`audit_hypotheses`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditSpec {
    /// Samples per spatial axis.
    pub x_samples: usize,
    /// Samples per phase axis.
    pub u_samples: usize,
    /// Half-width of the phase sampling box; derived from the constants when absent.
    pub u_radius: Option<f64>,
    /// Samples of `t` for the scalar checks on `f`.
    pub t_samples: usize,
    /// Upper end of the `t` range; defaults to twice the phase radius.
    pub t_max: Option<f64>,
    /// Budget of `(x, y, u)` triples for the continuity check.
    pub pair_budget: usize,
    /// Relative tolerance applied to every inequality.
    pub tol: f64,
    pub seed: u64,
}

impl Default for AuditSpec {
    fn default() -> Self {
        Self {
            x_samples: 33,
            u_samples: 33,
            u_radius: None,
            t_samples: 2000,
            t_max: None,
            pair_budget: 2_000_000,
            tol: 1e-9,
            seed: 0,
        }
    }
}

/// Outcome of one audited hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditEntry {
    pub hypothesis: &'static str,
    pub passed: bool,
    pub samples: usize,
    /// Smallest (normalised) slack `rhs - lhs` over all samples.
    pub worst_margin: f64,
    /// Human readable location of the worst sample.
    pub witness: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn get(&self, hypothesis: &str) -> Option<&AuditEntry> {
        self.entries.iter().find(|e| e.hypothesis == hypothesis)
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }
}

struct Tracker {
    hypothesis: &'static str,
    samples: usize,
    worst: f64,
    witness: String,
    tol: f64,
}

impl Tracker {
    fn new(hypothesis: &'static str, tol: f64) -> Self {
        Self {
            hypothesis,
            samples: 0,
            worst: f64::INFINITY,
            witness: String::new(),
            tol,
        }
    }

    /// Record `lhs ≤ rhs`, with margins normalised by `1 + |rhs|`.
    fn le(&mut self, lhs: f64, rhs: f64, witness: impl FnOnce() -> String) {
        self.samples += 1;
        let margin = (rhs - lhs) / (1.0 + rhs.abs());
        if margin < self.worst || margin.is_nan() {
            self.worst = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
            self.witness = witness();
        }
    }

    fn finish(self) -> AuditEntry {
        let worst = if self.samples == 0 { 0.0 } else { self.worst };
        AuditEntry {
            hypothesis: self.hypothesis,
            passed: worst >= -self.tol,
            samples: self.samples,
            worst_margin: worst,
            witness: self.witness,
        }
    }
}

fn axis_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

fn tensor_grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for p in &out {
            for &v in axis {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn fmt_pt(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(","))
}

/// Audits (H2)–(H5), (H7), (H8), the properties of `f`, and the weight-level
/// growth conditions (G1)–(G4) on sampled points.
///
/// The continuity check only pairs points of the same subdomain, since wells may
/// jump across subdomain boundaries.
pub fn audit_hypotheses(pot: &Potential, spec: &AuditSpec) -> AuditReport {
    let growth = *pot.growth();
    let tol = spec.tol;
    let dom = pot.domain();
    let m = pot.phase_dim();
    let sup = pot.wells().sup_norm();

    let x_axes: Vec<Vec<f64>> = (0..dom.dim())
        .map(|d| axis_points(dom.lower()[d], dom.upper()[d], spec.x_samples))
        .collect();
    let xs = tensor_grid(&x_axes);
    let radius = spec
        .u_radius
        .unwrap_or_else(|| (2.0 * growth.c2).max(2.0 * sup + 1.0).max(growth.radius));
    let mut u_axis = axis_points(-radius, radius, spec.u_samples);
    // make sure ±1 appear so that adjusted wells are hit exactly
    for v in [-1.0, 1.0] {
        if !u_axis.iter().any(|&w| w == v) {
            u_axis.push(v);
        }
    }
    u_axis.sort_by(f64::total_cmp);
    let us = tensor_grid(&vec![u_axis; m]);

    let mut h2 = Tracker::new("H2", tol);
    let mut h3 = Tracker::new("H3", tol);
    let mut h4 = Tracker::new("H4", tol);
    let mut h5 = Tracker::new("H5", tol);
    let mut g1 = Tracker::new("G1", tol);
    let mut g2 = Tracker::new("G2", tol);
    let mut g3 = Tracker::new("G3", tol);
    let mut g4 = Tracker::new("G4", tol);

    let cg = growth.weight_constant();
    let r = growth.radius;
    for x in &xs {
        let frozen = match pot.at(x) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let a = frozen.well().to_vec();
        let na = frozen.neg_well();
        let na_norm = norm(&a);
        h3.le(pot.delta(), na_norm, || format!("x={}", fmt_pt(x)));
        let wa = frozen.value(&a);
        let wb = frozen.value(&na);
        h2.le(wa.abs().max(wb.abs()), 0.0, || format!("x={} at wells", fmt_pt(x)));
        for u in &us {
            let w = frozen.value(u);
            let (dp, dm) = crate::vecmath::dist_pm(u, &a);
            let d = dp.min(dm);
            let un = norm(u);
            let wit = || format!("x={} u={}", fmt_pt(x), fmt_pt(u));
            if d > 1e-8 {
                // strictly positive away from the wells
                h2.le(0.0, if w > 0.0 { 0.0 } else { -1.0 }, wit);
            }
            let f = growth.eval(d);
            h4.le(f / growth.c1, w, wit);
            h4.le(w, growth.c1 * f, wit);
            if un >= growth.c2 {
                h5.le(un / growth.c2, w, wit);
            }
            let w0 = 2.0 * w.max(0.0).sqrt();
            let fg = growth.weight_growth(d);
            g1.le(w0, cg * fg, wit);
            if d <= r {
                g2.le(fg / cg, w0, wit);
                g2.le(w0, cg * fg, wit);
            }
            let fgu = growth.weight_growth(un);
            if un >= r {
                g3.le(fgu / cg, w0, wit);
            }
            g4.le(fgu / cg - cg, w0, wit);
        }
    }

    let t_max = spec.t_max.unwrap_or(2.0 * radius);
    let ts: Vec<f64> = (0..spec.t_samples)
        .map(|k| {
            let s = k as f64 / (spec.t_samples.max(2) - 1) as f64;
            1e-6 * (t_max / 1e-6).powf(s)
        })
        .collect();
    let mut h8 = Tracker::new("H8", tol);
    let mut fprops = Tracker::new("f", tol);
    fprops.le(growth.eval(0.0).abs(), 0.0, || "t=0".into());
    let mut prev = 0.0;
    for &t in &ts {
        let f = growth.eval(t);
        h8.le(growth.eval(2.0 * t), growth.c3 * f, || format!("t={t:.6e}"));
        fprops.le(0.0, if f > 0.0 { 0.0 } else { -1.0 }, || format!("t={t:.6e} f=0"));
        if t <= r {
            fprops.le(prev, f, || format!("t={t:.6e} decreasing"));
        }
        prev = f;
        // doubling and monotonicity of √f on [0, R] for (G2)
        let fg = growth.weight_growth(t);
        g2.le(growth.weight_growth(2.0 * t), cg * fg, || format!("t={t:.6e}"));
    }
    // non-summable tail: √f must stay bounded away from zero beyond R
    let alpha = growth.weight_growth(r);
    for &t in ts.iter().filter(|&&t| t >= r) {
        g3.le(0.5 * alpha, growth.weight_growth(t), || format!("tail t={t:.6e}"));
        g4.le(alpha, growth.weight_growth(t), || format!("tail t={t:.6e}"));
    }

    let h7 = audit_continuity(pot, &xs, &us, spec);

    AuditReport {
        entries: vec![
            h2.finish(),
            h3.finish(),
            h4.finish(),
            h5.finish(),
            h7,
            h8.finish(),
            fprops.finish(),
            g1.finish(),
            g2.finish(),
            g3.finish(),
            g4.finish(),
        ],
    }
}

/// `|W(x,T(x,u)) − W(y,T(y,u))| ≤ ω(|x−y|)·W(x,T(x,u))` on sampled same-subdomain pairs.
fn audit_continuity(pot: &Potential, xs: &[Vec<f64>], us: &[Vec<f64>], spec: &AuditSpec) -> AuditEntry {
    let mut tr = Tracker::new("H7", spec.tol);
    let dom = pot.domain();
    let labelled: Vec<(usize, &Vec<f64>)> = xs
        .iter()
        .filter_map(|x| dom.subdomain_of(x).ok().map(|i| (i, x)))
        .collect();
    let mut pairs = Vec::new();
    for i in 0..labelled.len() {
        for j in i + 1..labelled.len() {
            if labelled[i].0 == labelled[j].0 {
                pairs.push((i, j));
            }
        }
    }
    let frozen: Vec<_> = labelled
        .iter()
        .map(|(i, x)| {
            let f = pot.at_branch(x, *i);
            let t = Adjustment::new(f.well()).ok();
            (f, t)
        })
        .collect();
    let adjusted = |k: usize, u: &[f64], buf: &mut Vec<f64>| -> f64 {
        let (f, t) = &frozen[k];
        match t {
            Some(t) => {
                buf.resize(u.len(), 0.0);
                t.apply_into(u, buf);
                f.value(buf)
            }
            None => f64::NAN,
        }
    };
    let mut check = |i: usize, j: usize, u: &[f64], buf: &mut Vec<f64>| {
        let wx = adjusted(i, u, buf);
        let wy = adjusted(j, u, buf);
        let dx = crate::vecmath::dist(labelled[i].1, labelled[j].1);
        let om = pot.modulus().eval(dx);
        let lhs = (wx - wy).abs();
        // the inequality is symmetric in spirit; audit both orientations
        let wit = || {
            format!(
                "x={} y={} u={}",
                fmt_pt(labelled[i].1),
                fmt_pt(labelled[j].1),
                fmt_pt(u)
            )
        };
        tr.le(lhs, om * wx, wit);
        tr.le(lhs, om * wy, wit);
    };
    let mut buf = Vec::new();
    let total = pairs.len().saturating_mul(us.len());
    if total <= spec.pair_budget {
        for &(i, j) in &pairs {
            for u in us {
                check(i, j, u, &mut buf);
            }
        }
    } else if !pairs.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for _ in 0..spec.pair_budget {
            let &(i, j) = pairs.choose(&mut rng).unwrap();
            let u = &us[rng.gen_range(0..us.len())];
            check(i, j, u, &mut buf);
        }
    }
    tr.finish()
}

#[cfg(test)]
mod tests {
    use super::super::{Family, SpatialDomain, WellExpr};
    use super::*;

    fn example_quartic() -> Potential {
        // a(x) = 1 + x/2 on [-1, 1] stays above 1/2, scaled so that δ = 1
        let d = SpatialDomain::interval(-1.0, 1.0).unwrap();
        let w = WellExpr::Affine {
            offset: vec![1.5],
            slope: vec![vec![0.5]],
        };
        Potential::single(d, Family::Quartic, w).unwrap()
    }

    #[test]
    fn moving_quartic_passes_everything() {
        let p = example_quartic();
        assert!((p.delta() - 1.0).abs() < 1e-12);
        let rep = audit_hypotheses(&p, &AuditSpec::default());
        for e in &rep.entries {
            assert!(e.passed, "{e:?}");
        }
    }

    #[test]
    fn constant_wells_have_zero_modulus_and_pass() {
        let d = SpatialDomain::interval(0.0, 1.0).unwrap();
        let p = Potential::single(d, Family::Quartic, WellExpr::constant(vec![1.0, 0.0])).unwrap();
        assert_eq!(p.modulus().eval(0.3), 0.0);
        let rep = audit_hypotheses(
            &p,
            &AuditSpec {
                x_samples: 9,
                u_samples: 17,
                ..Default::default()
            },
        );
        assert!(rep.get("H7").unwrap().passed);
        assert_eq!(rep.get("H7").unwrap().worst_margin, 0.0);
        assert!(rep.all_passed(), "{:?}", rep.failures().collect::<Vec<_>>());
    }

    #[test]
    fn min_power_family_passes() {
        let d = SpatialDomain::rect([0.0, 0.0], [1.0, 1.0]).unwrap();
        let w = WellExpr::Affine {
            offset: vec![1.0, 0.0],
            slope: vec![vec![0.2, 0.0], vec![0.0, 0.3]],
        };
        for q in [1.0, 2.0, 3.0] {
            let p = Potential::single(d.clone(), Family::MinPower { q }, w.clone()).unwrap();
            let rep = audit_hypotheses(
                &p,
                &AuditSpec {
                    x_samples: 9,
                    u_samples: 17,
                    ..Default::default()
                },
            );
            assert!(rep.all_passed(), "q={q} {:?}", rep.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn forced_separation_violation_has_witness() {
        let d = SpatialDomain::interval(0.0, 1.0).unwrap();
        let w = WellExpr::Affine {
            offset: vec![0.5],
            slope: vec![vec![1.0]],
        };
        let p = Potential::with_default_constants(d, vec![Family::Quartic], vec![w], Some(1.0)).unwrap();
        let rep = audit_hypotheses(&p, &AuditSpec::default());
        let h3 = rep.get("H3").unwrap();
        assert!(!h3.passed);
        assert_eq!(h3.witness, "x=(0.000000)");
    }
}
