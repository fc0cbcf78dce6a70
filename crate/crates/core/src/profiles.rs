//! Transition profiles: a curve in phase space run at the speed
//! `|γ'(g)| g' = √(λ + W(γ(g))) / ε`, tabulated as a monotone map `g: [0, τ] → [-1, 1]`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesics::Polyline;
use crate::potentials::PhaseDensity;
use crate::vecmath::{dist, lerp_into};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    /// Regularisation `λ > 0` under the square root.
    pub lambda: f64,
    /// Interface scale `ε > 0`.
    pub eps: f64,
    /// Minimal number of quadrature panels per curve segment.
    pub resolution: usize,
    /// Relative tolerance of the adaptive panel splitting.
    pub rtol: f64,
}

impl ProfileConfig {
    pub fn new(lambda: f64, eps: f64) -> Self {
        Self {
            lambda,
            eps,
            resolution: 4,
            rtol: 1e-10,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !(self.eps > 0.0) {
            return Err(Error::Parameter("profile needs lambda > 0 and eps > 0".into()));
        }
        Ok(())
    }
}

/// Tabulated profile. Table nodes are quadrature panel endpoints; `g` and
/// `γ∘g` are linear between them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub tau: f64,
    /// Times `t_j`, from `0` to `τ`, strictly increasing.
    pub t: Vec<f64>,
    /// Curve parameters `g(t_j)`, from `-1` to `1`, strictly increasing.
    pub s: Vec<f64>,
    m: usize,
    points: Vec<f64>,
    /// Per-panel averages of `W` and `2√W` along the curve (Gauss rule).
    panel_w: Vec<f64>,
    panel_weight: Vec<f64>,
    /// Constant of the lower bound `C ε ≤ τ`: `L / √(λ + max W)`.
    pub lower_constant: f64,
    /// Euclidean length of the source curve.
    pub length: f64,
    pub cfg: ProfileConfig,
}

const G3X: [f64; 3] = [0.112_701_665_379_258_31, 0.5, 0.887_298_334_620_741_7];
const G3W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

struct Panel {
    /// Fractions of the segment at the panel ends.
    a: f64,
    b: f64,
    inv_speed: f64,
    w: f64,
    weight: f64,
    w_max: f64,
}

fn panel<D: PhaseDensity + ?Sized>(d: &D, p: &[f64], q: &[f64], a: f64, b: f64, lambda: f64, buf: &mut [f64]) -> Panel {
    let mut inv = 0.0;
    let mut w = 0.0;
    let mut wt = 0.0;
    let mut w_max: f64 = 0.0;
    for (x, c) in G3X.iter().zip(G3W) {
        lerp_into(p, q, a + (b - a) * x, buf);
        let v = d.value(buf).max(0.0);
        inv += c / (lambda + v).sqrt();
        w += c * v;
        wt += c * 2.0 * v.sqrt();
        w_max = w_max.max(v);
    }
    // the weights sum to one up to rounding; keep the averages inside their exact ranges
    Panel {
        a,
        b,
        inv_speed: inv.min(1.0 / lambda.sqrt()).max(1.0 / (lambda + w_max).sqrt()),
        w,
        weight: wt,
        w_max,
    }
}

fn split<D: PhaseDensity + ?Sized>(
    d: &D,
    p: &[f64],
    q: &[f64],
    pan: Panel,
    cfg: &ProfileConfig,
    depth: usize,
    buf: &mut [f64],
    out: &mut Vec<Panel>,
) {
    let mid = 0.5 * (pan.a + pan.b);
    let left = panel(d, p, q, pan.a, mid, cfg.lambda, buf);
    let right = panel(d, p, q, mid, pan.b, cfg.lambda, buf);
    let coarse = pan.inv_speed * (pan.b - pan.a);
    let fine = 0.5 * (pan.b - pan.a) * (left.inv_speed + right.inv_speed);
    let floor = (pan.b - pan.a) / (cfg.lambda + pan.w_max.max(left.w_max).max(right.w_max)).sqrt();
    if depth >= 40 || (coarse - fine).abs() <= cfg.rtol * floor {
        out.push(left);
        out.push(right);
    } else {
        split(d, p, q, left, cfg, depth + 1, buf, out);
        split(d, p, q, right, cfg, depth + 1, buf, out);
    }
}

/// Builds `t(s) = ∫₋₁^s ε|γ'| / √(λ + W(γ))` on adaptive panels and inverts it by
/// swapping the table axes.
pub fn reparameterize<D: PhaseDensity + ?Sized>(density: &D, curve: &Polyline, cfg: &ProfileConfig) -> Result<Profile> {
    cfg.validate()?;
    let length = curve.length();
    if !(length > 0.0) {
        return Err(Error::Degenerate("profile of a zero-length curve".into()));
    }
    let curve = curve.pruned(1e-14 * length);
    let m = curve.dim();
    let nseg = curve.n_segments();
    let mut buf = vec![0.0; m];
    let mut t = vec![0.0];
    let mut s = vec![-1.0];
    let mut points = curve.first().to_vec();
    let mut panel_w = Vec::new();
    let mut panel_weight = Vec::new();
    let mut w_max: f64 = 0.0;
    let mut acc = 0.0;
    let res = cfg.resolution.max(1);
    for k in 0..nseg {
        let (p, q) = (curve.vertex(k), curve.vertex(k + 1));
        let len = dist(p, q);
        let mut panels = Vec::new();
        for j in 0..res {
            let (a, b) = (j as f64 / res as f64, (j + 1) as f64 / res as f64);
            let pan = panel(density, p, q, a, b, cfg.lambda, &mut buf);
            split(density, p, q, pan, cfg, 0, &mut buf, &mut panels);
        }
        for pan in panels {
            let dt = cfg.eps * len * (pan.b - pan.a) * pan.inv_speed;
            acc += dt;
            t.push(acc);
            s.push(curve.param_of(k) + (pan.b) * 2.0 / nseg as f64);
            lerp_into(p, q, pan.b, &mut buf);
            points.extend_from_slice(&buf);
            panel_w.push(pan.w);
            panel_weight.push(pan.weight);
            w_max = w_max.max(pan.w_max);
        }
        // land exactly on the vertex
        let last = s.len() - 1;
        s[last] = curve.param_of(k + 1);
        let n = points.len();
        points[n - m..].copy_from_slice(q);
    }
    let tau = acc;
    Ok(Profile {
        tau,
        t,
        s,
        m,
        points,
        panel_w,
        panel_weight,
        lower_constant: length / (cfg.lambda + w_max).sqrt(),
        length,
        cfg: *cfg,
    })
}

impl Profile {
    pub fn dim(&self) -> usize {
        self.m
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let t = t.clamp(0.0, self.tau);
        let j = match self.t.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(j) => j.min(self.t.len() - 2),
            Err(j) => j.saturating_sub(1).min(self.t.len() - 2),
        };
        let w = (t - self.t[j]) / (self.t[j + 1] - self.t[j]);
        (j, w.clamp(0.0, 1.0))
    }

    /// `g(t)`, clamped to `g(0) = -1`, `g(τ) = 1` outside `[0, τ]`.
    pub fn g(&self, t: f64) -> f64 {
        let (j, w) = self.locate(t);
        self.s[j] + w * (self.s[j + 1] - self.s[j])
    }

    /// `γ(g(t))` written into `out`.
    pub fn point_into(&self, t: f64, out: &mut [f64]) {
        let (j, w) = self.locate(t);
        let m = self.m;
        lerp_into(
            &self.points[j * m..(j + 1) * m],
            &self.points[(j + 1) * m..(j + 2) * m],
            w,
            out,
        );
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.point_into(t, &mut out);
        out
    }

    /// `g'` on table interval `j`.
    pub fn slope(&self, j: usize) -> f64 {
        (self.s[j + 1] - self.s[j]) / (self.t[j + 1] - self.t[j])
    }

    /// Writes `t,g` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,g")?;
        for (t, s) in self.t.iter().zip(&self.s) {
            writeln!(w, "{t:.12e},{s:.12e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileEnergy {
    /// `∫₀^τ (1/ε) W(γ(g)) + ε |γ'(g)|² g'² dt`.
    pub lhs: f64,
    /// `∫ 2√W(γ)|γ'| + 2√λ L`.
    pub rhs: f64,
}

/// Both sides of the profile energy inequality, on the profile's own panels.
pub fn profile_energy(profile: &Profile) -> ProfileEnergy {
    let eps = profile.cfg.eps;
    let m = profile.m;
    let mut lhs = 0.0;
    let mut curve = 0.0;
    for j in 0..profile.t.len() - 1 {
        let dt = profile.t[j + 1] - profile.t[j];
        let dl = dist(
            &profile.points[j * m..(j + 1) * m],
            &profile.points[(j + 1) * m..(j + 2) * m],
        );
        lhs += dt / eps * profile.panel_w[j] + eps * dl * dl / dt;
        curve += dl * profile.panel_weight[j];
    }
    ProfileEnergy {
        lhs,
        rhs: curve + 2.0 * profile.cfg.lambda.sqrt() * profile.length,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::FnDensity;

    fn quartic() -> impl PhaseDensity {
        FnDensity::new(1, |u: &[f64]| (u[0] * u[0] - 1.0).powi(2))
    }

    #[test]
    fn constant_potential_example() {
        let d = FnDensity::new(2, |_: &[f64]| 3.0);
        let c = Polyline::straight(&[-1.0, 0.0], &[1.0, 0.0], 8).unwrap();
        let p = reparameterize(&d, &c, &ProfileConfig::new(1.0, 1.0)).unwrap();
        assert!((p.tau - 1.0).abs() < 1e-14);
        for j in 0..p.t.len() - 1 {
            assert!((p.slope(j) - 2.0).abs() < 1e-12);
        }
        let e = profile_energy(&p);
        assert!((e.lhs - 7.0).abs() < 1e-12);
        assert!((e.rhs - (4.0 * 3f64.sqrt() + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn vanishing_endpoints_give_finite_duration() {
        let eps = 0.01;
        let c = Polyline::straight(&[-1.0], &[1.0], 1).unwrap();
        let p = reparameterize(&quartic(), &c, &ProfileConfig::new(eps * eps, eps)).unwrap();
        assert!(p.tau.is_finite());
        assert!(p.tau <= eps / eps * 2.0);
        assert!(p.tau >= p.lower_constant * eps);
    }

    #[test]
    fn scalar_profile_tracks_tanh() {
        let eps = 0.01;
        let c = Polyline::straight(&[-1.0], &[1.0], 1).unwrap();
        let p = reparameterize(&quartic(), &c, &ProfileConfig::new(eps * eps, eps)).unwrap();
        // centre where g crosses zero
        let j = p.s.iter().position(|&s| s >= 0.0).unwrap();
        let t0 = p.t[j - 1] + (0.0 - p.s[j - 1]) / p.slope(j - 1);
        let mut worst: f64 = 0.0;
        for k in 0..=4000 {
            let t = p.tau * k as f64 / 4000.0;
            worst = worst.max((p.g(t) - ((t - t0) / eps).tanh()).abs());
        }
        assert!(worst < 0.05, "{worst}");
    }

    #[test]
    fn zero_length_curve_is_degenerate() {
        let c = Polyline::straight(&[1.0], &[1.0], 3).unwrap();
        assert!(matches!(
            reparameterize(&quartic(), &c, &ProfileConfig::new(1.0, 1.0)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn duration_converges_under_refinement() {
        let eps = 0.02;
        let c = Polyline::straight(&[-1.0], &[1.0], 7).unwrap();
        let mut cfg = ProfileConfig::new(eps * eps, eps);
        let a = reparameterize(&quartic(), &c, &cfg).unwrap().tau;
        cfg.resolution *= 2;
        let b = reparameterize(&quartic(), &c, &cfg).unwrap().tau;
        assert!(((a - b) / b).abs() < 1e-6);
    }

    #[test]
    fn table_is_strictly_increasing() {
        let d = FnDensity::new(2, |u: &[f64]| ((u[0] - 1.0).powi(2) + u[1] * u[1]) * ((u[0] + 1.0).powi(2) + u[1] * u[1]));
        let c = crate::geodesics::polar_arc(&[-1.0, 1e-12], &[1.0, 0.0], 33).unwrap();
        let p = reparameterize(&d, &c, &ProfileConfig::new(1e-4, 1e-2)).unwrap();
        assert!(p.t.windows(2).all(|w| w[1] > w[0]));
        assert!(p.s.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*p.s.last().unwrap(), 1.0);
        assert_eq!(p.point(p.tau), vec![1.0, 0.0]);
    }

    #[test]
    fn duration_matches_trapezoid_oracle() {
        let eps = 0.05;
        let lambda = eps * eps;
        let c = Polyline::straight(&[-1.2], &[0.9], 3).unwrap();
        let p = reparameterize(&quartic(), &c, &ProfileConfig::new(lambda, eps)).unwrap();
        let n = 400_000;
        let f = |u: f64| eps / (lambda + (u * u - 1.0).powi(2)).sqrt();
        let h = 2.1 / n as f64;
        let mut want = 0.5 * (f(-1.2) + f(0.9));
        for k in 1..n {
            want += f(-1.2 + k as f64 * h);
        }
        want *= h;
        assert!(((p.tau - want) / want).abs() < 1e-7, "{} vs {want}", p.tau);
    }

    fn planar_quartic() -> impl PhaseDensity {
        FnDensity::new(2, |u: &[f64]| ((u[0] - 1.0).powi(2) + u[1] * u[1]) * ((u[0] + 1.0).powi(2) + u[1] * u[1]))
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(20))]
        #[test]
        fn energy_inequality_and_duration_bounds(
            pts in proptest::collection::vec(-1.5f64..1.5, 6..16),
            log_eps in -3.0f64..0.0,
            log_lambda in -4.0f64..0.0,
        ) {
            let eps = 10f64.powf(log_eps);
            let lambda = 10f64.powf(log_lambda);
            let n = pts.len() / 2;
            let c = Polyline::new(2, pts[..2 * n].to_vec()).unwrap();
            proptest::prop_assume!(c.length() > 1e-6);
            let d = planar_quartic();
            let p = reparameterize(&d, &c, &ProfileConfig::new(lambda, eps)).unwrap();
            let e = profile_energy(&p);
            proptest::prop_assert!(e.lhs <= e.rhs + 1e-6, "{e:?}");
            proptest::prop_assert!(p.tau <= eps / lambda.sqrt() * p.length * (1.0 + 1e-12));
            proptest::prop_assert!(p.lower_constant * eps <= p.tau * (1.0 + 1e-12));
            proptest::prop_assert!(p.t.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
