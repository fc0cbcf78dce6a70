use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::PhaseDensity;
use crate::vecmath::{all_finite, dist, lerp_into, norm};

/// Discrete curve in phase space, uniformly parameterised over `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    m: usize,
    data: Vec<f64>,
}

impl Polyline {
    /// Builds a polyline from flat vertex storage (`m` coordinates per vertex).
    pub fn new(m: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || data.len() % m != 0 || data.len() / m < 2 {
            return Err(Error::Parameter(
                "a polyline needs at least two vertices of a common dimension".into(),
            ));
        }
        if !all_finite(&data) {
            return Err(Error::Parameter("polyline vertices must be finite".into()));
        }
        Ok(Self { m, data })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let m = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != m) {
            return Err(Error::Parameter("polyline vertices differ in dimension".into()));
        }
        Self::new(m, points.concat())
    }

    /// Straight segment from `p` to `q` split into `segments` equal pieces.
    pub fn straight(p: &[f64], q: &[f64], segments: usize) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::Parameter("endpoints differ in dimension".into()));
        }
        let n = segments.max(1);
        let mut data = vec![0.0; (n + 1) * p.len()];
        for (k, chunk) in data.chunks_mut(p.len()).enumerate() {
            lerp_into(p, q, k as f64 / n as f64, chunk);
        }
        Self::new(p.len(), data)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn n_vertices(&self) -> usize {
        self.data.len() / self.m
    }

    pub fn n_segments(&self) -> usize {
        self.n_vertices() - 1
    }

    #[inline]
    pub fn vertex(&self, k: usize) -> &[f64] {
        &self.data[k * self.m..(k + 1) * self.m]
    }

    #[inline]
    pub fn vertex_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.m..(k + 1) * self.m]
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.m)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn first(&self) -> &[f64] {
        self.vertex(0)
    }

    pub fn last(&self) -> &[f64] {
        self.vertex(self.n_vertices() - 1)
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        (0..self.n_segments())
            .map(|k| dist(self.vertex(k), self.vertex(k + 1)))
            .collect()
    }

    /// Euclidean length `Σ |v_{k+1} - v_k|`.
    pub fn length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Largest vertex norm.
    pub fn sup_norm(&self) -> f64 {
        self.vertices().map(norm).fold(0.0, f64::max)
    }

    pub fn reversed(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for k in (0..self.n_vertices()).rev() {
            data.extend_from_slice(self.vertex(k));
        }
        Self { m: self.m, data }
    }

    /// Parameter of vertex `k` in `[-1, 1]`.
    pub fn param_of(&self, k: usize) -> f64 {
        -1.0 + 2.0 * k as f64 / self.n_segments() as f64
    }

    /// Point at parameter `s ∈ [-1, 1]` (clamped).
    pub fn point_at(&self, s: f64) -> Vec<f64> {
        let (k, t) = self.locate(s);
        let mut out = vec![0.0; self.m];
        lerp_into(self.vertex(k), self.vertex(k + 1), t, &mut out);
        out
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let n = self.n_segments();
        let x = ((s.clamp(-1.0, 1.0) + 1.0) * 0.5 * n as f64).min(n as f64);
        let k = (x.floor() as usize).min(n - 1);
        (k, x - k as f64)
    }

    /// Restriction to `[s1, s2]`, with interpolated endpoints.
    pub fn sub_curve(&self, s1: f64, s2: f64) -> Self {
        let (a, b) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let mut data = self.point_at(a);
        for k in 0..self.n_vertices() {
            let s = self.param_of(k);
            if s > a && s < b {
                data.extend_from_slice(self.vertex(k));
            }
        }
        data.extend(self.point_at(b));
        Self { m: self.m, data }
    }

    /// Drops segments shorter than `tol`, keeping both endpoints.
    pub fn pruned(&self, tol: f64) -> Self {
        let n = self.n_vertices();
        let mut data = self.vertex(0).to_vec();
        let mut last = 0usize;
        for k in 1..n - 1 {
            if dist(self.vertex(k), &data[data.len() - self.m..]) > tol {
                data.extend_from_slice(self.vertex(k));
                last = k;
            }
        }
        let end = self.vertex(n - 1);
        if data.len() > self.m && dist(end, &data[data.len() - self.m..]) <= tol && last != 0 {
            data.truncate(data.len() - self.m);
        }
        data.extend_from_slice(end);
        Self { m: self.m, data }
    }

    /// Resamples to `vertices` points equally spaced in arc length.
    pub fn resampled(&self, vertices: usize) -> Self {
        let vertices = vertices.max(2);
        let lens = self.segment_lengths();
        let total: f64 = lens.iter().sum();
        if total == 0.0 {
            let mut data = Vec::with_capacity(vertices * self.m);
            for _ in 0..vertices {
                data.extend_from_slice(self.first());
            }
            return Self { m: self.m, data };
        }
        let mut data = Vec::with_capacity(vertices * self.m);
        data.extend_from_slice(self.first());
        let mut seg = 0usize;
        let mut acc = 0.0;
        let mut buf = vec![0.0; self.m];
        for j in 1..vertices - 1 {
            let target = total * j as f64 / (vertices - 1) as f64;
            while seg < lens.len() - 1 && acc + lens[seg] < target {
                acc += lens[seg];
                seg += 1;
            }
            let t = if lens[seg] > 0.0 {
                ((target - acc) / lens[seg]).clamp(0.0, 1.0)
            } else {
                0.0
            };
            lerp_into(self.vertex(seg), self.vertex(seg + 1), t, &mut buf);
            data.extend_from_slice(&buf);
        }
        data.extend_from_slice(self.last());
        Self { m: self.m, data }
    }
}

/// Per-segment quadrature rule for `∫ 2√W |γ'|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrature {
    Midpoint,
    #[default]
    Gauss3,
}

const GAUSS3_NODES: [f64; 3] = [
    0.112_701_665_379_258_31,
    0.5,
    0.887_298_334_620_741_7,
];
const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

/// Energy of the straight segment `[a, b]`; `buf` must have the phase dimension.
#[inline]
pub fn segment_energy<D: PhaseDensity + ?Sized>(
    density: &D,
    a: &[f64],
    b: &[f64],
    quad: Quadrature,
    buf: &mut [f64],
) -> f64 {
    let len = dist(a, b);
    if len == 0.0 {
        return 0.0;
    }
    match quad {
        Quadrature::Midpoint => {
            lerp_into(a, b, 0.5, buf);
            len * density.weight(buf)
        }
        Quadrature::Gauss3 => {
            let mut s = 0.0;
            for (t, w) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS) {
                lerp_into(a, b, *t, buf);
                s += w * density.weight(buf);
            }
            len * s
        }
    }
}

/// `∫ 2√W(γ) |γ'|` by composite quadrature over the segments.
pub fn curve_energy<D: PhaseDensity + ?Sized>(density: &D, curve: &Polyline, quad: Quadrature) -> f64 {
    let mut buf = vec![0.0; curve.dim()];
    (0..curve.n_segments())
        .map(|k| segment_energy(density, curve.vertex(k), curve.vertex(k + 1), quad, &mut buf))
        .sum()
}

/// [`segment_energy`] over `⌈len / max_panel⌉` equal sub-panels, so that a long
/// segment is integrated as finely as a short one.
pub fn segment_energy_paneled<D: PhaseDensity + ?Sized>(
    density: &D,
    a: &[f64],
    b: &[f64],
    quad: Quadrature,
    max_panel: f64,
    buf: &mut [f64],
) -> f64 {
    let len = dist(a, b);
    let panels = if max_panel > 0.0 && len > max_panel {
        (len / max_panel).ceil() as usize
    } else {
        1
    };
    if panels == 1 {
        return segment_energy(density, a, b, quad, buf);
    }
    let m = a.len();
    let mut lo = a.to_vec();
    let mut hi = vec![0.0; m];
    let mut s = 0.0;
    for k in 1..=panels {
        lerp_into(a, b, k as f64 / panels as f64, &mut hi);
        s += segment_energy(density, &lo, &hi, quad, buf);
        std::mem::swap(&mut lo, &mut hi);
    }
    s
}

/// [`curve_energy`] with every segment split into panels no longer than `max_panel`.
pub fn curve_energy_paneled<D: PhaseDensity + ?Sized>(
    density: &D,
    curve: &Polyline,
    quad: Quadrature,
    max_panel: f64,
) -> f64 {
    let mut buf = vec![0.0; curve.dim()];
    (0..curve.n_segments())
        .map(|k| segment_energy_paneled(density, curve.vertex(k), curve.vertex(k + 1), quad, max_panel, &mut buf))
        .sum()
}

/// Curve `r(s) e^{iψ(s)}` with `r`, `ψ` linear between the polar coordinates of
/// `p` and `q` (angles taken in `[0, 2π)`).
///
/// In three dimensions the curve lies in the plane spanned by `p` and `q`.
pub fn polar_arc(p: &[f64], q: &[f64], segments: usize) -> Result<Polyline> {
    if p.len() != q.len() {
        return Err(Error::Parameter("endpoints differ in dimension".into()));
    }
    let (rp, rq) = (norm(p), norm(q));
    if rp == 0.0 || rq == 0.0 {
        return Err(Error::Degenerate("polar form undefined at the origin".into()));
    }
    let (e1, e2) = match p.len() {
        2 => (vec![1.0, 0.0], vec![0.0, 1.0]),
        3 => plane_basis(p, q),
        m => {
            return Err(Error::Usage(format!(
                "polar arcs need phase dimension 2 or 3, got {m}"
            )))
        }
    };
    let angle = |v: &[f64]| {
        let x = crate::vecmath::dot(v, &e1);
        let y = crate::vecmath::dot(v, &e2);
        y.atan2(x).rem_euclid(2.0 * PI)
    };
    let (pp, pq) = (angle(p), angle(q));
    let n = segments.max(1);
    let mut data = Vec::with_capacity((n + 1) * p.len());
    for k in 0..=n {
        if k == 0 {
            data.extend_from_slice(p);
            continue;
        }
        if k == n {
            data.extend_from_slice(q);
            continue;
        }
        let s = k as f64 / n as f64;
        let r = rp + s * (rq - rp);
        let psi = pp + s * (pq - pp);
        let (c, sn) = (psi.cos(), psi.sin());
        for i in 0..p.len() {
            data.push(r * (c * e1[i] + sn * e2[i]));
        }
    }
    Polyline::new(p.len(), data)
}

/// Orthonormal basis of a plane containing `p` and `q`.
fn plane_basis(p: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let np = norm(p);
    let e1: Vec<f64> = p.iter().map(|v| v / np).collect();
    let proj = crate::vecmath::dot(q, &e1);
    let mut e2: Vec<f64> = q.iter().zip(&e1).map(|(v, e)| v - proj * e).collect();
    let n2 = norm(&e2);
    if n2 > 1e-12 * norm(q) {
        e2.iter_mut().for_each(|v| *v /= n2);
    } else {
        // collinear endpoints: any plane through the line will do
        let axis = (0..3)
            .min_by(|&a, &b| e1[a].abs().total_cmp(&e1[b].abs()))
            .unwrap();
        let mut c = vec![0.0; 3];
        c[axis] = 1.0;
        let pr = crate::vecmath::dot(&c, &e1);
        e2 = c.iter().zip(&e1).map(|(v, e)| v - pr * e).collect();
        let n = norm(&e2);
        e2.iter_mut().for_each(|v| *v /= n);
    }
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::FnDensity;
    use proptest::prelude::*;

    fn scalar_quartic() -> impl PhaseDensity {
        FnDensity::new(1, |u: &[f64]| (u[0] * u[0] - 1.0).powi(2))
    }

    #[test]
    fn constant_curve_at_well_costs_nothing() {
        let c = Polyline::straight(&[1.0], &[1.0], 10).unwrap();
        assert_eq!(curve_energy(&scalar_quartic(), &c, Quadrature::Gauss3), 0.0);
    }

    #[test]
    fn scalar_quartic_segment() {
        let c = Polyline::straight(&[-1.0], &[1.0], 4096).unwrap();
        for q in [Quadrature::Midpoint, Quadrature::Gauss3] {
            let e = curve_energy(&scalar_quartic(), &c, q);
            assert!((e - 8.0 / 3.0).abs() < 1e-5, "{q:?}: {e}");
        }
    }

    #[test]
    fn min_power_segment() {
        let d = FnDensity::new(2, |u: &[f64]| {
            let dm = (u[0] - 1.0).hypot(u[1]);
            let dp = (u[0] + 1.0).hypot(u[1]);
            dm.min(dp).powi(2)
        });
        let c = Polyline::straight(&[-1.0, 0.0], &[1.0, 0.0], 4096).unwrap();
        assert!((curve_energy(&d, &c, Quadrature::Gauss3) - 2.0).abs() < 1e-5);
    }

    #[test]
    fn polar_arc_examples() {
        let c = polar_arc(&[1.0, 0.0], &[1.0, 0.0], 16).unwrap();
        assert_eq!(c.length(), 0.0);
        let c = polar_arc(&[1.0, 0.0], &[0.0, 2.0], 256).unwrap();
        assert!(c.length() <= 1.0 + 4.0 * PI);
        let c = polar_arc(&[1.0, 0.0], &[0.0, 1.0], 512).unwrap();
        assert!((c.length() - PI / 2.0).abs() < 1e-3);
        assert!(matches!(polar_arc(&[0.0, 0.0], &[1.0, 0.0], 4), Err(Error::Degenerate(_))));
    }

    #[test]
    fn polar_arc_in_three_dimensions() {
        let c = polar_arc(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], 512).unwrap();
        assert!((c.length() - PI / 2.0).abs() < 1e-3);
        assert_eq!(c.last(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn sub_curve_keeps_interior_vertices() {
        let c = Polyline::straight(&[0.0], &[4.0], 4).unwrap();
        let s = c.sub_curve(-0.75, 0.25);
        let pts: Vec<f64> = s.vertices().map(|v| v[0]).collect();
        assert_eq!(pts, vec![0.5, 1.0, 2.0, 2.5]);
        let s = c.sub_curve(-0.5, 0.0);
        let pts: Vec<f64> = s.vertices().map(|v| v[0]).collect();
        assert_eq!(pts, vec![1.0, 2.0]);
    }

    #[test]
    fn resample_is_uniform() {
        let c = Polyline::from_points(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 3.0]]).unwrap();
        let r = c.resampled(5);
        for l in r.segment_lengths() {
            assert!((l - 1.0).abs() < 1e-12);
        }
        assert_eq!(r.last(), &[1.0, 3.0]);
    }

    proptest! {
        #[test]
        fn polar_arc_respects_length_bound(
            rp in 0.05f64..3.0, rq in 0.05f64..3.0,
            ap in 0.0f64..6.28, aq in 0.0f64..6.28,
        ) {
            let p = [rp * ap.cos(), rp * ap.sin()];
            let q = [rq * aq.cos(), rq * aq.sin()];
            let c = polar_arc(&p, &q, 2048).unwrap();
            prop_assert!(c.length() <= (rp - rq).abs() + 2.0 * PI * rp.max(rq) + 1e-9);
        }

        #[test]
        fn energy_is_reparameterisation_invariant(n in 8usize..64) {
            let d = scalar_quartic();
            let c = Polyline::straight(&[-1.0], &[1.0], 2048).unwrap();
            let r = c.resampled(2048 + n);
            let (a, b) = (curve_energy(&d, &c, Quadrature::Gauss3), curve_energy(&d, &r, Quadrature::Gauss3));
            prop_assert!((a - b).abs() < 1e-6);
        }
    }
}
