use serde::{Deserialize, Serialize};

use super::grid::{dijkstra, PhaseGrid, Stencil};
use super::polyline::{curve_energy_paneled, segment_energy, segment_energy_paneled, Polyline, Quadrature};
use crate::error::{Error, Result};
use crate::potentials::{Capped, PhaseDensity};
use crate::vecmath::{all_finite, dist, dot, norm};

/// Endpoints and solver settings for one geodesic distance evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeodesicQuery {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Target certification gap.
    pub eps_cert: f64,
    /// Half-width of the search box centred at `box_center`.
    pub box_radius: f64,
    /// Centre of the search box (origin when empty).
    pub box_center: Vec<f64>,
    /// Grid nodes along each axis of the search box.
    pub grid_nodes: usize,
    pub stencil: Stencil,
    /// Maximal number of refinement sweeps.
    pub max_sweeps: usize,
    /// Relative energy decrease below which refinement stops.
    pub sweep_tol: f64,
    /// Vertices of the refined polyline; derived from the grid path when absent.
    pub vertices: Option<usize>,
    pub quadrature: Quadrature,
    /// Resolution factor of the certification grid.
    pub cert_refine: usize,
    /// Stencil of the certification grid.
    pub cert_stencil: Stencil,
    /// Panels of the scalar quadrature used when the phase is one-dimensional.
    pub scalar_panels: usize,
}

impl Default for GeodesicQuery {
    fn default() -> Self {
        Self {
            p: Vec::new(),
            q: Vec::new(),
            eps_cert: 1e-3,
            box_radius: 2.0,
            box_center: Vec::new(),
            grid_nodes: 101,
            stencil: Stencil::Basic,
            max_sweeps: 200,
            sweep_tol: 1e-12,
            vertices: None,
            quadrature: Quadrature::Gauss3,
            cert_refine: 2,
            cert_stencil: Stencil::Extended,
            scalar_panels: 4096,
        }
    }
}

impl GeodesicQuery {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Self {
        Self {
            p,
            q,
            ..Default::default()
        }
    }

    /// Same settings, different endpoints.
    pub fn with_endpoints(&self, p: &[f64], q: &[f64]) -> Self {
        Self {
            p: p.to_vec(),
            q: q.to_vec(),
            ..self.clone()
        }
    }

    /// Quadrature panel length of the refined curve: the search-grid spacing.
    pub fn panel_length(&self) -> f64 {
        2.0 * self.box_radius / (self.grid_nodes.max(2) - 1) as f64
    }

    pub fn search_box(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.p.len();
        let c = if self.box_center.len() == m {
            self.box_center.clone()
        } else {
            vec![0.0; m]
        };
        let lo = c.iter().map(|v| v - self.box_radius).collect();
        let hi = c.iter().map(|v| v + self.box_radius).collect();
        (lo, hi)
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps_cert > 0.0) {
            return Err(Error::Parameter("certification gap must be positive".into()));
        }
        if self.p.is_empty() || self.p.len() != self.q.len() {
            return Err(Error::Parameter("endpoints must share a positive dimension".into()));
        }
        if !all_finite(&self.p) || !all_finite(&self.q) {
            return Err(Error::Domain("endpoints must be finite".into()));
        }
        Ok(())
    }
}

/// Where a truncation level came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CapProvenance {
    User,
    /// Four times the sampled supremum of `W` on the ball of this radius.
    DerivedFromBall { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationCap {
    pub level: f64,
    pub provenance: CapProvenance,
}

impl TruncationCap {
    pub fn user(level: f64) -> Result<Self> {
        if !(level > 0.0) {
            return Err(Error::Parameter("truncation level must be positive".into()));
        }
        Ok(Self {
            level,
            provenance: CapProvenance::User,
        })
    }
}

/// Outcome of a geodesic distance evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicResult {
    /// Energy of the returned curve, the estimate of `d_W(p, q)`.
    pub value: f64,
    pub curve: Polyline,
    /// Euclidean length of `curve`.
    pub length: f64,
    /// Shortest-path value on the certification grid.
    pub lower_estimate: f64,
    /// `value - lower_estimate`.
    pub gap: f64,
    pub certified: bool,
    pub sweeps: usize,
    /// Curve energy after the initial resampling and after every sweep.
    pub energy_trace: Vec<f64>,
    pub cap: Option<TruncationCap>,
}

/// `|∫_p^q 2√W(s) ds|` by composite three-point Gauss quadrature.
pub fn scalar_sigma_oracle<D: PhaseDensity + ?Sized>(density: &D, p: f64, q: f64, panels: usize) -> Result<f64> {
    if density.phase_dim() != 1 {
        return Err(Error::Usage(format!(
            "scalar oracle needs a scalar phase, got dimension {}",
            density.phase_dim()
        )));
    }
    if p == q {
        return Ok(0.0);
    }
    let n = panels.max(1);
    let mut buf = [0.0];
    let mut acc = 0.0;
    let h = (q - p) / n as f64;
    for k in 0..n {
        let a = p + k as f64 * h;
        acc += segment_energy(density, &[a], &[a + h], Quadrature::Gauss3, &mut buf);
    }
    Ok(acc)
}

/// Per-sweep refinement options.
#[derive(Debug, Clone, Copy)]
pub struct RefineOptions {
    pub max_sweeps: usize,
    pub sweep_tol: f64,
    pub quadrature: Quadrature,
    pub golden_iters: usize,
    /// Rounds of collective window moves, each followed by vertex sweeps.
    pub block_rounds: usize,
    /// Longest quadrature panel; longer segments are split.
    pub max_panel: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 200,
            sweep_tol: 1e-12,
            quadrature: Quadrature::Gauss3,
            golden_iters: 24,
            block_rounds: 3,
            max_panel: f64::INFINITY,
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Coordinate descent on interior vertices with golden-section line searches,
/// followed by arc-length re-spacing after every sweep, alternated with
/// collective window moves.
///
/// Returns the energy trace; entries are non-increasing.
pub fn refine<D: PhaseDensity + ?Sized>(density: &D, curve: &mut Polyline, opts: &RefineOptions) -> Vec<f64> {
    let m = curve.dim();
    let quad = opts.quadrature;
    let mut buf = vec![0.0; m];
    let mut energy = curve_energy_paneled(density, curve, quad, opts.max_panel);
    let mut trace = vec![energy];
    if curve.n_vertices() < 3 {
        return trace;
    }
    let mut trial = vec![0.0; m];
    let mut dirs = vec![vec![0.0; m]; m];
    for round in 0..opts.block_rounds + 1 {
        vertex_sweeps(density, curve, opts, &mut energy, &mut trace, &mut buf, &mut trial, &mut dirs);
        if round == opts.block_rounds {
            break;
        }
        let before = energy;
        let snapshot = curve.clone();
        block_pass(density, curve, opts, &mut buf);
        let after = curve_energy_paneled(density, curve, quad, opts.max_panel);
        if after < before {
            energy = after;
            trace.push(energy);
        } else {
            *curve = snapshot;
        }
        if before - energy <= opts.sweep_tol * energy.max(1e-300) {
            break;
        }
    }
    trace
}

#[allow(clippy::too_many_arguments)]
fn vertex_sweeps<D: PhaseDensity + ?Sized>(
    density: &D,
    curve: &mut Polyline,
    opts: &RefineOptions,
    energy: &mut f64,
    trace: &mut Vec<f64>,
    buf: &mut [f64],
    trial: &mut [f64],
    dirs: &mut [Vec<f64>],
) {
    let m = curve.dim();
    let quad = opts.quadrature;
    for _ in 0..opts.max_sweeps {
        let snapshot = curve.clone();
        for k in 1..curve.n_vertices() - 1 {
            let prev = curve.vertex(k - 1).to_vec();
            let next = curve.vertex(k + 1).to_vec();
            let cur = curve.vertex(k).to_vec();
            let (l0, l1) = (dist(&prev, &cur), dist(&cur, &next));
            let step = 0.5 * if l0.min(l1) > 0.0 { l0.min(l1) } else { l0.max(l1) };
            if step == 0.0 {
                continue;
            }
            local_frame(&prev, &next, dirs);
            let mut pos = cur;
            let local = |x: &[f64], buf: &mut [f64]| {
                segment_energy_paneled(density, &prev, x, quad, opts.max_panel, buf)
                    + segment_energy_paneled(density, x, &next, quad, opts.max_panel, buf)
            };
            let mut best = local(&pos, buf);
            for dir in dirs.iter() {
                let eval = |t: f64, buf: &mut [f64], trial: &mut [f64]| {
                    for i in 0..m {
                        trial[i] = pos[i] + t * dir[i];
                    }
                    local(trial, buf)
                };
                let (mut a, mut b) = (-step, step);
                let mut c = b - INV_PHI * (b - a);
                let mut d = a + INV_PHI * (b - a);
                let mut fc = eval(c, buf, trial);
                let mut fd = eval(d, buf, trial);
                for _ in 0..opts.golden_iters {
                    if fc < fd {
                        b = d;
                        d = c;
                        fd = fc;
                        c = b - INV_PHI * (b - a);
                        fc = eval(c, buf, trial);
                    } else {
                        a = c;
                        c = d;
                        fc = fd;
                        d = a + INV_PHI * (b - a);
                        fd = eval(d, buf, trial);
                    }
                }
                let (t, ft) = if fc < fd { (c, fc) } else { (d, fd) };
                if ft < best {
                    best = ft;
                    for i in 0..m {
                        pos[i] += t * dir[i];
                    }
                }
            }
            curve.vertex_mut(k).copy_from_slice(&pos);
        }
        let mut new_energy = curve_energy_paneled(density, curve, quad, opts.max_panel);
        let respaced = curve.resampled(curve.n_vertices());
        let respaced_energy = curve_energy_paneled(density, &respaced, quad, opts.max_panel);
        if respaced_energy <= new_energy {
            *curve = respaced;
            new_energy = respaced_energy;
        }
        if new_energy > *energy {
            // the local decreases were lost to rounding in the global sum
            *curve = snapshot;
            break;
        }
        let gain = *energy - new_energy;
        *energy = new_energy;
        trace.push(new_energy);
        if gain <= opts.sweep_tol * new_energy.max(1e-300) {
            break;
        }
    }
}

/// Moves windows of up to `2w + 1` vertices together, with hat weights, along the
/// normals of the window chord. Single-vertex moves stall where the density
/// vanishes to first order; collective moves do not.
fn block_pass<D: PhaseDensity + ?Sized>(density: &D, curve: &mut Polyline, opts: &RefineOptions, buf: &mut [f64]) {
    let m = curve.dim();
    let quad = opts.quadrature;
    let n = curve.n_vertices();
    let mut dirs = vec![vec![0.0; m]; m];
    let mut w = 2;
    while w <= 16 && 2 * w + 2 < n {
        let mut centre = 1;
        while centre < n - 1 {
            let lo = centre.saturating_sub(w).max(1);
            let hi = (centre + w).min(n - 2);
            let orig: Vec<Vec<f64>> = (lo - 1..=hi + 1).map(|k| curve.vertex(k).to_vec()).collect();
            let weight = |k: usize| 1.0 - (k as f64 - centre as f64).abs() / (w as f64 + 1.0);
            let window_energy = |pts: &[Vec<f64>], buf: &mut [f64]| {
                pts.windows(2)
                    .map(|s| segment_energy_paneled(density, &s[0], &s[1], quad, opts.max_panel, buf))
                    .sum::<f64>()
            };
            local_frame(&orig[0], &orig[orig.len() - 1], &mut dirs);
            let span = dist(&orig[0], &orig[orig.len() - 1]);
            let step = 0.25 * span;
            let mut base = orig.clone();
            let mut best = window_energy(&base, buf);
            let mut trial = base.clone();
            // normals only: tangential block moves are undone by re-spacing
            for dir in dirs.iter().take(m - 1) {
                let mut eval = |t: f64, buf: &mut [f64]| {
                    for k in lo..=hi {
                        let c = t * weight(k);
                        for i in 0..m {
                            trial[k - lo + 1][i] = base[k - lo + 1][i] + c * dir[i];
                        }
                    }
                    window_energy(&trial, buf)
                };
                let (mut a, mut b) = (-step, step);
                let mut c = b - INV_PHI * (b - a);
                let mut d = a + INV_PHI * (b - a);
                let mut fc = eval(c, buf);
                let mut fd = eval(d, buf);
                for _ in 0..opts.golden_iters {
                    if fc < fd {
                        b = d;
                        d = c;
                        fd = fc;
                        c = b - INV_PHI * (b - a);
                        fc = eval(c, buf);
                    } else {
                        a = c;
                        c = d;
                        fc = fd;
                        d = a + INV_PHI * (b - a);
                        fd = eval(d, buf);
                    }
                }
                let (t, ft) = if fc < fd { (c, fc) } else { (d, fd) };
                if ft < best {
                    best = ft;
                    eval(t, buf);
                    base.clone_from(&trial);
                }
                trial.clone_from(&base);
            }
            for k in lo..=hi {
                curve.vertex_mut(k).copy_from_slice(&base[k - lo + 1]);
            }
            centre += w.div_ceil(2);
        }
        w *= 2;
    }
}


/// Orthonormal directions: normals of the chord `next - prev` first, the chord last.
fn local_frame(prev: &[f64], next: &[f64], dirs: &mut [Vec<f64>]) {
    let m = prev.len();
    let mut t: Vec<f64> = next.iter().zip(prev).map(|(a, b)| a - b).collect();
    let nt = norm(&t);
    if nt == 0.0 {
        for (i, d) in dirs.iter_mut().enumerate() {
            d.iter_mut().for_each(|v| *v = 0.0);
            d[i] = 1.0;
        }
        return;
    }
    t.iter_mut().for_each(|v| *v /= nt);
    let mut basis: Vec<Vec<f64>> = vec![t.clone()];
    for axis in 0..m {
        if basis.len() == m {
            break;
        }
        let mut c = vec![0.0; m];
        c[axis] = 1.0;
        for b in &basis {
            let pr = dot(&c, b);
            c.iter_mut().zip(b).for_each(|(x, y)| *x -= pr * y);
        }
        let n = norm(&c);
        if n > 1e-6 {
            c.iter_mut().for_each(|v| *v /= n);
            basis.push(c);
        }
    }
    basis.rotate_left(1);
    for (d, b) in dirs.iter_mut().zip(basis) {
        d.copy_from_slice(&b);
    }
}

/// Two-phase solve: grid shortest path, then polyline refinement and certification.
///
/// Scalar phases bypass the solver through [`scalar_sigma_oracle`].
pub fn geodesic_distance<D: PhaseDensity + ?Sized>(density: &D, query: &GeodesicQuery) -> Result<GeodesicResult> {
    query.validate()?;
    let m = query.p.len();
    if m != density.phase_dim() {
        return Err(Error::Parameter(format!(
            "endpoints have dimension {m}, potential has {}",
            density.phase_dim()
        )));
    }
    if query.p == query.q {
        let curve = Polyline::new(m, [query.p.clone(), query.q.clone()].concat())?;
        return Ok(GeodesicResult {
            value: 0.0,
            curve,
            length: 0.0,
            lower_estimate: 0.0,
            gap: 0.0,
            certified: true,
            sweeps: 0,
            energy_trace: vec![0.0],
            cap: None,
        });
    }
    if m == 1 {
        return scalar_geodesic(density, query);
    }
    if m > 3 {
        return Err(Error::Usage("geodesics are supported for phase dimension at most 3".into()));
    }
    let (lo, hi) = query.search_box();
    let grid = PhaseGrid::with_nodes(&lo, &hi, query.grid_nodes)?;
    for (name, pt) in [("p", &query.p), ("q", &query.q)] {
        if !grid.contains(pt) {
            return Err(Error::Domain(format!("endpoint {name}={pt:?} outside the search box")));
        }
    }
    let s = grid.nearest(&query.p);
    let t = grid.nearest(&query.q);
    let field = dijkstra(density, &grid, query.stencil, &[(s, 0.0)], Some(t));
    let mut pts: Vec<Vec<f64>> = vec![query.p.clone()];
    for idx in field.path_to(t) {
        let node = grid.node(idx);
        if dist(&node, pts.last().unwrap()) > 1e-12 * grid.spacing() && node != query.q {
            pts.push(node);
        }
    }
    pts.push(query.q.clone());
    let raw = Polyline::from_points(&pts)?;
    let vertices = query
        .vertices
        .unwrap_or_else(|| ((raw.length() / grid.spacing()).round() as usize + 1).clamp(33, 20_000));
    let mut curve = raw.resampled(vertices);
    let opts = RefineOptions {
        max_sweeps: query.max_sweeps,
        sweep_tol: query.sweep_tol,
        quadrature: query.quadrature,
        max_panel: grid.spacing(),
        ..Default::default()
    };
    let trace = refine(density, &mut curve, &opts);
    let value = *trace.last().unwrap();

    let cert_grid = grid.refined(query.cert_refine);
    let (cs, ct) = (cert_grid.nearest(&query.p), cert_grid.nearest(&query.q));
    let cert = dijkstra(density, &cert_grid, query.cert_stencil, &[(cs, 0.0)], Some(ct));
    let lower = cert.dist[ct];
    let gap = value - lower;
    Ok(GeodesicResult {
        value,
        length: curve.length(),
        curve,
        lower_estimate: lower,
        gap,
        certified: gap <= query.eps_cert,
        sweeps: trace.len() - 1,
        energy_trace: trace,
        cap: None,
    })
}

fn scalar_geodesic<D: PhaseDensity + ?Sized>(density: &D, query: &GeodesicQuery) -> Result<GeodesicResult> {
    let (p, q) = (query.p[0], query.q[0]);
    let value = scalar_sigma_oracle(density, p, q, query.scalar_panels)?;
    let coarse = scalar_sigma_oracle(density, p, q, (query.scalar_panels / 2).max(1))?;
    let curve = Polyline::straight(&query.p, &query.q, query.vertices.unwrap_or(256).max(2) - 1)?;
    let gap = (value - coarse).abs();
    Ok(GeodesicResult {
        value,
        length: (q - p).abs(),
        curve,
        lower_estimate: value - gap,
        gap,
        certified: gap <= query.eps_cert,
        sweeps: 0,
        energy_trace: vec![value],
        cap: None,
    })
}

/// Geodesic distance for `min{W, M}`.
pub fn truncated_distance<D: PhaseDensity>(density: &D, query: &GeodesicQuery, cap: TruncationCap) -> Result<GeodesicResult> {
    if !(cap.level > 0.0) {
        return Err(Error::Parameter("truncation level must be positive".into()));
    }
    let capped = Capped {
        inner: density,
        cap: cap.level,
    };
    let mut r = geodesic_distance(&capped, query)?;
    r.cap = Some(cap);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::FnDensity;

    fn quartic(a: f64) -> impl PhaseDensity {
        FnDensity::new(1, move |u: &[f64]| (u[0] * u[0] - a * a).powi(2))
    }

    fn quartic_2d() -> impl PhaseDensity {
        FnDensity::new(2, |u: &[f64]| {
            let dm = (u[0] - 1.0).powi(2) + u[1] * u[1];
            let dp = (u[0] + 1.0).powi(2) + u[1] * u[1];
            dm * dp
        })
    }

    #[test]
    fn scalar_oracle_examples() {
        assert_eq!(scalar_sigma_oracle(&quartic(1.0), 0.3, 0.3, 10).unwrap(), 0.0);
        let s = scalar_sigma_oracle(&quartic(1.0), -1.0, 1.0, 1000).unwrap();
        assert!((s - 8.0 / 3.0).abs() < 1e-12);
        let s = scalar_sigma_oracle(&quartic(1.25), 1.25, -1.25, 1000).unwrap();
        assert!((s - 8.0 / 3.0 * 1.25f64.powi(3)).abs() < 1e-10);
        assert!(matches!(
            scalar_sigma_oracle(&quartic_2d(), 0.0, 1.0, 10),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn identical_endpoints_cost_nothing() {
        let r = geodesic_distance(&quartic_2d(), &GeodesicQuery::new(vec![0.3, 0.2], vec![0.3, 0.2])).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.length, 0.0);
    }

    #[test]
    fn planar_quartic_between_wells() {
        let q = GeodesicQuery::new(vec![-1.0, 0.0], vec![1.0, 0.0]);
        let r = geodesic_distance(&quartic_2d(), &q).unwrap();
        assert!((r.value - 8.0 / 3.0).abs() < 1e-3, "{r:?}");
        assert!(r.certified, "gap {}", r.gap);
        assert_eq!(r.curve.first(), &[-1.0, 0.0]);
        assert_eq!(r.curve.last(), &[1.0, 0.0]);
        for w in r.energy_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn refinement_straightens_a_bent_curve() {
        let d = quartic_2d();
        let mut c = crate::geodesics::polar_arc(&[-1.0, 1e-9], &[1.0, 0.0], 16).unwrap();
        let before = super::super::polyline::curve_energy(&d, &c, Quadrature::Gauss3);
        let opts = RefineOptions {
            max_sweeps: 5000,
            ..Default::default()
        };
        let trace = refine(&d, &mut c, &opts);
        assert!(before > 3.0);
        assert!(*trace.last().unwrap() < 8.0 / 3.0 + 1e-3, "{trace:?}");
        for w in trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn endpoints_outside_box_are_rejected() {
        let mut q = GeodesicQuery::new(vec![-1.0, 0.0], vec![3.0, 0.0]);
        q.box_radius = 2.0;
        assert!(matches!(geodesic_distance(&quartic_2d(), &q), Err(Error::Domain(_))));
    }

    #[test]
    fn truncation_examples() {
        let q = GeodesicQuery::new(vec![-1.0, 0.0], vec![1.0, 0.0]);
        let full = geodesic_distance(&quartic_2d(), &q).unwrap();
        let capped = truncated_distance(&quartic_2d(), &q, TruncationCap::user(10.0).unwrap()).unwrap();
        assert!((full.value - capped.value).abs() <= 2.0 * q.eps_cert);
        let tiny = truncated_distance(&quartic_2d(), &q, TruncationCap::user(1e-8).unwrap()).unwrap();
        assert!(tiny.value < 1e-3);
        assert!(TruncationCap::user(0.0).is_err());
    }

    #[test]
    fn three_dimensional_phase() {
        let d = FnDensity::new(3, |u: &[f64]| {
            let dm = (u[0] - 1.0).powi(2) + u[1] * u[1] + u[2] * u[2];
            let dp = (u[0] + 1.0).powi(2) + u[1] * u[1] + u[2] * u[2];
            dm.min(dp)
        });
        let mut q = GeodesicQuery::new(vec![-1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]);
        q.grid_nodes = 21;
        q.box_radius = 1.5;
        let r = geodesic_distance(&d, &q).unwrap();
        assert!((r.value - 2.0).abs() < 1e-2, "{}", r.value);
    }
}
