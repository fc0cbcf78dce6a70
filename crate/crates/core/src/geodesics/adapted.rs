use serde::{Deserialize, Serialize};

use super::grid::{dijkstra, PhaseGrid};
use super::solver::{geodesic_distance, scalar_sigma_oracle, GeodesicQuery};
use crate::error::{Error, Result};
use crate::potentials::PhaseDensity;

/// Search region for the connecting point of the adapted distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptedSearch {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Grid nodes along the widest axis.
    pub nodes: usize,
    /// Golden-section iterations per axis in the local refinement.
    pub refine_iters: usize,
    /// Settings of the geodesic solves used by the refinement (phase dimension ≥ 2).
    pub solver: GeodesicQuery,
}

impl Default for AdaptedSearch {
    fn default() -> Self {
        Self {
            lower: Vec::new(),
            upper: Vec::new(),
            nodes: 401,
            refine_iters: 40,
            solver: GeodesicQuery::default(),
        }
    }
}

impl AdaptedSearch {
    /// Cube `[-radius, radius]^m`.
    pub fn ball(m: usize, radius: f64) -> Self {
        Self {
            lower: vec![-radius; m],
            upper: vec![radius; m],
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptedResult {
    pub value: f64,
    /// Connecting point `r*`.
    pub connector: Vec<f64>,
    /// Number of candidate connecting points evaluated.
    pub candidates: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// `inf_r d_{W_i}(p, r) + d_{W_j}(r, q)`: grid search followed by a local
/// golden-section refinement of the best connecting point.
///
/// The returned value is the smallest sum among all evaluated candidates,
/// which always include `p` and `q`.
pub fn adapted_distance<A, B>(
    wi: &A,
    wj: &B,
    p: &[f64],
    q: &[f64],
    search: &AdaptedSearch,
) -> Result<AdaptedResult>
where
    A: PhaseDensity + ?Sized,
    B: PhaseDensity + ?Sized,
{
    let m = p.len();
    if q.len() != m || wi.phase_dim() != m || wj.phase_dim() != m {
        return Err(Error::Parameter("adapted distance: dimension mismatch".into()));
    }
    if search.nodes < 2 || search.lower.len() != m || search.upper.len() != m {
        return Err(Error::Parameter("adapted distance: empty search grid".into()));
    }
    if search.lower.iter().zip(&search.upper).any(|(l, u)| !(u > l)) {
        return Err(Error::Parameter("adapted distance: empty search grid".into()));
    }
    if m == 1 {
        scalar_adapted(wi, wj, p[0], q[0], search)
    } else {
        planar_adapted(wi, wj, p, q, search)
    }
}

fn scalar_adapted<A, B>(wi: &A, wj: &B, p: f64, q: f64, search: &AdaptedSearch) -> Result<AdaptedResult>
where
    A: PhaseDensity + ?Sized,
    B: PhaseDensity + ?Sized,
{
    let panels = search.solver.scalar_panels;
    let (lo, hi) = (search.lower[0], search.upper[0]);
    let leg = |r: f64| -> Result<f64> {
        let span = ((r - p).abs() + (q - r).abs()).max(1e-300);
        let np = ((panels as f64 * (r - p).abs() / span).ceil() as usize).max(8);
        let nq = ((panels as f64 * (q - r).abs() / span).ceil() as usize).max(8);
        Ok(scalar_sigma_oracle(wi, p, r, np)? + scalar_sigma_oracle(wj, r, q, nq)?)
    };
    let mut best = (f64::INFINITY, p);
    let mut count = 0usize;
    let mut consider = |r: f64, v: f64, best: &mut (f64, f64)| {
        count += 1;
        if v < best.0 {
            *best = (v, r);
        }
    };
    for r in [p, q] {
        consider(r, leg(r)?, &mut best);
    }
    let n = search.nodes;
    let h = (hi - lo) / (n - 1) as f64;
    for k in 0..n {
        let r = lo + k as f64 * h;
        consider(r, leg(r)?, &mut best);
    }
    let (mut a, mut b) = (best.1 - h, best.1 + h);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (leg(c)?, leg(d)?);
    consider(c, fc, &mut best);
    consider(d, fd, &mut best);
    for _ in 0..search.refine_iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = leg(c)?;
            consider(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = leg(d)?;
            consider(d, fd, &mut best);
        }
    }
    Ok(AdaptedResult {
        value: best.0,
        connector: vec![best.1],
        candidates: count,
    })
}

fn planar_adapted<A, B>(wi: &A, wj: &B, p: &[f64], q: &[f64], search: &AdaptedSearch) -> Result<AdaptedResult>
where
    A: PhaseDensity + ?Sized,
    B: PhaseDensity + ?Sized,
{
    let grid = PhaseGrid::with_nodes(&search.lower, &search.upper, search.nodes)?;
    if !grid.contains(p) || !grid.contains(q) {
        return Err(Error::Domain("adapted distance: endpoints outside the search grid".into()));
    }
    let fi = dijkstra(wi, &grid, search.solver.stencil, &[(grid.nearest(p), 0.0)], None);
    let fj = dijkstra(wj, &grid, search.solver.stencil, &[(grid.nearest(q), 0.0)], None);
    let mut best_node = 0;
    let mut best_sum = f64::INFINITY;
    for k in 0..grid.len() {
        let s = fi.dist[k] + fj.dist[k];
        if s < best_sum {
            best_sum = s;
            best_node = k;
        }
    }
    let solver = search.solver.clone();
    let exact = |r: &[f64]| -> Result<f64> {
        let a = geodesic_distance(wi, &solver.with_endpoints(p, r))?.value;
        let b = geodesic_distance(wj, &solver.with_endpoints(r, q))?.value;
        Ok(a + b)
    };
    let mut count = grid.len();
    let mut best = (best_sum, grid.node(best_node));
    for r in [p, q] {
        let v = exact(r)?;
        count += 1;
        if v < best.0 {
            best = (v, r.to_vec());
        }
    }
    // local refinement around the best grid node, one axis at a time
    let mut center = grid.node(best_node);
    let mut fcenter = exact(&center)?;
    count += 1;
    if fcenter < best.0 {
        best = (fcenter, center.clone());
    }
    let h = grid.spacing();
    let iters = search.refine_iters.min(16);
    for axis in 0..p.len() {
        let at = |t: f64, c: &[f64]| {
            let mut r = c.to_vec();
            r[axis] += t;
            r
        };
        let (mut a, mut b) = (-h, h);
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = exact(&at(c, &center))?;
        let mut fd = exact(&at(d, &center))?;
        count += 2;
        for _ in 0..iters {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = exact(&at(c, &center))?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = exact(&at(d, &center))?;
            }
            count += 1;
        }
        let (t, ft) = if fc < fd { (c, fc) } else { (d, fd) };
        if ft < fcenter {
            center = at(t, &center);
            fcenter = ft;
        }
        if fcenter < best.0 {
            best = (fcenter, center.clone());
        }
    }
    Ok(AdaptedResult {
        value: best.0,
        connector: best.1,
        candidates: count,
    })
}
