use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::PhaseDensity;

/// Uniform grid over an axis-aligned box in phase space (dimension 2 or 3).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    m: usize,
    lower: [f64; 3],
    h: f64,
    n: [usize; 3],
}

impl PhaseGrid {
    /// Grid of spacing `h` starting at `lower`, extended so that it covers `upper`.
    pub fn new(lower: &[f64], upper: &[f64], h: f64) -> Result<Self> {
        let m = lower.len();
        if !(2..=3).contains(&m) || upper.len() != m {
            return Err(Error::Usage(format!(
                "phase grids need dimension 2 or 3, got {m}"
            )));
        }
        if !(h > 0.0) || lower.iter().zip(upper).any(|(l, u)| !(u > l)) {
            return Err(Error::Parameter("empty phase grid box".into()));
        }
        let mut lo = [0.0; 3];
        let mut n = [1usize; 3];
        for i in 0..m {
            lo[i] = lower[i];
            n[i] = ((upper[i] - lower[i]) / h - 1e-9).ceil() as usize + 1;
        }
        if n.iter().product::<usize>() > 60_000_000 {
            return Err(Error::Parameter("phase grid too large".into()));
        }
        Ok(Self { m, lower: lo, h, n })
    }

    /// Grid with `nodes` points along the widest axis of the box.
    pub fn with_nodes(lower: &[f64], upper: &[f64], nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::Parameter("phase grid needs at least two nodes per axis".into()));
        }
        let width = lower
            .iter()
            .zip(upper)
            .map(|(l, u)| u - l)
            .fold(0.0, f64::max);
        Self::new(lower, upper, width / (nodes - 1) as f64)
    }

    /// The same box at `factor` times the resolution.
    pub fn refined(&self, factor: usize) -> Self {
        let f = factor.max(1);
        let mut n = self.n;
        for v in n.iter_mut().take(self.m) {
            *v = (*v - 1) * f + 1;
        }
        Self {
            m: self.m,
            lower: self.lower,
            h: self.h / f as f64,
            n,
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> &[usize] {
        &self.n[..self.m]
    }

    pub fn len(&self) -> usize {
        self.n[..self.m].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.m]
    }

    pub fn upper(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| self.lower[i] + (self.n[i] - 1) as f64 * self.h)
            .collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        let up = self.upper();
        let slack = 1e-12 * (1.0 + self.h);
        p.iter()
            .zip(self.lower())
            .zip(&up)
            .all(|((v, l), u)| *v >= l - slack && *v <= u + slack)
    }

    #[inline]
    fn index(&self, c: [usize; 3]) -> usize {
        (c[2] * self.n[1] + c[1]) * self.n[0] + c[0]
    }

    #[inline]
    fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.n[0];
        let r = idx / self.n[0];
        [i, r % self.n[1], r / self.n[1]]
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        let c = self.coords(idx);
        (0..self.m)
            .map(|i| self.lower[i] + c[i] as f64 * self.h)
            .collect()
    }

    #[inline]
    fn node_into(&self, c: [usize; 3], out: &mut [f64; 3]) {
        for i in 0..3 {
            out[i] = self.lower[i] + c[i] as f64 * self.h;
        }
    }

    pub fn nearest(&self, p: &[f64]) -> usize {
        let mut c = [0usize; 3];
        for i in 0..self.m {
            let k = ((p[i] - self.lower[i]) / self.h).round();
            c[i] = (k.max(0.0) as usize).min(self.n[i] - 1);
        }
        self.index(c)
    }

    /// Multilinear interpolation of nodal `values` at `p` (clamped to the box).
    pub fn interpolate(&self, values: &[f64], p: &[f64]) -> f64 {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for i in 0..self.m {
            let x = ((p[i] - self.lower[i]) / self.h).clamp(0.0, (self.n[i] - 1) as f64);
            let k = (x.floor() as usize).min(self.n[i].saturating_sub(2));
            base[i] = k;
            frac[i] = x - k as f64;
        }
        let corners = 1usize << self.m;
        let mut acc = 0.0;
        for corner in 0..corners {
            let mut c = base;
            let mut w = 1.0;
            for i in 0..self.m {
                if corner >> i & 1 == 1 {
                    c[i] += 1;
                    w *= frac[i];
                } else {
                    w *= 1.0 - frac[i];
                }
            }
            if w != 0.0 {
                acc += w * values[self.index(c)];
            }
        }
        acc
    }
}

/// Neighbourhood used by the shortest-path initialisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    /// 8 neighbours in the plane, 6 in space.
    #[default]
    Basic,
    /// 16 neighbours in the plane (adds knight moves), 26 in space.
    Extended,
}

fn offsets(m: usize, stencil: Stencil) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    match (m, stencil) {
        (2, Stencil::Basic) => {
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if (dx, dy) != (0, 0) {
                        out.push([dx, dy, 0]);
                    }
                }
            }
        }
        (2, Stencil::Extended) => {
            for dx in -2i64..=2 {
                for dy in -2i64..=2 {
                    let cheb = dx.abs().max(dy.abs());
                    let coprime = gcd(dx.unsigned_abs(), dy.unsigned_abs()) == 1;
                    if cheb >= 1 && coprime {
                        out.push([dx, dy, 0]);
                    }
                }
            }
        }
        (_, Stencil::Basic) => {
            for i in 0..3 {
                for s in [-1, 1] {
                    let mut o = [0; 3];
                    o[i] = s;
                    out.push(o);
                }
            }
        }
        (_, Stencil::Extended) => {
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if (dx, dy, dz) != (0, 0, 0) {
                            out.push([dx, dy, dz]);
                        }
                    }
                }
            }
        }
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Copy)]
struct Item(f64, u32);

impl PartialEq for Item {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

/// Shortest-path distances from a set of seeded nodes.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub grid: PhaseGrid,
    pub dist: Vec<f64>,
    pred: Vec<u32>,
}

const NO_PRED: u32 = u32::MAX;

impl DistanceField {
    /// Node indices from a source to `target` (inclusive).
    pub fn path_to(&self, target: usize) -> Vec<usize> {
        let mut path = vec![target];
        let mut cur = target;
        while self.pred[cur] != NO_PRED {
            cur = self.pred[cur] as usize;
            path.push(cur);
        }
        path.reverse();
        path
    }

    pub fn value_at(&self, p: &[f64]) -> f64 {
        self.grid.interpolate(&self.dist, p)
    }
}

/// Dijkstra on the grid graph with edge cost `2√W(midpoint) · |edge|`.
///
/// `sources` seeds nodes with initial costs. With a `target` the search stops
/// as soon as that node is settled; unsettled nodes keep tentative values.
pub fn dijkstra<D: PhaseDensity + ?Sized>(
    density: &D,
    grid: &PhaseGrid,
    stencil: Stencil,
    sources: &[(usize, f64)],
    target: Option<usize>,
) -> DistanceField {
    let m = grid.dim();
    let offs = offsets(m, stencil);
    let lens: Vec<f64> = offs
        .iter()
        .map(|o| grid.h * ((o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) as f64).sqrt())
        .collect();
    let len = grid.len();
    let mut dist = vec![f64::INFINITY; len];
    let mut pred = vec![NO_PRED; len];
    let mut done = vec![false; len];
    let mut heap = BinaryHeap::new();
    for &(s, c) in sources {
        if c < dist[s] {
            dist[s] = c;
            heap.push(Item(c, s as u32));
        }
    }
    let n = grid.n;
    let mut a = [0.0; 3];
    let mut mid = [0.0; 3];
    while let Some(Item(d, u)) = heap.pop() {
        let u = u as usize;
        if done[u] {
            continue;
        }
        done[u] = true;
        if Some(u) == target {
            break;
        }
        let cu = grid.coords(u);
        grid.node_into(cu, &mut a);
        for (o, l) in offs.iter().zip(&lens) {
            let mut cv = [0usize; 3];
            let mut ok = true;
            for i in 0..3 {
                let v = cu[i] as i64 + o[i];
                if v < 0 || v >= n[i] as i64 {
                    ok = false;
                    break;
                }
                cv[i] = v as usize;
            }
            if !ok {
                continue;
            }
            let v = grid.index(cv);
            if done[v] {
                continue;
            }
            for i in 0..3 {
                mid[i] = a[i] + 0.5 * o[i] as f64 * grid.h;
            }
            let nd = d + l * density.weight(&mid[..m]);
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = u as u32;
                heap.push(Item(nd, v as u32));
            }
        }
    }
    DistanceField {
        grid: grid.clone(),
        dist,
        pred,
    }
}
