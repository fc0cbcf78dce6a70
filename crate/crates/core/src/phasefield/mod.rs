//! Grid discretization of the ε-phase-field energy, its minimization by projected
//! gradient descent, and the recovery and mass-correction constructions.

mod energy;
pub mod io;
mod minimize;
mod recovery;

pub use energy::{energy_eps, gradient_eps, locate_interface, Discretization, EnergyParts};
pub use minimize::{minimize, MassConstraint, MinimizeReport, PhaseFieldConfig, StepRule, Termination};
pub use recovery::{
    build_recovery_1d, build_recovery_flat, bump_constant, mass_correction_bump, BumpResult, Recovery,
    RecoveryConfig,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecmath::all_finite;

/// Uniform node grid on an interval or an axis-aligned rectangle, endpoints included.
///
/// Nodes are ordered with the first axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    n: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SpaceGrid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        let d = lower.len();
        if !(1..=2).contains(&d) || upper.len() != d || n.len() != d {
            return Err(Error::Parameter("grids are 1-D or 2-D with matching bounds".into()));
        }
        if n.iter().any(|&k| k < 2) {
            return Err(Error::Parameter("grids need at least two nodes per axis".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(u > l) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::Parameter("grid bounds must be finite with lower < upper".into()));
        }
        Ok(Self { n, lower, upper })
    }

    pub fn line(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![lo], vec![hi], vec![n])
    }

    pub fn rect(lo: [f64; 2], hi: [f64; 2], n: [usize; 2]) -> Result<Self> {
        Self::new(lo.to_vec(), hi.to_vec(), n.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.n
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn spacing(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| (self.upper[k] - self.lower[k]) / (self.n[k] - 1) as f64)
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    /// Coordinate of node `i` along `axis`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.n[axis] {
            return self.upper[axis];
        }
        let h = (self.upper[axis] - self.lower[axis]) / (self.n[axis] - 1) as f64;
        self.lower[axis] + i as f64 * h
    }

    /// Per-axis indices of flat node `idx`.
    pub fn split_index(&self, idx: usize) -> [usize; 2] {
        let nx = self.n[0];
        [idx % nx, idx / nx]
    }

    pub fn node_into(&self, idx: usize, out: &mut [f64]) {
        let ij = self.split_index(idx);
        for (k, o) in out.iter_mut().enumerate().take(self.dim()) {
            *o = self.coord(k, ij[k]);
        }
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.node_into(idx, &mut out);
        out
    }

    fn axis_weights(&self, axis: usize) -> Vec<f64> {
        let n = self.n[axis];
        let h = (self.upper[axis] - self.lower[axis]) / (n - 1) as f64;
        let mut w = vec![h; n];
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
        w
    }

    /// Trapezoid quadrature weights; they sum to the volume.
    pub fn weights(&self) -> Vec<f64> {
        let wx = self.axis_weights(0);
        if self.dim() == 1 {
            return wx;
        }
        let wy = self.axis_weights(1);
        let mut w = Vec::with_capacity(self.len());
        for y in &wy {
            w.extend(wx.iter().map(|x| x * y));
        }
        w
    }

    /// Forward-difference edges `(i, j, c)` such that `Σ c |u_j - u_i|²`
    /// approximates `∫ |∇u|²`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let h = self.spacing();
        let nx = self.n[0];
        if self.dim() == 1 {
            return (0..nx - 1).map(|i| (i, i + 1, 1.0 / h[0])).collect();
        }
        let ny = self.n[1];
        let (wx, wy) = (self.axis_weights(0), self.axis_weights(1));
        let mut e = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let idx = i + nx * j;
                if i + 1 < nx {
                    e.push((idx, idx + 1, wy[j] / h[0]));
                }
                if j + 1 < ny {
                    e.push((idx, idx + nx, wx[i] / h[1]));
                }
            }
        }
        e
    }

    /// Nodes on the boundary of the box, in increasing index order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let nx = self.n[0];
        if self.dim() == 1 {
            return vec![0, nx - 1];
        }
        let ny = self.n[1];
        (0..self.len())
            .filter(|&idx| {
                let (i, j) = (idx % nx, idx / nx);
                i == 0 || j == 0 || i + 1 == nx || j + 1 == ny
            })
            .collect()
    }

    /// The same box with `factor`-times finer spacing.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n: self.n.iter().map(|&k| (k - 1) * factor.max(1) + 1).collect(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }
}

/// Boundary treatment of a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    Free,
    /// Values held at the boundary nodes, listed in [`SpaceGrid::boundary_nodes`] order.
    Fixed { trace: Vec<f64> },
}

/// Phase field `u: Ω → ℝ^M` sampled at grid nodes (node-major, `M` values per node).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid: SpaceGrid,
    m: usize,
    values: Vec<f64>,
    boundary: Boundary,
}

impl Field {
    pub fn new(grid: SpaceGrid, m: usize, values: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if m == 0 || values.len() != m * grid.len() {
            return Err(Error::Parameter(format!(
                "field needs {} values, got {}",
                m * grid.len(),
                values.len()
            )));
        }
        if !all_finite(&values) {
            return Err(Error::Parameter("field values must be finite".into()));
        }
        if let Boundary::Fixed { trace } = &boundary {
            if trace.len() != m * grid.boundary_nodes().len() || !all_finite(trace) {
                return Err(Error::Parameter("fixed trace does not match the boundary".into()));
            }
        }
        let mut f = Self { grid, m, values, boundary };
        f.enforce_trace();
        Ok(f)
    }

    pub fn from_fn(grid: SpaceGrid, m: usize, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(m * grid.len());
        for idx in 0..grid.len() {
            let v = f(&grid.node(idx));
            if v.len() != m {
                return Err(Error::Parameter("field initializer has the wrong phase dimension".into()));
            }
            values.extend(v);
        }
        Self::new(grid, m, values, Boundary::Free)
    }

    pub fn constant(grid: SpaceGrid, value: &[f64]) -> Result<Self> {
        Self::from_fn(grid, value.len(), |_| value.to_vec())
    }

    /// Freezes the current boundary values as a fixed trace.
    pub fn with_fixed_trace(mut self) -> Self {
        let m = self.m;
        let trace = self
            .grid
            .boundary_nodes()
            .iter()
            .flat_map(|&i| self.values[i * m..(i + 1) * m].to_vec())
            .collect();
        self.boundary = Boundary::Fixed { trace };
        self
    }

    pub fn into_free(mut self) -> Self {
        self.boundary = Boundary::Free;
        self
    }

    pub fn phase_dim(&self) -> usize {
        self.m
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self.boundary, Boundary::Fixed { .. })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.m..(idx + 1) * self.m]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Writes the fixed trace back onto the boundary nodes.
    pub(crate) fn enforce_trace(&mut self) {
        if let Boundary::Fixed { trace } = &self.boundary {
            let m = self.m;
            for (k, &i) in self.grid.boundary_nodes().iter().enumerate() {
                self.values[i * m..(i + 1) * m].copy_from_slice(&trace[k * m..(k + 1) * m]);
            }
        }
    }

    /// Mask of nodes that may move.
    pub fn free_mask(&self) -> Vec<bool> {
        let mut mask = vec![true; self.grid.len()];
        if self.is_fixed() {
            for i in self.grid.boundary_nodes() {
                mask[i] = false;
            }
        }
        mask
    }

    /// Mean value `(1/|Ω|) ∫ u` by the trapezoid rule.
    pub fn mean(&self) -> Vec<f64> {
        let w = self.grid.weights();
        let mut s = vec![0.0; self.m];
        for (i, wi) in w.iter().enumerate() {
            for (k, sk) in s.iter_mut().enumerate() {
                *sk += wi * self.values[i * self.m + k];
            }
        }
        let vol = self.grid.volume();
        s.iter().map(|v| v / vol).collect()
    }

    /// Weighted inner product `Σ w_i ⟨u_i, v_i⟩` of two node-major arrays.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let w = self.grid.weights();
        let m = self.m;
        w.iter()
            .enumerate()
            .map(|(i, wi)| wi * (0..m).map(|k| a[i * m + k] * b[i * m + k]).sum::<f64>())
            .sum()
    }
}
