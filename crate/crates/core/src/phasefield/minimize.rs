use serde::{Deserialize, Serialize};

use super::energy::Discretization;
use super::Field;
use crate::error::{Error, Result};
use crate::potentials::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum StepRule {
    /// Constant trial step, halved until the energy does not increase.
    Fixed { step: f64 },
    /// Barzilai–Borwein trial step with Armijo backtracking.
    Backtracking {
        initial: f64,
        shrink: f64,
        armijo: f64,
        max_backtracks: usize,
    },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Backtracking {
            initial: 1e-6,
            shrink: 0.5,
            armijo: 1e-4,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseFieldConfig {
    pub eps: f64,
    pub step: StepRule,
    pub max_iters: usize,
    /// Stop once an accepted step lowers the energy by less than this, relative.
    pub energy_tol: f64,
}

impl Default for PhaseFieldConfig {
    fn default() -> Self {
        Self {
            eps: 0.01,
            step: StepRule::default(),
            max_iters: 2000,
            energy_tol: 1e-12,
        }
    }
}

impl PhaseFieldConfig {
    pub fn new(eps: f64) -> Self {
        Self { eps, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.eps > 0.0
            && self.energy_tol > 0.0
            && match self.step {
                StepRule::Fixed { step } => step > 0.0,
                StepRule::Backtracking { initial, shrink, armijo, .. } => {
                    initial > 0.0 && shrink > 0.0 && shrink < 1.0 && armijo > 0.0 && armijo < 1.0
                }
            };
        if !ok {
            return Err(Error::Parameter("invalid phase-field minimizer settings".into()));
        }
        Ok(())
    }
}

/// Prescribed mean value `m = (1/|Ω|) ∫ u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassConstraint {
    pub target: Vec<f64>,
}

impl MassConstraint {
    pub fn new(target: Vec<f64>) -> Self {
        Self { target }
    }

    /// `max_k |mean(u)_k - m_k|`.
    pub fn residual(&self, u: &Field) -> f64 {
        u.mean()
            .iter()
            .zip(&self.target)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Checks that the target lies between the averages of the two wells.
    pub fn check_reachable(&self, u: &Field, pot: &Potential) -> Result<()> {
        let m = u.phase_dim();
        if self.target.len() != m || !self.target.iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter("mass target has the wrong dimension".into()));
        }
        let disc = Discretization::new(pot, &u.grid)?;
        let vol = u.grid.volume();
        let mut avg = vec![0.0; m];
        for (i, w) in disc.weights().iter().enumerate() {
            for k in 0..m {
                avg[k] += w * disc.well(i)[k] / vol;
            }
        }
        let reachable = if m == 1 {
            self.target[0].abs() <= avg[0].abs() * (1.0 + 1e-12)
        } else {
            let t: f64 = self.target.iter().map(|v| v * v).sum::<f64>().sqrt();
            let a: f64 = avg.iter().map(|v| v * v).sum::<f64>().sqrt();
            t <= a * (1.0 + 1e-12)
        };
        if !reachable {
            return Err(Error::Parameter(format!(
                "mass target {:?} is not between the well averages ±{avg:?}",
                self.target
            )));
        }
        Ok(())
    }

    /// Affine mean shift on the free nodes so that the mean equals the target.
    pub fn project(&self, u: &mut Field) -> Result<()> {
        let m = u.phase_dim();
        if self.target.len() != m {
            return Err(Error::Parameter("mass target has the wrong dimension".into()));
        }
        let w = u.grid.weights();
        let mask = u.free_mask();
        let vol = u.grid.volume();
        let wfree: f64 = w.iter().zip(&mask).filter(|(_, &f)| f).map(|(w, _)| w).sum();
        if !(wfree > 0.0) {
            return Err(Error::Parameter("no free nodes to carry the mass constraint".into()));
        }
        for _ in 0..2 {
            let mean = u.mean();
            let vals = u.values_mut();
            for k in 0..m {
                let shift = (self.target[k] - mean[k]) * vol / wfree;
                for (i, &f) in mask.iter().enumerate() {
                    if f {
                        vals[i * m + k] += shift;
                    }
                }
            }
        }
        Ok(())
    }

    fn project_direction(&self, d: &mut [f64], weights: &[f64], mask: &[bool], m: usize) {
        let wfree: f64 = weights.iter().zip(mask).filter(|(_, &f)| f).map(|(w, _)| w).sum();
        for k in 0..m {
            let s: f64 = weights.iter().enumerate().map(|(i, w)| w * d[i * m + k]).sum();
            let shift = s / wfree;
            for (i, &f) in mask.iter().enumerate() {
                if f {
                    d[i * m + k] -= shift;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Energy decrease or gradient below tolerance.
    Converged,
    MaxIterations,
    /// No decreasing step was found after exhausting backtracking.
    Stalled,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iterations",
            Termination::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeReport {
    pub field: Field,
    /// Energy of every iterate, starting with the initial field.
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
    /// Mass residual of every iterate; empty without a constraint.
    pub residual_trace: Vec<f64>,
    pub reason: Termination,
}

impl MinimizeReport {
    pub fn energy(&self) -> f64 {
        *self.energy_trace.last().unwrap()
    }
}

/// Projected gradient descent on the discrete energy. Every accepted iterate has
/// energy no larger than its predecessor.
pub fn minimize(
    u0: &Field,
    pot: &Potential,
    cfg: &PhaseFieldConfig,
    constraint: Option<&MassConstraint>,
) -> Result<MinimizeReport> {
    cfg.validate()?;
    let disc = Discretization::new(pot, &u0.grid)?;
    let m = u0.phase_dim();
    if m != pot.phase_dim() {
        return Err(Error::Domain("field and potential phase dimensions differ".into()));
    }
    if let Some(c) = constraint {
        c.check_reachable(u0, pot)?;
        let r = c.residual(u0);
        if r > 1e-10 {
            return Err(Error::Parameter(format!("initial field violates the mass constraint by {r:e}")));
        }
    }
    let eps = cfg.eps;
    let weights = disc.weights().to_vec();
    let mask = u0.free_mask();
    let mut u = u0.clone();
    let mut energy = disc.energy(u.values(), eps);
    let mut energy_trace = vec![energy];
    let mut residual_trace = Vec::new();
    if let Some(c) = constraint {
        residual_trace.push(c.residual(&u));
    }
    let n = u.values().len();
    let mut g = vec![0.0; n];
    let mut g_prev = vec![0.0; n];
    let mut trial = u.clone();
    let mut prev_step: Option<f64> = None;
    let mut have_prev = false;
    let mut s_dot_s = 0.0;
    let mut reason = Termination::MaxIterations;
    let mut iterations = 0;

    let project_grad = |g: &mut [f64]| {
        if let Some(c) = constraint {
            c.project_direction(g, &weights, &mask, m);
        }
    };
    disc.gradient_into(u.values(), eps, &mask, &mut g);
    project_grad(&mut g);

    for _ in 0..cfg.max_iters {
        let gnorm2 = u.inner(&g, &g);
        if !(gnorm2 > 1e-300) || energy == 0.0 {
            reason = Termination::Converged;
            break;
        }
        let mut step = match cfg.step {
            StepRule::Fixed { step } => step,
            StepRule::Backtracking { initial, .. } => {
                if have_prev {
                    // BB1: ‖s‖² / ⟨s, y⟩ with y = g - g_prev and s = -α g_prev
                    let y: Vec<f64> = g.iter().zip(&g_prev).map(|(a, b)| a - b).collect();
                    let a = prev_step.unwrap();
                    let s: Vec<f64> = g_prev.iter().map(|v| -a * v).collect();
                    let sy = u.inner(&s, &y);
                    if sy > 0.0 {
                        s_dot_s / sy
                    } else {
                        initial
                    }
                } else {
                    initial
                }
            }
        };
        let (shrink, armijo, max_bt) = match cfg.step {
            StepRule::Fixed { .. } => (0.5, 0.0, 60),
            StepRule::Backtracking { shrink, armijo, max_backtracks, .. } => (shrink, armijo, max_backtracks),
        };
        let mut accepted = None;
        for _ in 0..=max_bt {
            {
                let tv = trial.values_mut();
                for k in 0..n {
                    tv[k] = u.values()[k] - step * g[k];
                }
            }
            trial.enforce_trace();
            if let Some(c) = constraint {
                c.project(&mut trial)?;
            }
            let e = disc.energy(trial.values(), eps);
            if e.is_finite() && e <= energy - armijo * step * gnorm2 && e <= energy {
                accepted = Some(e);
                break;
            }
            step *= shrink;
        }
        let Some(e_new) = accepted else {
            reason = Termination::Stalled;
            break;
        };
        iterations += 1;
        std::mem::swap(&mut u, &mut trial);
        let decrease = energy - e_new;
        energy = e_new;
        energy_trace.push(energy);
        if let Some(c) = constraint {
            residual_trace.push(c.residual(&u));
        }
        s_dot_s = step * step * gnorm2;
        prev_step = Some(step);
        have_prev = true;
        std::mem::swap(&mut g, &mut g_prev);
        disc.gradient_into(u.values(), eps, &mask, &mut g);
        project_grad(&mut g);
        if decrease <= cfg.energy_tol * energy.abs().max(1.0) {
            reason = Termination::Converged;
            break;
        }
    }
    Ok(MinimizeReport {
        field: u,
        energy_trace,
        iterations,
        residual_trace,
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasefield::SpaceGrid;
    use crate::potentials::{Family, SpatialDomain, WellExpr};

    fn quartic() -> Potential {
        let d = SpatialDomain::interval(0.0, 1.0).unwrap();
        Potential::single(d, Family::Quartic, WellExpr::constant(vec![1.0])).unwrap()
    }

    #[test]
    fn wells_need_no_iterations() {
        let u = Field::constant(SpaceGrid::line(0.0, 1.0, 65).unwrap(), &[1.0]).unwrap();
        let r = minimize(&u, &quartic(), &PhaseFieldConfig::new(0.05), None).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.energy(), 0.0);
        assert_eq!(r.reason, Termination::Converged);
    }

    #[test]
    fn descent_is_monotone_and_keeps_mass() {
        let g = SpaceGrid::line(0.0, 1.0, 257).unwrap();
        let u = Field::from_fn(g, 1, |x| vec![(8.0 * x[0]).sin() * 0.9]).unwrap();
        let c = MassConstraint::new(vec![0.1]);
        let mut u0 = u.clone();
        c.project(&mut u0).unwrap();
        let mut cfg = PhaseFieldConfig::new(0.05);
        cfg.max_iters = 300;
        let r = minimize(&u0, &quartic(), &cfg, Some(&c)).unwrap();
        assert!(r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.residual_trace.iter().all(|&v| v <= 1e-10));
        assert_eq!(r.residual_trace.len(), r.energy_trace.len());
        assert!(r.energy() < r.energy_trace[0]);
    }

    #[test]
    fn unreachable_mass_is_rejected() {
        let u = Field::constant(SpaceGrid::line(0.0, 1.0, 9).unwrap(), &[1.5]).unwrap();
        let c = MassConstraint::new(vec![1.5]);
        assert!(matches!(
            minimize(&u, &quartic(), &PhaseFieldConfig::new(0.05), Some(&c)),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn fixed_step_also_descends() {
        let g = SpaceGrid::line(0.0, 1.0, 65).unwrap();
        let u = Field::from_fn(g, 1, |x| vec![2.0 * x[0] - 1.0]).unwrap().with_fixed_trace();
        let mut cfg = PhaseFieldConfig::new(0.1);
        cfg.step = StepRule::Fixed { step: 1.0 };
        cfg.max_iters = 50;
        let r = minimize(&u, &quartic(), &cfg, None).unwrap();
        assert!(r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.field.value(0), &[-1.0]);
        assert_eq!(r.field.value(64), &[1.0]);
    }
}
