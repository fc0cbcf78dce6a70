//! Reproducible batch experiments driven by a TOML spec.
//!
//! ```toml
//! kind = "gamma-sweep"        # gamma-sweep | gamma-sweep-mass | geodesic-bench | annular-study | audit
//! seed = 0
//! eps = [0.04, 0.02, 0.01, 0.005]
//! nodes = [8192]              # one size for all eps, or one per eps
//!
//! [potential]                 # inline potential, or `potential_file = "path.toml"`
//! family = { name = "quartic" }
//! domain = { lower = [0.0], upper = [1.0] }
//! wells = [{ kind = "constant", value = [1.0] }]
//! ```
//!
//! Every CSV starts with `# version=`, `# config_hash=` and `# seed=` lines, then a
//! header row. Wall-clock times go to a separate `timing.csv`, so that all other
//! tables are byte-identical across runs of the same spec.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, ResultExt};
use crate::geodesics::bounds::{fit_path_length_constant, path_length_scale};
use crate::geodesics::{geodesic_distance, truncated_distance, verify_locality, GeodesicQuery, TruncationCap};
use crate::phasefield::{
    build_recovery_1d, io::write_field, locate_interface, mass_correction_bump, minimize, Discretization, Field,
    MassConstraint, PhaseFieldConfig, RecoveryConfig, SpaceGrid, StepRule,
};
use crate::potentials::audit::{audit_hypotheses, AuditSpec};
use crate::potentials::config::PotentialSpec;
use crate::potentials::{make_annular_potential, Potential};
use crate::profiles::Profile;
use crate::sharp::{assign_phases, energy_infty, Jump, SharpConfig, SharpOptions, Well};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GammaSweep,
    GammaSweepMass,
    GeodesicBench,
    AnnularStudy,
    Audit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryChoice {
    #[default]
    Fixed,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizerSettings {
    pub step: StepRule,
    pub max_iters: usize,
    pub energy_tol: f64,
}

impl Default for MinimizerSettings {
    fn default() -> Self {
        let d = PhaseFieldConfig::default();
        Self {
            step: d.step,
            max_iters: d.max_iters,
            energy_tol: d.energy_tol,
        }
    }
}

/// Mass correction by a hat bump of radius `ε^exponent` centred at `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSettings {
    pub center: Vec<f64>,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaSettings {
    /// Interface position; when absent, the minimizer of the single-jump sharp
    /// energy over `candidates` evenly spaced interior points.
    pub interface: Option<f64>,
    pub candidates: usize,
    pub boundary: BoundaryChoice,
    /// Mean-value target of the mass-constrained sweep; defaults to the mean of the
    /// sharp configuration.
    pub mass: Option<Vec<f64>>,
    pub recovery: RecoveryConfig,
    pub minimizer: MinimizerSettings,
    pub bump: Option<BumpSettings>,
    /// Distance to a well under which a node counts as assigned.
    pub phase_tol: f64,
    pub dump_fields: bool,
    /// Solver settings for the frozen geodesic when the phase is vector-valued.
    pub geodesic: GeodesicQuery,
    /// Sharp-interface configuration reported in `sharp.csv`.
    pub sharp: Option<SharpConfig>,
}

impl Default for GammaSettings {
    fn default() -> Self {
        Self {
            interface: None,
            candidates: 401,
            boundary: BoundaryChoice::Fixed,
            mass: None,
            recovery: RecoveryConfig::default(),
            minimizer: MinimizerSettings::default(),
            bump: None,
            phase_tol: 0.05,
            dump_fields: false,
            geodesic: GeodesicQuery::default(),
            sharp: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointPair {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Frozen spatial point of this query; the bench-wide point when absent.
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    #[serde(default)]
    pub eps_cert: Option<f64>,
}

/// `n × n` endpoint pairs: `p` runs over `n` points from `p_from` to `p_to`, `q` likewise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointGrid {
    pub p_from: Vec<f64>,
    pub p_to: Vec<f64>,
    pub q_from: Vec<f64>,
    pub q_to: Vec<f64>,
    pub n: usize,
}

impl EndpointGrid {
    pub fn pairs(&self) -> Vec<EndpointPair> {
        let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
        let n = self.n.max(1);
        let t = |i: usize| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(EndpointPair {
                    p: lerp(&self.p_from, &self.p_to, t(i)),
                    q: lerp(&self.q_from, &self.q_to, t(j)),
                    x: None,
                    eps_cert: None,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalitySettings {
    pub intervals: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeodesicSettings {
    /// Frozen spatial point; the domain centre when empty.
    pub x: Vec<f64>,
    pub queries: Vec<EndpointPair>,
    pub endpoint_grid: Option<EndpointGrid>,
    pub query: GeodesicQuery,
    /// Truncation level compared against the untruncated distance.
    pub cap: Option<f64>,
    pub locality: Option<LocalitySettings>,
    /// Refit the path-length constant with twice the solver resolution.
    pub stability: bool,
}

impl Default for GeodesicSettings {
    fn default() -> Self {
        Self {
            x: Vec::new(),
            queries: Vec::new(),
            endpoint_grid: None,
            query: GeodesicQuery::default(),
            cap: None,
            locality: None,
            stability: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnularSettings {
    pub rings: Vec<usize>,
    pub m1: f64,
    /// Corridor level of the outermost ring; level `k` is `level · ratio^k`.
    pub level: f64,
    pub level_ratio: f64,
    pub gap: f64,
    pub query: GeodesicQuery,
    /// Truncation level for the capped comparison run.
    pub cap: Option<f64>,
}

/// Solver defaults tuned for the annular landscape on one core.
pub fn annular_query() -> GeodesicQuery {
    let mut q = GeodesicQuery::new(vec![0.0, 0.5], vec![0.0, -0.5]);
    q.box_center = vec![0.0, -0.5];
    q.box_radius = 1.05;
    q.grid_nodes = 701;
    q.max_sweeps = 30;
    q.cert_refine = 1;
    q.eps_cert = 2e-3;
    q
}

impl Default for AnnularSettings {
    fn default() -> Self {
        Self {
            rings: (1..=6).collect(),
            m1: 1.0,
            level: 1e-4,
            level_ratio: 0.25,
            gap: 0.15,
            query: annular_query(),
            cap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPotential {
    pub name: String,
    pub potential: PotentialSpec,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSettings {
    pub spec: AuditSpec,
    /// Potentials to audit; the top-level potential when empty.
    pub families: Vec<NamedPotential>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub nodes: Vec<usize>,
    /// Output directory, overridden by the caller when given there.
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    /// Potential read from a separate file, relative to the spec file.
    #[serde(default)]
    pub potential_file: Option<String>,
    #[serde(default)]
    pub gamma: GammaSettings,
    #[serde(default)]
    pub geodesic: GeodesicSettings,
    #[serde(default)]
    pub annular: AnnularSettings,
    #[serde(default)]
    pub audit: AuditSettings,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.kind, ExperimentKind::GammaSweep | ExperimentKind::GammaSweepMass) {
            if self.eps.is_empty() {
                return Err(Error::Config("gamma sweeps need a non-empty eps list".into()));
            }
            if self.eps.iter().any(|e| !(*e > 0.0)) || self.eps.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(Error::Config("eps list must be positive and strictly decreasing".into()));
            }
            if !(self.nodes.len() == 1 || self.nodes.len() == self.eps.len()) {
                return Err(Error::Config("give one grid size, or one per eps".into()));
            }
        }
        if self.kind == ExperimentKind::AnnularStudy && self.annular.rings.iter().any(|&r| r == 0 || r > 6) {
            return Err(Error::Config("annular study supports 1 to 6 rings".into()));
        }
        if self.potential.is_some() && self.potential_file.is_some() {
            return Err(Error::Config("give either `potential` or `potential_file`".into()));
        }
        Ok(())
    }

    /// Potential of the experiment; `base` resolves `potential_file`.
    pub fn build_potential(&self, base: Option<&Path>) -> Result<Potential> {
        match (&self.potential, &self.potential_file) {
            (Some(p), _) => p.build(),
            (None, Some(file)) => {
                let path = base.map(|b| b.join(file)).unwrap_or_else(|| PathBuf::from(file));
                let text = fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                PotentialSpec::from_toml(&text)?.build()
            }
            (None, None) => Err(Error::Config("missing `potential` or `potential_file`".into())),
        }
    }

    fn nodes_for(&self, k: usize) -> usize {
        if self.nodes.len() == 1 {
            self.nodes[0]
        } else {
            self.nodes[k]
        }
    }
}

/// Version, config hash and seed stamped on every table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_text: &str, seed: u64) -> Self {
        Self {
            version: VERSION.to_string(),
            config_hash: hex::encode(Sha256::digest(config_text.as_bytes())),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    pub fn to_csv(&self, prov: &Provenance) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# version={}", prov.version);
        let _ = writeln!(s, "# config_hash={}", prov.config_hash);
        let _ = writeln!(s, "# seed={}", prov.seed);
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn vec_cell(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub tables: Vec<Table>,
    /// `(label, seconds)`, written to `timing.csv`.
    pub timings: Vec<(String, f64)>,
    pub fields: Vec<(String, Field)>,
}

impl ExperimentOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Writes every table as `<name>.csv`, `timing.csv` and field dumps under `fields/`.
pub fn write_output(out: &ExperimentOutput, dir: &Path, prov: &Provenance) -> Result<()> {
    fs::create_dir_all(dir)?;
    for t in &out.tables {
        fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv(prov))?;
    }
    let mut timing = Table::new("timing", &["label", "seconds"]);
    for (l, s) in &out.timings {
        timing.push(vec![l.clone(), format!("{s:.6}")]);
    }
    fs::write(dir.join("timing.csv"), timing.to_csv(prov))?;
    if !out.fields.is_empty() {
        let fdir = dir.join("fields");
        fs::create_dir_all(&fdir)?;
        for (name, f) in &out.fields {
            write_field(f, &fdir.join(name))?;
        }
    }
    Ok(())
}

/// Runs the experiment described by `spec`; `base` resolves relative paths.
pub fn run_experiment(spec: &ExperimentSpec, base: Option<&Path>) -> Result<ExperimentOutput> {
    spec.validate()?;
    match spec.kind {
        ExperimentKind::GammaSweep | ExperimentKind::GammaSweepMass => {
            let pot = spec.build_potential(base)?;
            run_gamma_sweep(spec, &pot).map(|(_, out)| out)
        }
        ExperimentKind::GeodesicBench => {
            let pot = spec.build_potential(base)?;
            run_geodesic_bench(spec, &pot).map(|(_, out)| out)
        }
        ExperimentKind::AnnularStudy => run_annular_study(spec).map(|(_, out)| out),
        ExperimentKind::Audit => run_audit(spec, base),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpRow {
    pub radius: f64,
    pub deficit: f64,
    /// Added `(1/ε) ∫ W` caused by the bump.
    pub potential_cost: f64,
    /// Mass residual right after the bump.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaRow {
    pub eps: f64,
    pub nodes: usize,
    /// Interface position the recovery field was built at.
    pub target_interface: f64,
    pub sharp_energy: f64,
    pub recovery_energy: f64,
    pub energy: f64,
    pub iterations: usize,
    pub reason: String,
    /// First located interface of the minimizer (NaN when none).
    pub interface: f64,
    pub crossings: usize,
    pub gap: f64,
    pub rel_gap: f64,
    /// Largest mass residual over all iterates (0 without a constraint).
    pub max_residual: f64,
    pub half_width: f64,
    pub tau: f64,
    pub violation: f64,
    /// Energy of every iterate was non-increasing.
    pub monotone: bool,
    pub bump: Option<BumpRow>,
}

fn sharp_single_jump(pot: &Potential, x: f64) -> Result<f64> {
    let cfg = SharpConfig::Line {
        jumps: vec![Jump {
            position: x,
            left: Well::Minus,
            right: Well::Plus,
        }],
    };
    Ok(energy_infty(&cfg, pot, &SharpOptions::default())?.total)
}

/// Interior position minimizing the single-jump sharp energy over `n` candidates,
/// ties broken toward the domain centre.
pub fn optimal_interface(pot: &Potential, n: usize) -> Result<(f64, f64)> {
    let (lo, hi) = (pot.domain().lower()[0], pot.domain().upper()[0]);
    let n = n.max(3);
    let mut best = (f64::NAN, f64::INFINITY);
    for k in 1..n - 1 {
        let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let e = sharp_single_jump(pot, x)?;
        let tie = best.1.is_finite() && (e - best.1).abs() <= 1e-12 * best.1.abs().max(1.0);
        let mid = 0.5 * (lo + hi);
        if (e < best.1 && !tie) || (tie && (x - mid).abs() < (best.0 - mid).abs()) {
            best = (x, e);
        }
    }
    Ok(best)
}

/// Mean of the sharp configuration `-a` left of `x0`, `+a` right of it, by composite
/// Simpson on each side of the jump.
pub fn sharp_mean(pot: &Potential, x0: f64) -> Result<Vec<f64>> {
    let (lo, hi) = (pot.domain().lower()[0], pot.domain().upper()[0]);
    let m = pot.phase_dim();
    let mut total = vec![0.0; m];
    for (a, b, sign) in [(lo, x0, -1.0), (x0, hi, 1.0)] {
        let panels = 2048;
        let h = (b - a) / panels as f64;
        for k in 0..=panels {
            let w = if k == 0 || k == panels {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let well = pot.well(&[a + h * k as f64])?;
            for (t, v) in total.iter_mut().zip(&well) {
                *t += sign * w * h / 3.0 * v;
            }
        }
    }
    Ok(total.into_iter().map(|t| t / (hi - lo)).collect())
}

/// Γ-convergence sweep: recovery field, warm-started descent, comparison with the
/// sharp-interface energy, for every `ε` of the spec.
pub fn run_gamma_sweep(spec: &ExperimentSpec, pot: &Potential) -> Result<(Vec<GammaRow>, ExperimentOutput)> {
    if pot.space_dim() != 1 {
        return Err(Error::Config("gamma sweeps run on 1-D domains".into()));
    }
    let g = &spec.gamma;
    let constrained = spec.kind == ExperimentKind::GammaSweepMass;
    let (x0, sharp) = match g.interface {
        Some(x) => (x, sharp_single_jump(pot, x)?),
        None => optimal_interface(pot, g.candidates)?,
    };
    let (lo, hi) = (pot.domain().lower()[0], pot.domain().upper()[0]);
    let jobs: Vec<(usize, f64)> = spec.eps.iter().copied().enumerate().collect();
    let results: Vec<Result<(GammaRow, f64, Option<(Field, Profile)>)>> = jobs
        .par_iter()
        .map(|&(k, eps)| -> Result<(GammaRow, f64, Option<(Field, Profile)>)> {
            let start = Instant::now();
            let n = spec.nodes_for(k);
            let grid = SpaceGrid::line(lo, hi, n)?;
            let rec = build_recovery_1d(pot, &grid, x0, eps, &g.recovery, &g.geodesic)?;
            let disc = Discretization::new(pot, &grid)?;
            let recovery_energy = disc.energy(rec.field.values(), eps);
            let mut u0 = match g.boundary {
                BoundaryChoice::Fixed => rec.field.clone(),
                BoundaryChoice::Free => rec.field.clone().into_free(),
            };
            let mut bump = None;
            let constraint = if constrained {
                let target = match &g.mass {
                    Some(m) => m.clone(),
                    None => sharp_mean(pot, x0)?,
                };
                let c = MassConstraint::new(target.clone());
                if let Some(b) = &g.bump {
                    let radius = eps.powf(b.exponent);
                    let before = disc.energy_parts(u0.values(), eps).potential;
                    let r = mass_correction_bump(&u0, pot, &target, &b.center, radius)?;
                    let after = disc.energy_parts(r.field.values(), eps).potential;
                    bump = Some(BumpRow {
                        radius,
                        deficit: r.deficit.iter().map(|d| d.abs()).fold(0.0, f64::max),
                        potential_cost: after - before,
                        residual: c.residual(&r.field),
                    });
                    u0 = r.field;
                }
                c.project(&mut u0)?;
                Some(c)
            } else {
                None
            };
            let cfg = PhaseFieldConfig {
                eps,
                step: g.minimizer.step,
                max_iters: g.minimizer.max_iters,
                energy_tol: g.minimizer.energy_tol,
            };
            let rep = minimize(&u0, pot, &cfg, constraint.as_ref())?;
            let crossings = locate_interface(&rep.field, pot)?;
            let assign = assign_phases(&rep.field, pot, g.phase_tol)?;
            let energy = rep.energy();
            let row = GammaRow {
                eps,
                nodes: n,
                target_interface: x0,
                sharp_energy: sharp,
                recovery_energy,
                energy,
                iterations: rep.iterations,
                reason: rep.reason.as_str().to_string(),
                interface: crossings.first().copied().unwrap_or(f64::NAN),
                crossings: crossings.len(),
                gap: (energy - sharp).abs(),
                rel_gap: (energy - sharp).abs() / sharp,
                max_residual: rep.residual_trace.iter().copied().fold(0.0, f64::max),
                half_width: rec.half_width,
                tau: rec.profile.tau,
                violation: assign.violation,
                monotone: rep.energy_trace.windows(2).all(|w| w[1] <= w[0]),
                bump,
            };
            let field = g.dump_fields.then_some((rep.field, rec.profile));
            Ok((row, start.elapsed().as_secs_f64(), field))
        })
        .collect();
    let mut rows = Vec::new();
    let mut out = ExperimentOutput::default();
    for (r, &(_, eps)) in results.into_iter().zip(&jobs) {
        let (row, secs, field) = r.context(|| format!("gamma sweep at eps={eps}"))?;
        out.timings.push((format!("eps={eps}"), secs));
        if let Some((f, profile)) = field {
            out.fields.push((format!("u_eps{eps}"), f));
            let mut t = Table::new(&format!("profile_eps{eps}"), &["t", "g"]);
            for (a, b) in profile.t.iter().zip(&profile.s) {
                t.push(vec![num(*a), num(*b)]);
            }
            out.tables.push(t);
        }
        rows.push(row);
    }
    let mut t = Table::new(
        "gamma",
        &[
            "eps", "nodes", "target_interface", "sharp_energy", "recovery_energy", "energy", "iterations", "reason",
            "interface", "crossings", "gap", "rel_gap", "max_residual", "half_width", "tau", "violation", "monotone",
        ],
    );
    for r in &rows {
        t.push(vec![
            num(r.eps),
            r.nodes.to_string(),
            num(r.target_interface),
            num(r.sharp_energy),
            num(r.recovery_energy),
            num(r.energy),
            r.iterations.to_string(),
            r.reason.clone(),
            num(r.interface),
            r.crossings.to_string(),
            num(r.gap),
            num(r.rel_gap),
            num(r.max_residual),
            num(r.half_width),
            num(r.tau),
            num(r.violation),
            r.monotone.to_string(),
        ]);
    }
    out.tables.push(t);
    if let Some(cfg) = &g.sharp {
        let opts = SharpOptions {
            geodesic: g.geodesic.clone(),
            ..Default::default()
        };
        let rep = energy_infty(cfg, pot, &opts).context(|| "sharp-interface energy".to_string())?;
        let mut t = Table::new("sharp", &["location", "measure", "tension", "value", "connector"]);
        for c in &rep.contributions {
            t.push(vec![
                vec_cell(&c.location),
                num(c.measure),
                num(c.tension),
                num(c.value),
                c.connector.as_deref().map(vec_cell).unwrap_or_default(),
            ]);
        }
        t.push(vec!["total".into(), String::new(), String::new(), num(rep.total), String::new()]);
        out.tables.push(t);
    }
    if rows.iter().any(|r| r.bump.is_some()) {
        let mut b = Table::new("bump", &["eps", "radius", "deficit", "potential_cost", "residual"]);
        for r in &rows {
            if let Some(x) = &r.bump {
                b.push(vec![num(r.eps), num(x.radius), num(x.deficit), num(x.potential_cost), num(x.residual)]);
            }
        }
        out.tables.push(b);
    }
    Ok((rows, out))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicRow {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub value: f64,
    pub length: f64,
    pub gap: f64,
    pub certified: bool,
    pub sweeps: usize,
    pub path_scale: f64,
    pub capped_value: Option<f64>,
    /// Length at twice the solver resolution.
    pub refined_length: Option<f64>,
    pub locality_checked: Option<usize>,
    pub locality_violations: Option<usize>,
    pub locality_max_excess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicSummary {
    pub rows: Vec<GeodesicRow>,
    pub fitted_constant: f64,
    pub refined_constant: Option<f64>,
}

/// The same query at twice the grid resolution.
pub fn doubled_resolution(q: &GeodesicQuery) -> GeodesicQuery {
    let mut r = q.clone();
    r.grid_nodes = 2 * (q.grid_nodes - 1) + 1;
    r.vertices = q.vertices.map(|v| 2 * (v - 1) + 1);
    r
}

/// Geodesic benchmark over listed endpoint pairs and an optional endpoint grid.
pub fn run_geodesic_bench(spec: &ExperimentSpec, pot: &Potential) -> Result<(GeodesicSummary, ExperimentOutput)> {
    let s = &spec.geodesic;
    let x = if s.x.is_empty() {
        pot.domain().lower().iter().zip(pot.domain().upper()).map(|(l, u)| 0.5 * (l + u)).collect()
    } else {
        s.x.clone()
    };
    let mut pairs = s.queries.clone();
    if let Some(g) = &s.endpoint_grid {
        pairs.extend(g.pairs());
    }
    let results: Vec<Result<(GeodesicRow, f64)>> = pairs
        .par_iter()
        .enumerate()
        .map(|(k, pair)| -> Result<(GeodesicRow, f64)> {
            let start = Instant::now();
            let ctx = || format!("geodesic query {k} p={:?} q={:?}", pair.p, pair.q);
            let xk = pair.x.clone().unwrap_or_else(|| x.clone());
            let frozen = pot.at(&xk).context(ctx)?;
            let mut q = s.query.with_endpoints(&pair.p, &pair.q);
            if let Some(e) = pair.eps_cert {
                q.eps_cert = e;
            }
            let r = geodesic_distance(&frozen, &q).context(ctx)?;
            let capped_value = match s.cap {
                Some(level) => Some(truncated_distance(&frozen, &q, TruncationCap::user(level)?).context(ctx)?.value),
                None => None,
            };
            let refined_length = if s.stability {
                Some(geodesic_distance(&frozen, &doubled_resolution(&q)).context(ctx)?.length)
            } else {
                None
            };
            let (locality_checked, locality_violations, locality_max_excess) = match s.locality {
                Some(l) if r.certified && r.value > 0.0 => {
                    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                    rng.set_stream(k as u64);
                    let rep = verify_locality(&frozen, &r, &q, l.intervals, l.tol, &mut rng).context(ctx)?;
                    (Some(rep.checked), Some(rep.violations), Some(rep.max_violation))
                }
                _ => (None, None, None),
            };
            let row = GeodesicRow {
                path_scale: path_length_scale(pot.growth(), &pair.p, &pair.q),
                x: xk,
                p: pair.p.clone(),
                q: pair.q.clone(),
                value: r.value,
                length: r.length,
                gap: r.gap,
                certified: r.certified,
                sweeps: r.sweeps,
                capped_value,
                refined_length,
                locality_checked,
                locality_violations,
                locality_max_excess,
            };
            Ok((row, start.elapsed().as_secs_f64()))
        })
        .collect();
    let mut out = ExperimentOutput::default();
    let mut rows = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        let (row, secs) = r?;
        rows.push(row);
        out.timings.push((format!("query={k}"), secs));
    }
    let samples: Vec<(Vec<f64>, Vec<f64>, f64)> = rows.iter().map(|r| (r.p.clone(), r.q.clone(), r.length)).collect();
    let fitted_constant = fit_path_length_constant(pot.growth(), &samples).constant;
    let refined_constant = s.stability.then(|| {
        let samples: Vec<_> = rows
            .iter()
            .map(|r| (r.p.clone(), r.q.clone(), r.refined_length.unwrap_or(f64::NAN)))
            .collect();
        fit_path_length_constant(pot.growth(), &samples).constant
    });
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let opt_n = |v: Option<usize>| v.map(|n| n.to_string()).unwrap_or_default();
    let mut t = Table::new(
        "geodesic",
        &[
            "x", "p", "q", "value", "length", "gap", "certified", "sweeps", "path_scale", "length_ratio", "capped_value",
            "cap_diff", "refined_length", "locality_checked", "locality_violations",
            "locality_max_excess",
        ],
    );
    for r in &rows {
        t.push(vec![
            vec_cell(&r.x),
            vec_cell(&r.p),
            vec_cell(&r.q),
            num(r.value),
            num(r.length),
            num(r.gap),
            r.certified.to_string(),
            r.sweeps.to_string(),
            num(r.path_scale),
            num(r.length / r.path_scale),
            opt(r.capped_value),
            opt(r.capped_value.map(|c| (c - r.value).abs())),
            opt(r.refined_length),
            opt_n(r.locality_checked),
            opt_n(r.locality_violations),
            opt(r.locality_max_excess),
        ]);
    }
    out.tables.push(t);
    let mut sum = Table::new("geodesic_summary", &["key", "value"]);
    sum.push(vec!["fitted_constant".into(), num(fitted_constant)]);
    if let Some(c) = refined_constant {
        sum.push(vec!["refined_constant".into(), num(c)]);
        sum.push(vec!["relative_change".into(), num((c - fitted_constant).abs() / fitted_constant)]);
    }
    out.tables.push(sum);
    Ok((
        GeodesicSummary {
            rows,
            fitted_constant,
            refined_constant,
        },
        out,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnularRow {
    pub rings: usize,
    pub value: f64,
    pub length: f64,
    pub lower_estimate: f64,
    pub gap: f64,
    pub certified: bool,
    pub capped_value: Option<f64>,
    pub capped_length: Option<f64>,
}

/// Corridor levels `level · ratio^k`, `k = 0..=rings`.
pub fn annular_levels(s: &AnnularSettings, rings: usize) -> Vec<f64> {
    (0..=rings).map(|k| s.level * s.level_ratio.powi(k as i32)).collect()
}

/// Geodesic length between the annular wells as the number of rings grows.
pub fn run_annular_study(spec: &ExperimentSpec) -> Result<(Vec<AnnularRow>, ExperimentOutput)> {
    let s = &spec.annular;
    let mut out = ExperimentOutput::default();
    let mut rows = Vec::new();
    for &rings in &s.rings {
        let start = Instant::now();
        let ctx = || format!("annular study with {rings} rings");
        let pot = make_annular_potential(rings, s.m1, &annular_levels(s, rings), s.gap).context(ctx)?;
        let frozen = pot.at(&[0.5])?;
        let r = geodesic_distance(&frozen, &s.query).context(ctx)?;
        let (capped_value, capped_length) = match s.cap {
            Some(level) => {
                let c = truncated_distance(&frozen, &s.query, TruncationCap::user(level)?).context(ctx)?;
                (Some(c.value), Some(c.length))
            }
            None => (None, None),
        };
        rows.push(AnnularRow {
            rings,
            value: r.value,
            length: r.length,
            lower_estimate: r.lower_estimate,
            gap: r.gap,
            certified: r.certified,
            capped_value,
            capped_length,
        });
        out.timings.push((format!("rings={rings}"), start.elapsed().as_secs_f64()));
    }
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let mut t = Table::new(
        "annular",
        &["rings", "value", "length", "lower_estimate", "gap", "certified", "flag", "capped_value", "capped_length"],
    );
    for r in &rows {
        t.push(vec![
            r.rings.to_string(),
            num(r.value),
            num(r.length),
            num(r.lower_estimate),
            num(r.gap),
            r.certified.to_string(),
            if r.certified { "ok" } else { "uncertified" }.to_string(),
            opt(r.capped_value),
            opt(r.capped_length),
        ]);
    }
    out.tables.push(t);
    Ok((rows, out))
}

/// Hypothesis audit, one row per hypothesis and potential.
pub fn run_audit(spec: &ExperimentSpec, base: Option<&Path>) -> Result<ExperimentOutput> {
    let mut list: Vec<(String, Potential)> = Vec::new();
    if spec.audit.families.is_empty() {
        list.push(("potential".into(), spec.build_potential(base)?));
    } else {
        for f in &spec.audit.families {
            list.push((f.name.clone(), f.potential.build().context(|| format!("audit family {}", f.name))?));
        }
    }
    let mut audit = spec.audit.spec.clone();
    audit.seed = spec.seed;
    let mut out = ExperimentOutput::default();
    let mut t = Table::new("audit", &["family", "hypothesis", "passed", "samples", "worst_margin", "witness"]);
    for (name, pot) in &list {
        let start = Instant::now();
        let rep = audit_hypotheses(pot, &audit);
        for e in &rep.entries {
            t.push(vec![
                name.clone(),
                e.hypothesis.to_string(),
                e.passed.to_string(),
                e.samples.to_string(),
                num(e.worst_margin),
                format!("\"{}\"", e.witness.replace('"', "'")),
            ]);
        }
        out.timings.push((format!("audit={name}"), start.elapsed().as_secs_f64()));
    }
    out.tables.push(t);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAMMA: &str = r#"
kind = "gamma-sweep"
eps = [0.04, 0.02]
nodes = [1024]

[potential]
family = { name = "quartic" }
domain = { lower = [0.0], upper = [1.0] }
wells = [{ kind = "constant", value = [1.0] }]

[gamma.minimizer]
max_iters = 200
"#;

    #[test]
    fn spec_validation() {
        assert!(ExperimentSpec::from_toml(GAMMA).is_ok());
        let bad = GAMMA.replace("[0.04, 0.02]", "[0.02, 0.04]");
        assert!(matches!(ExperimentSpec::from_toml(&bad), Err(Error::Config(_))));
        let bad = GAMMA.replace("kind = \"gamma-sweep\"", "kind = \"nope\"");
        assert!(ExperimentSpec::from_toml(&bad).is_err());
        let bad = GAMMA.replace("nodes = [1024]", "nodes = [1024, 512, 256]");
        assert!(ExperimentSpec::from_toml(&bad).is_err());
    }

    #[test]
    fn csv_carries_provenance() {
        let spec = ExperimentSpec::from_toml(GAMMA).unwrap();
        let out = run_experiment(&spec, None).unwrap();
        let prov = Provenance::new(GAMMA, spec.seed);
        let csv = out.table("gamma").unwrap().to_csv(&prov);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), format!("# version={VERSION}"));
        assert_eq!(lines.next().unwrap().len(), "# config_hash=".len() + 64);
        assert_eq!(lines.next().unwrap(), "# seed=0");
        assert!(lines.next().unwrap().starts_with("eps,nodes,"));
        assert_eq!(csv.lines().count(), 6);
    }

    #[test]
    fn gamma_sweep_is_deterministic() {
        let spec = ExperimentSpec::from_toml(GAMMA).unwrap();
        let a = run_experiment(&spec, None).unwrap();
        let b = run_experiment(&spec, None).unwrap();
        assert_eq!(a.tables, b.tables);
        let t = a.table("gamma").unwrap();
        assert!(t.column("monotone").unwrap().iter().all(|v| *v == "true"));
    }

    #[test]
    fn endpoint_grid_pairs() {
        let g = EndpointGrid {
            p_from: vec![0.0],
            p_to: vec![1.0],
            q_from: vec![2.0],
            q_to: vec![3.0],
            n: 3,
        };
        let p = g.pairs();
        assert_eq!(p.len(), 9);
        assert_eq!(p[5].p, vec![0.5]);
        assert_eq!(p[5].q, vec![3.0]);
    }
}
