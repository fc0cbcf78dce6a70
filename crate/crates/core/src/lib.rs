//! Degenerate geodesic distances, optimal transition profiles and phase-field
//! energies for double-well potentials whose wells move in space.

pub mod error;
pub mod experiments;
pub mod geodesics;
pub mod phasefield;
pub mod potentials;
pub mod profiles;
pub mod sharp;
pub mod vecmath;

pub use error::{Error, Result, ResultExt};
pub use geodesics::{geodesic_distance, GeodesicQuery, GeodesicResult, Polyline};
pub use potentials::{
    audit::{audit_hypotheses, AuditEntry, AuditReport, AuditSpec},
    make_annular_potential, Adjustment, Family, FrozenPotential, GrowthFunction, Modulus,
    PhaseDensity, Potential, SpatialDomain, WellExpr, WellField,
};
pub use experiments::{run_experiment, write_output, ExperimentKind, ExperimentOutput, ExperimentSpec, Provenance, Table};
pub use phasefield::{
    build_recovery_1d, build_recovery_flat, energy_eps, gradient_eps, mass_correction_bump, minimize, BumpResult,
    Field, MassConstraint, MinimizeReport, PhaseFieldConfig, RecoveryConfig, SpaceGrid, StepRule,
};
pub use potentials::config::{potential_from_toml, PotentialSpec};
pub use profiles::{profile_energy, reparameterize, Profile, ProfileConfig, ProfileEnergy};
pub use sharp::{
    assign_phases, energy_infty, phase_indicator, IndicatorOptions, IndicatorTable, Jump, SharpConfig,
    SharpEnergyReport, SharpOptions, Well,
};
