//! Degenerate geodesic distance `d_W(p, q) = inf ∫ 2√W(γ)|γ'|`: polylines and
//! their energy, grid shortest paths, polyline refinement with certification,
//! locality checks, the two-potential adapted distance and truncation.

mod adapted;
pub mod bounds;
mod grid;
mod locality;
mod polyline;
mod solver;

pub use adapted::{adapted_distance, AdaptedResult, AdaptedSearch};
pub use grid::{dijkstra, DistanceField, PhaseGrid, Stencil};
pub use locality::{verify_locality, LocalityReport};
pub use polyline::{
    curve_energy, curve_energy_paneled, polar_arc, segment_energy, segment_energy_paneled, Polyline, Quadrature,
};
pub use solver::{
    geodesic_distance, refine, scalar_sigma_oracle, truncated_distance, CapProvenance,
    GeodesicQuery, GeodesicResult, RefineOptions, TruncationCap,
};
