//! Spherical harmonics on S^{n−2} and Jacobi-field evolution on shrinking
//! cylinders.

pub mod graph;
pub mod harmonics;
pub mod heat;
pub mod modes;

pub use graph::{mode0_check, Mode0Report, RadialGraph};
pub use harmonics::{eigenvalue, multiplicity, sphere_levels, SphereLevel, SphereSpectrum};
pub use heat::{
    envelope_exponent, evolve_mode, gauge_exponent, time_nodes, EvolutionPath, EvolveOptions, HeatSolver, ModeRecord,
    ModeState, ZGrid,
};
pub use modes::{
    affine_extract, level_one_sweep, decay_exponent_sweep, evolve_jacobi_cylinder, mode_decay_bound,
    mode_decay_sweep, project_field, synthesize_at, AffineReport, LevelOneRow, DecayConfig, DecayExponentReport,
    DecayRow, DecaySweepReport, LevelSup,
};
