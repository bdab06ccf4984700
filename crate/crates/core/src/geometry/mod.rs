//! Model soliton geometries and flow utilities.

pub mod bowl;
pub mod flow;
pub mod graph;
pub mod model;

pub use bowl::{solve_bowl_profile, solve_bowl_profile_with_spacing, BowlProfile};
pub use flow::{parabolic_neighborhood, sample_flow, FlowContext, FlowSamples, Neighborhood};
pub use model::{
    cylinder_mean_curvature, cylinder_radius, elliptic_cylinder, sample_model, translator_residual,
    GridSpec, ModelTag, SurfaceSample, SurfaceSampleSet,
};
