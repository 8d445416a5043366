//! Jump laws, path simulation and the walk sequences behind the scaling.

mod estimate;
mod model;
mod path;
mod scaling;

pub use estimate::{
    estimate_r, estimate_rho, occupation_stats, Estimate, OccupationStats, RateEstimate, ReturnWindow, RhoEstimate,
};
pub(crate) use estimate::check_grid;
pub use model::{JumpLaw, WalkModel, DEFAULT_KMAX};
pub use path::{simulate_path, PathRecord, Walker};
pub use scaling::{build_scaling, geometric_grid, ScalingBundle, ScalingPoint, ScalingRow};
