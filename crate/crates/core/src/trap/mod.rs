//! The clock and energy processes of the trap model, aging estimators and
//! diagnostics.

mod aging;
mod clock;
mod diag;

pub use aging::{
    estimate_aging, estimate_aging_mode, quenched_aging_variance, AgingCurve, AgingMode, AgingPoint, AgingRequest,
    EnvChoice, EnvFamily, PiWindow, QuenchedPoint, CI_LEVEL,
};
pub use clock::{build_clock_trace, ClockProcess, ClockTrace, Marks, MAX_CLOCK_STEPS};
pub use diag::{intersection_ratio, sample_rescaled_energy, IntersectionPoint};
