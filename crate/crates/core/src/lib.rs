//! Monte Carlo simulation of trap models on `Z^d` and of their scaling limit.
//!
//! The walk `X` jumps with law `mu`; site `x` holds a trap of depth `tau_x`
//! drawn from a heavy-tailed law with index `alpha` in `(0,1)`. The walker
//! spends `tau_{X_k} T_k` units of time at its `k`-th position, `T_k` being
//! mean-one exponentials, and the energy process `Y_t` is the depth of the
//! trap occupied at time `t`.

// Negated comparisons are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod env;
pub mod error;
pub mod lattice;
pub mod limit;
pub mod stats;
pub mod trap;
pub mod walk;

pub use env::{Environment, TailFamily, TailLaw};
pub use error::{Error, Result};
pub use lattice::Site;
pub use stats::Streams;
pub use walk::{ScalingBundle, WalkModel};
