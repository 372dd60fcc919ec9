//! Dynamical movement primitives (DMPs) fitted from demonstrations, plus the
//! machinery for merging a deficient rollout with a corrective demonstration
//! into a new, discontinuity-free DMP.
//!
//! The typical loop is:
//!
//! 1. [`dmp::fit`] a demonstration and [`dmp::rollout`] the result.
//! 2. If the rollout is unsatisfactory, record a corrective demonstration that
//!    retraces the rollout backward and then shows the desired ending, marking
//!    where the retained part starts.
//! 3. [`correction::correct`] cuts both trajectories, blends the retained
//!    prefix into the corrective part and refits.

// Index loops mirror the formulas; negated comparisons also reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod blend;
pub mod correction;
pub mod dmp;
mod error;
pub mod io;
pub mod scenario;
pub mod trajectory;

pub use blend::{blend, BlendConfig, BlendResult};
pub use correction::{correct, CorrectionOutcome, CorrectionRequest};
pub use dmp::{fit, rollout, DmpParams, FitOptions, Gains};
pub use error::{Error, ErrorClass, Result};
pub use trajectory::{DerivedSignals, SplitResult, Trajectory};
