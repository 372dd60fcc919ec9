//! Request and response bodies.

use dmpcorr_core::correction::JunctionMetrics;
use dmpcorr_core::{DmpParams, Gains, Trajectory};
use serde::{Deserialize, Serialize};

/// Uniformly sampled trajectory, one row per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryBody {
    pub dt: f64,
    pub samples: Vec<Vec<f64>>,
}

impl From<&Trajectory> for TrajectoryBody {
    fn from(t: &Trajectory) -> Self {
        Self {
            dt: t.dt(),
            samples: t.to_rows(),
        }
    }
}

/// Either the name of a trajectory stored in the session or an inline one.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TrajectoryRef {
    Named(String),
    Inline(TrajectoryBody),
}

/// Either the name of a DMP stored in the session or an inline one.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DmpRef {
    Named(String),
    Inline(Box<DmpParams>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UploadRequest {
    pub name: String,
    pub dt: f64,
    pub samples: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    pub trajectory: TrajectoryRef,
    pub n_basis: Option<usize>,
    pub gains: Option<Gains>,
    pub tau: Option<f64>,
    /// Store the fitted DMP under this name.
    pub name: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolloutRequest {
    pub dmp: DmpRef,
    pub start: Option<Vec<f64>>,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
    /// Store the rollout under this name.
    pub name: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectRequest {
    pub deficient: TrajectoryRef,
    pub corrective: TrajectoryRef,
    /// Index of the first retained corrective sample.
    pub cut: usize,
    pub lambda: Option<f64>,
    pub n_basis: Option<usize>,
    pub gains: Option<Gains>,
    /// Store the merged trajectory and the modified DMP under this name.
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    /// Length of the retained deficient prefix.
    #[serde(rename = "M")]
    pub m: usize,
    /// Distance between the first retained corrective sample and its nearest
    /// deficient sample.
    pub d_m: f64,
    pub deficient_cut: usize,
    pub corrective_cut: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(flatten)]
    pub junction: JunctionMetrics,
    pub objective_value: f64,
    pub max_constraint_residual: f64,
    pub stationarity: f64,
    pub blend_solve_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectResponse {
    pub merged: TrajectoryBody,
    pub dmp: DmpParams,
    pub split: Split,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub name: String,
    pub dims: usize,
    pub len: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmpSummary {
    pub name: String,
    pub dims: usize,
    pub n_basis: usize,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inventory {
    pub id: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub trajectories: Vec<TrajectorySummary>,
    pub dmps: Vec<DmpSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    /// Stable snake_case tag, e.g. `prefix_too_short` or `unknown_session`.
    pub reason: String,
    pub message: String,
}
