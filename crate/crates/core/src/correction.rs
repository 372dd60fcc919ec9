//! Merging a deficient trajectory with a corrective demonstration.
//!
//! The corrective demonstration retraces the deficient trajectory backward
//! and then shows the desired ending; the operator marks the sample where the
//! retained part begins. The deficient trajectory is kept up to its sample
//! nearest that marker, blended so that it runs into the marker with the
//! corrective direction, and the retained corrective part is appended
//! verbatim. A new DMP is then fitted to the merged trajectory.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::blend::{blend, BlendConfig, BlendResult};
use crate::dmp::{fit, DmpParams, FitOptions};
use crate::error::{invalid, Error, Result};
use crate::trajectory::{same_period, SplitResult, Trajectory};

/// Half-width of the window around the junction inspected by
/// [`junction_metrics`].
pub const JUNCTION_HALF_WINDOW: usize = 2;

#[derive(Debug, Clone)]
pub struct CorrectionRequest {
    pub deficient: Trajectory,
    pub corrective: Trajectory,
    /// Index into `corrective` of the first retained sample.
    pub corrective_cut: usize,
    pub blend: BlendConfig,
    /// Fit settings for the modified DMP. A `tau` of `None` uses the merged
    /// trajectory's duration.
    pub fit: FitOptions,
}

impl CorrectionRequest {
    pub fn new(deficient: Trajectory, corrective: Trajectory, corrective_cut: usize) -> Self {
        Self {
            deficient,
            corrective,
            corrective_cut,
            blend: BlendConfig::default(),
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionMetrics {
    /// Index of the junction sample in the merged trajectory.
    pub junction_index: usize,
    /// Largest Euclidean norm of a step between consecutive samples.
    pub max_step: f64,
    /// Largest second-difference norm within the window around the junction.
    pub junction_second_diff: f64,
    /// 95th percentile of second-difference norms outside that window.
    pub p95_second_diff_elsewhere: f64,
}

#[derive(Debug, Clone)]
pub struct CorrectionOutcome {
    /// Blended deficient prefix followed by the retained corrective part.
    pub merged: Trajectory,
    pub modified_dmp: DmpParams,
    /// `deficient_cut` and `corrective_cut` refer to the deficient trajectory
    /// and the corrective trajectory as resampled to the deficient period.
    pub split: SplitResult,
    pub blend: BlendResult,
    pub junction: JunctionMetrics,
    pub blend_solve_time: Duration,
}

pub fn correct(req: &CorrectionRequest) -> Result<CorrectionOutcome> {
    let CorrectionRequest {
        deficient,
        corrective,
        corrective_cut,
        ..
    } = req;
    if deficient.dims() != corrective.dims() {
        return Err(invalid(format!(
            "deficient trajectory has {} dimensions, corrective has {}",
            deficient.dims(),
            corrective.dims()
        )));
    }
    if *corrective_cut + 2 > corrective.len() {
        return Err(invalid(format!(
            "corrective cut {corrective_cut} leaves fewer than two corrective samples \
             (corrective trajectory has {} samples)",
            corrective.len()
        )));
    }

    let (corrective, cut) = if same_period(deficient.dt(), corrective.dt()) {
        (corrective.with_dt(deficient.dt())?, *corrective_cut)
    } else {
        let resampled = corrective.resample_uniform(deficient.dt())?;
        let t_cut = *corrective_cut as f64 * corrective.dt();
        let cut = ((t_cut / resampled.dt()).round() as usize).min(resampled.len() - 2);
        (resampled.with_dt(deficient.dt())?, cut)
    };

    let retained = corrective.take_suffix(cut)?;
    let head = [retained.sample(0), retained.sample(1)];
    let nearest = deficient.nearest_sample(head[0])?;
    if nearest.index + 1 < 3 {
        return Err(Error::PrefixTooShort {
            len: nearest.index + 1,
        });
    }
    let prefix = deficient.take_prefix(nearest.index)?;

    let started = Instant::now();
    let blended = blend(&prefix, head, &req.blend)?;
    let blend_solve_time = started.elapsed();

    // The blend's last sample equals head[0] by construction; take it from the
    // corrective trajectory so the retained part is bit-for-bit unchanged.
    let junction_index = prefix.len() - 1;
    let merged = blended
        .y_m
        .take_prefix(junction_index - 1)?
        .concat(&retained)?;

    let modified_dmp = fit(&merged, &req.fit)?;
    let junction = junction_metrics(&merged, junction_index)?;

    Ok(CorrectionOutcome {
        merged,
        modified_dmp,
        split: SplitResult {
            deficient_cut: nearest.index,
            corrective_cut: cut,
            min_distance: nearest.distance,
        },
        blend: blended,
        junction,
        blend_solve_time,
    })
}

/// Norm of the centered second difference at every interior sample; entry `i`
/// belongs to sample `i + 1`.
pub fn second_difference_norms(traj: &Trajectory) -> Vec<f64> {
    (1..traj.len() - 1)
        .map(|i| {
            let (a, b, c) = (traj.sample(i - 1), traj.sample(i), traj.sample(i + 1));
            (0..traj.dims())
                .map(|j| (a[j] - 2.0 * b[j] + c[j]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Step and curvature diagnostics of a merged trajectory around
/// `junction_index`.
pub fn junction_metrics(merged: &Trajectory, junction_index: usize) -> Result<JunctionMetrics> {
    if junction_index >= merged.len() {
        return Err(invalid(format!(
            "junction index {junction_index} out of range for {} samples",
            merged.len()
        )));
    }
    let max_step = merged
        .samples()
        .zip(merged.samples().skip(1))
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .map(|(a, b)| (b - a).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);

    let lo = junction_index.saturating_sub(JUNCTION_HALF_WINDOW);
    let hi = junction_index + JUNCTION_HALF_WINDOW;
    let mut near = 0.0f64;
    let mut elsewhere = Vec::new();
    for (i, v) in second_difference_norms(merged).into_iter().enumerate() {
        let sample = i + 1;
        if (lo..=hi).contains(&sample) {
            near = near.max(v);
        } else {
            elsewhere.push(v);
        }
    }
    Ok(JunctionMetrics {
        junction_index,
        max_step,
        junction_second_diff: near,
        p95_second_diff_elsewhere: percentile(&mut elsewhere, 95.0),
    })
}

/// Nearest-rank percentile; zero for an empty slice.
pub fn percentile(values: &mut [f64], pct: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let rank = ((pct / 100.0) * values.len() as f64).ceil() as usize;
    values[rank.clamp(1, values.len()) - 1]
}
