//! Uniformly sampled d-dimensional trajectories.
//!
//! Indices in this module are 0-based. A "prefix through `k`" keeps samples
//! `0..=k`, a "suffix from `k`" keeps samples `k..`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative tolerance under which two sample periods are considered equal.
pub const DT_REL_TOL: f64 = 1e-9;

/// An ordered list of `len()` samples, each a `dims()`-vector, taken every `dt`
/// seconds. Samples are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dt: f64,
    dims: usize,
    data: Vec<f64>,
}

/// Velocity and acceleration estimates with the same layout as the source.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedSignals {
    pub velocity: Trajectory,
    pub acceleration: Trajectory,
}

/// Sample of a trajectory closest to a query point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nearest {
    pub index: usize,
    pub distance: f64,
}

/// Where the deficient and corrective trajectories were cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    /// Last retained sample of the deficient trajectory.
    pub deficient_cut: usize,
    /// First retained sample of the corrective trajectory.
    pub corrective_cut: usize,
    /// Distance between the two samples above.
    pub min_distance: f64,
}

impl Trajectory {
    /// Builds a trajectory from row vectors.
    pub fn new(dt: f64, samples: &[Vec<f64>]) -> Result<Self> {
        let dims = samples.first().map_or(0, Vec::len);
        if let Some(k) = samples.iter().position(|s| s.len() != dims) {
            return Err(invalid(format!(
                "sample {k} has {} components, expected {dims}",
                samples[k].len()
            )));
        }
        Self::from_flat(dt, dims, samples.concat())
    }

    /// Builds a trajectory from row-major data of `dims` columns.
    pub fn from_flat(dt: f64, dims: usize, data: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid(format!("sample period must be positive, got {dt}")));
        }
        if dims == 0 {
            return Err(invalid("trajectory needs at least one dimension"));
        }
        if !data.len().is_multiple_of(dims) {
            return Err(invalid("data length is not a multiple of the dimension"));
        }
        let len = data.len() / dims;
        if len < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: len,
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!(
                "non-finite value in sample {}, component {}",
                i / dims,
                i % dims
            )));
        }
        Ok(Self { dt, dims, data })
    }

    /// Builds a trajectory from per-dimension columns of equal length.
    pub fn from_columns(dt: f64, columns: &[Vec<f64>]) -> Result<Self> {
        let len = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != len) {
            return Err(invalid("columns have different lengths"));
        }
        let dims = columns.len();
        let mut data = Vec::with_capacity(len * dims);
        for k in 0..len {
            data.extend(columns.iter().map(|c| c[k]));
        }
        Self::from_flat(dt, dims, data)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dims
    }

    /// Always false; a valid trajectory holds at least two samples.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Time between the first and the last sample.
    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.data[k * self.dims..(k + 1) * self.dims]
    }

    pub fn first(&self) -> &[f64] {
        self.sample(0)
    }

    pub fn last(&self) -> &[f64] {
        self.sample(self.len() - 1)
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dims)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.samples().map(|s| s[j]).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.samples().map(<[f64]>::to_vec).collect()
    }

    /// Linearly interpolates the trajectory at a new sample period.
    ///
    /// The number of intervals is `round(duration / dt_target)` (at least 1)
    /// and the effective period is adjusted so that the first and last
    /// samples land exactly on the original ones. A target equal to the
    /// current period returns an identical copy.
    pub fn resample_uniform(&self, dt_target: f64) -> Result<Self> {
        if !(dt_target.is_finite() && dt_target > 0.0) {
            return Err(invalid(format!(
                "target sample period must be positive, got {dt_target}"
            )));
        }
        if same_period(self.dt, dt_target) {
            return Ok(self.clone());
        }
        let duration = self.duration();
        let intervals = ((duration / dt_target).round() as usize).max(1);
        let new_dt = duration / intervals as f64;
        let last = self.len() - 1;

        let mut data = Vec::with_capacity((intervals + 1) * self.dims);
        data.extend_from_slice(self.first());
        for j in 1..intervals {
            let pos = j as f64 * new_dt / self.dt;
            let i = (pos.floor() as usize).min(last - 1);
            let frac = pos - i as f64;
            let (a, b) = (self.sample(i), self.sample(i + 1));
            data.extend(a.iter().zip(b).map(|(a, b)| a + frac * (b - a)));
        }
        data.extend_from_slice(self.last());
        Self::from_flat(new_dt, self.dims, data)
    }

    /// Fourth-order finite differences: five-point central stencils in the
    /// interior and five-point one-sided stencils at the two samples nearest
    /// each end. Trajectories of 3 or 4 samples fall back to second-order
    /// central/one-sided differences. Acceleration applies the same scheme to
    /// the velocity.
    pub fn finite_diff(&self) -> Result<DerivedSignals> {
        if self.len() < 3 {
            return Err(Error::TooFewSamples {
                needed: 3,
                got: self.len(),
            });
        }
        let velocity = self.differentiate();
        let acceleration = velocity.differentiate();
        Ok(DerivedSignals {
            velocity,
            acceleration,
        })
    }

    fn differentiate(&self) -> Self {
        let n = self.len();
        let d = self.dims;
        let y = |k: usize, j: usize| self.data[k * d + j];
        let mut out = vec![0.0; self.data.len()];
        for j in 0..d {
            if n < 5 {
                let h2 = 2.0 * self.dt;
                out[j] = (-3.0 * y(0, j) + 4.0 * y(1, j) - y(2, j)) / h2;
                for k in 1..n - 1 {
                    out[k * d + j] = (y(k + 1, j) - y(k - 1, j)) / h2;
                }
                out[(n - 1) * d + j] = (3.0 * y(n - 1, j) - 4.0 * y(n - 2, j) + y(n - 3, j)) / h2;
                continue;
            }
            let h12 = 12.0 * self.dt;
            out[j] = (-25.0 * y(0, j) + 48.0 * y(1, j) - 36.0 * y(2, j) + 16.0 * y(3, j)
                - 3.0 * y(4, j))
                / h12;
            out[d + j] =
                (-3.0 * y(0, j) - 10.0 * y(1, j) + 18.0 * y(2, j) - 6.0 * y(3, j) + y(4, j)) / h12;
            for k in 2..n - 2 {
                out[k * d + j] =
                    (y(k - 2, j) - 8.0 * y(k - 1, j) + 8.0 * y(k + 1, j) - y(k + 2, j)) / h12;
            }
            out[(n - 2) * d + j] = (3.0 * y(n - 1, j) + 10.0 * y(n - 2, j) - 18.0 * y(n - 3, j)
                + 6.0 * y(n - 4, j)
                - y(n - 5, j))
                / h12;
            out[(n - 1) * d + j] = (25.0 * y(n - 1, j) - 48.0 * y(n - 2, j) + 36.0 * y(n - 3, j)
                - 16.0 * y(n - 4, j)
                + 3.0 * y(n - 5, j))
                / h12;
        }
        Self {
            dt: self.dt,
            dims: d,
            data: out,
        }
    }

    /// Sample with the smallest Euclidean distance to `point`; ties go to the
    /// smallest index.
    pub fn nearest_sample(&self, point: &[f64]) -> Result<Nearest> {
        if point.len() != self.dims {
            return Err(invalid(format!(
                "point has {} components, trajectory has {}",
                point.len(),
                self.dims
            )));
        }
        let mut best = (0, f64::INFINITY);
        for (k, s) in self.samples().enumerate() {
            let d2: f64 = s.iter().zip(point).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best.1 {
                best = (k, d2);
            }
        }
        Ok(Nearest {
            index: best.0,
            distance: best.1.sqrt(),
        })
    }

    /// Samples `0..=through`.
    pub fn take_prefix(&self, through: usize) -> Result<Self> {
        if through >= self.len() {
            return Err(invalid(format!(
                "prefix end {through} out of range for {} samples",
                self.len()
            )));
        }
        if through == 0 {
            return Err(Error::TooFewSamples { needed: 2, got: 1 });
        }
        Ok(Self {
            dt: self.dt,
            dims: self.dims,
            data: self.data[..(through + 1) * self.dims].to_vec(),
        })
    }

    /// Samples `from..`.
    pub fn take_suffix(&self, from: usize) -> Result<Self> {
        if from >= self.len() {
            return Err(invalid(format!(
                "suffix start {from} out of range for {} samples",
                self.len()
            )));
        }
        if from == self.len() - 1 {
            return Err(Error::TooFewSamples { needed: 2, got: 1 });
        }
        Ok(Self {
            dt: self.dt,
            dims: self.dims,
            data: self.data[from * self.dims..].to_vec(),
        })
    }

    /// Appends `other` after `self`. Both must share dimension and period.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(invalid(
                "cannot concatenate trajectories of different dimension",
            ));
        }
        if !same_period(self.dt, other.dt) {
            return Err(invalid(format!(
                "cannot concatenate trajectories sampled at {} s and {} s",
                self.dt, other.dt
            )));
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Self {
            dt: self.dt,
            dims: self.dims,
            data,
        })
    }

    /// Same samples, with the period replaced.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::from_flat(dt, self.dims, self.data.clone())
    }
}

pub(crate) fn same_period(a: f64, b: f64) -> bool {
    (a - b).abs() <= DT_REL_TOL * a.abs().max(b.abs())
}
