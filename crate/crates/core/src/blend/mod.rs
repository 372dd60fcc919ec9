//! Constrained smoothing of the retained deficient prefix.
//!
//! Given the prefix `y_dr` (M samples) and the first two samples `h1, h2` of
//! the retained corrective part, each dimension solves
//!
//! ```text
//! minimize    |y_dr - y_m|² + lambda |T y_m|²
//! subject to  y_m[M-1] = h1
//!             y_m[M-1] - y_m[M-2] = h2 - h1
//! ```
//!
//! where `T` is the (M-2) x M second-difference operator. The two constraints
//! pin the last two unknowns, so the remaining M-2 unknowns solve an
//! unconstrained problem whose normal matrix `I + lambda T_fᵀ T_f` is
//! symmetric positive definite and pentadiagonal. That matrix depends only on
//! M and lambda, so it is factored once and reused for every dimension.

mod penta;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::trajectory::Trajectory;
use penta::SymPenta;

/// Second-difference stencil.
const STENCIL: [f64; 3] = [1.0, -2.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendConfig {
    /// Weight of the curvature penalty.
    pub lambda: f64,
}

impl BlendConfig {
    /// Smooths over roughly lambda^(1/4) ≈ 6 samples, about 20 ms at 250 Hz.
    /// The objective is separable and quadratic per dimension, so the result
    /// does not depend on coordinate units.
    pub const DEFAULT_LAMBDA: f64 = 1e3;

    pub fn new(lambda: f64) -> Result<Self> {
        let c = Self { lambda };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(invalid(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

impl Default for BlendConfig {
    fn default() -> Self {
        Self {
            lambda: Self::DEFAULT_LAMBDA,
        }
    }
}

/// The (m-2) x m second-order finite-difference operator, rows `[1, -2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecondDifference {
    len: usize,
}

impl SecondDifference {
    pub fn new(len: usize) -> Result<Self> {
        if len < 3 {
            return Err(invalid(format!(
                "second differences need at least 3 samples, got {len}"
            )));
        }
        Ok(Self { len })
    }

    pub fn rows(&self) -> usize {
        self.len - 2
    }

    pub fn cols(&self) -> usize {
        self.len
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.len, "operand length mismatch");
        y.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect()
    }

    /// `Tᵀ r` for a vector of `rows()` entries.
    pub fn apply_transpose(&self, r: &[f64]) -> Vec<f64> {
        assert_eq!(r.len(), self.rows(), "operand length mismatch");
        let mut out = vec![0.0; self.len];
        for (row, v) in r.iter().enumerate() {
            for (k, c) in STENCIL.iter().enumerate() {
                out[row + k] += c * v;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows(), self.len, |r, c| {
            if c >= r && c - r < 3 {
                STENCIL[c - r]
            } else {
                0.0
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlendResult {
    /// Blended prefix, same length and period as the input prefix.
    pub y_m: Trajectory,
    /// Objective summed over dimensions.
    pub objective_value: f64,
    /// `y_m[M-1] - h1` per dimension.
    pub position_residual: Vec<f64>,
    /// `(y_m[M-1] - y_m[M-2]) - (h2 - h1)` per dimension.
    pub direction_residual: Vec<f64>,
    /// Largest gradient component of the objective with respect to the free
    /// samples `0..M-2` (KKT stationarity).
    pub stationarity: f64,
}

impl BlendResult {
    pub fn max_constraint_residual(&self) -> f64 {
        self.position_residual
            .iter()
            .chain(&self.direction_residual)
            .fold(0.0, |m, r| m.max(r.abs()))
    }
}

fn check_inputs(y_dr: &Trajectory, head: [&[f64]; 2], config: &BlendConfig) -> Result<()> {
    config.validate()?;
    if y_dr.len() < 3 {
        return Err(Error::PrefixTooShort { len: y_dr.len() });
    }
    for h in head {
        if h.len() != y_dr.dims() {
            return Err(invalid(format!(
                "corrective sample has {} components, prefix has {}",
                h.len(),
                y_dr.dims()
            )));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(invalid("corrective samples must be finite"));
        }
    }
    Ok(())
}

/// Blends `y_dr` so that it ends at `head[0]` heading along
/// `head[1] - head[0]`.
pub fn blend(y_dr: &Trajectory, head: [&[f64]; 2], config: &BlendConfig) -> Result<BlendResult> {
    check_inputs(y_dr, head, config)?;
    let m = y_dr.len();
    let free = m - 2;
    let lambda = config.lambda;

    let mut normal = SymPenta::identity(free);
    for row in 0..m - 2 {
        for p in 0..3 {
            for q in p..3 {
                if row + q < free {
                    normal.add_upper(row + p, row + q, lambda * STENCIL[p] * STENCIL[q]);
                }
            }
        }
    }
    let ldl = normal.factor()?;

    let mut columns = Vec::with_capacity(y_dr.dims());
    let mut rhs = vec![0.0; free];
    for j in 0..y_dr.dims() {
        let last = head[0][j];
        let before = last - (head[1][j] - head[0][j]);
        let pinned = [before, last];

        for (k, r) in rhs.iter_mut().enumerate() {
            *r = y_dr.sample(k)[j];
        }
        // Rows of T that touch both free and pinned samples move the pinned
        // contribution to the right-hand side.
        for row in m.saturating_sub(4)..m - 2 {
            let pinned_part: f64 = (0..3)
                .filter(|&q| row + q >= free)
                .map(|q| STENCIL[q] * pinned[row + q - free])
                .sum();
            for p in 0..3 {
                if row + p < free {
                    rhs[row + p] -= lambda * STENCIL[p] * pinned_part;
                }
            }
        }
        ldl.solve_in_place(&mut rhs);

        let mut col = Vec::with_capacity(m);
        col.extend_from_slice(&rhs);
        col.extend_from_slice(&pinned);
        columns.push(col);
    }
    finish(y_dr, head, lambda, columns)
}

/// Reference solver: assembles and factors the full (M+2) x (M+2) KKT system
/// per dimension with dense LU. Quadratic memory and cubic time; meant for
/// cross-checking [`blend`].
pub fn blend_dense_kkt(
    y_dr: &Trajectory,
    head: [&[f64]; 2],
    config: &BlendConfig,
) -> Result<BlendResult> {
    check_inputs(y_dr, head, config)?;
    let m = y_dr.len();
    let t = SecondDifference::new(m)?.to_dense();
    let hessian = (DMatrix::identity(m, m) + config.lambda * t.transpose() * &t) * 2.0;

    let mut kkt = DMatrix::zeros(m + 2, m + 2);
    kkt.view_mut((0, 0), (m, m)).copy_from(&hessian);
    let mut a = DMatrix::zeros(2, m);
    a[(0, m - 1)] = 1.0;
    a[(1, m - 1)] = 1.0;
    a[(1, m - 2)] = -1.0;
    kkt.view_mut((m, 0), (2, m)).copy_from(&a);
    kkt.view_mut((0, m), (m, 2)).copy_from(&a.transpose());
    let lu = kkt.lu();

    let mut columns = Vec::with_capacity(y_dr.dims());
    for j in 0..y_dr.dims() {
        let mut rhs = DVector::zeros(m + 2);
        for k in 0..m {
            rhs[k] = 2.0 * y_dr.sample(k)[j];
        }
        rhs[m] = head[0][j];
        rhs[m + 1] = head[1][j] - head[0][j];
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Solver("singular KKT matrix".into()))?;
        columns.push(sol.rows(0, m).iter().copied().collect());
    }
    finish(y_dr, head, config.lambda, columns)
}

fn finish(
    y_dr: &Trajectory,
    head: [&[f64]; 2],
    lambda: f64,
    columns: Vec<Vec<f64>>,
) -> Result<BlendResult> {
    let m = y_dr.len();
    let op = SecondDifference::new(m)?;
    let mut objective_value = 0.0;
    let mut stationarity: f64 = 0.0;
    let mut position_residual = Vec::with_capacity(columns.len());
    let mut direction_residual = Vec::with_capacity(columns.len());
    for (j, col) in columns.iter().enumerate() {
        let data = y_dr.column(j);
        let curvature = op.apply(col);
        objective_value += data
            .iter()
            .zip(col)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            + lambda * curvature.iter().map(|c| c * c).sum::<f64>();
        let penalty_grad = op.apply_transpose(&curvature);
        for k in 0..m - 2 {
            let g = 2.0 * (col[k] - data[k]) + 2.0 * lambda * penalty_grad[k];
            stationarity = stationarity.max(g.abs());
        }
        position_residual.push(col[m - 1] - head[0][j]);
        direction_residual.push((col[m - 1] - col[m - 2]) - (head[1][j] - head[0][j]));
    }
    if columns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite blend solution".into()));
    }
    Ok(BlendResult {
        y_m: Trajectory::from_columns(y_dr.dt(), &columns)?,
        objective_value,
        position_residual,
        direction_residual,
        stationarity,
    })
}
