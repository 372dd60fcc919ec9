//! Discrete dynamical movement primitives.
//!
//! One canonical phase `x` (decaying from 1 toward 0) drives an independent
//! transformation system per dimension:
//!
//! ```text
//! tau * dy/dt = z
//! tau * dz/dt = alpha_z * (beta_z * (g - y) - z) + f(x)
//! tau * dx/dt = -alpha_x * x
//! f(x) = sum_i(psi_i(x) * w_i) / sum_i(psi_i(x)) * x * (g - y0)
//! psi_i(x) = exp(-(x - c_i)^2 / (2 * sigma_i^2))
//! ```
//!
//! Rollouts integrate the system with explicit Euler at the requested sample
//! period; fitting solves one weighted least-squares problem per basis
//! function and dimension.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::trajectory::Trajectory;

/// Dimensions whose start-to-goal offset is below this get zero weights.
pub const EPS_SPAN: f64 = 1e-9;
/// Lower bound on the activation sum before normalizing the forcing term.
pub const EPS_ACT: f64 = 1e-12;
/// Any state component beyond this magnitude is treated as divergence.
pub const OVERFLOW_GUARD: f64 = 1e12;
/// Sample period of the robot controller the defaults are tuned for (250 Hz).
pub const DEFAULT_DT: f64 = 0.004;
pub const DEFAULT_N_BASIS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Gains {
    pub alpha_z: f64,
    pub beta_z: f64,
    pub alpha_x: f64,
}

impl Default for Gains {
    /// Critically damped transformation system: `beta_z = alpha_z / 4`.
    fn default() -> Self {
        Self {
            alpha_z: 25.0,
            beta_z: 6.25,
            alpha_x: 1.0,
        }
    }
}

impl Gains {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha_z", self.alpha_z),
            ("beta_z", self.beta_z),
            ("alpha_x", self.alpha_x),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub created_at: String,
    pub context: String,
}

/// Every parameter of one d-dimensional DMP.
///
/// The serialized form is the DMP JSON document: `weights` has one row per
/// dimension and `n_basis` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmpParams {
    pub dims: usize,
    pub tau: f64,
    pub alpha_z: f64,
    pub beta_z: f64,
    pub alpha_x: f64,
    pub n_basis: usize,
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    pub goal: Vec<f64>,
    pub start: Vec<f64>,
    pub metadata: Metadata,
}

impl DmpParams {
    /// DMP with all weights zero and the given basis layout.
    pub fn zero_weights(
        start: Vec<f64>,
        goal: Vec<f64>,
        tau: f64,
        gains: Gains,
        layout: BasisLayout,
    ) -> Result<Self> {
        let dims = goal.len();
        let params = Self {
            dims,
            tau,
            alpha_z: gains.alpha_z,
            beta_z: gains.beta_z,
            alpha_x: gains.alpha_x,
            n_basis: layout.centers.len(),
            weights: vec![vec![0.0; layout.centers.len()]; dims],
            centers: layout.centers,
            widths: layout.widths,
            goal,
            start,
            metadata: Metadata::default(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn gains(&self) -> Gains {
        Gains {
            alpha_z: self.alpha_z,
            beta_z: self.beta_z,
            alpha_x: self.alpha_x,
        }
    }

    /// Checks every structural and numeric invariant.
    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(invalid("dims must be at least 1"));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(invalid(format!("tau must be positive, got {}", self.tau)));
        }
        self.gains().validate()?;
        if self.n_basis == 0 {
            return Err(invalid("n_basis must be at least 1"));
        }
        if self.centers.len() != self.n_basis || self.widths.len() != self.n_basis {
            return Err(invalid("centers and widths must have n_basis entries"));
        }
        if self
            .centers
            .iter()
            .any(|c| !(c.is_finite() && *c > 0.0 && *c <= 1.0))
        {
            return Err(invalid("centers must lie in (0, 1]"));
        }
        if self.centers.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("centers must be strictly decreasing"));
        }
        if self.widths.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(invalid("widths must be positive"));
        }
        if self.weights.len() != self.dims || self.weights.iter().any(|r| r.len() != self.n_basis) {
            return Err(invalid(format!(
                "weights must be a {} x {} matrix",
                self.dims, self.n_basis
            )));
        }
        if self.weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(invalid("weights must be finite"));
        }
        for (name, v) in [("goal", &self.goal), ("start", &self.start)] {
            if v.len() != self.dims {
                return Err(invalid(format!(
                    "{name} must have {} components",
                    self.dims
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Gaussian activation of every basis function at phase `x`.
    pub fn basis_activations(&self, x: f64) -> Vec<f64> {
        self.centers
            .iter()
            .zip(&self.widths)
            .map(|(c, s)| gaussian(x, *c, *s))
            .collect()
    }

    /// Forcing term at phase `x`. Fails when the activation sum is below
    /// [`EPS_ACT`], i.e. `x` lies far outside the span of the centers.
    pub fn forcing_term(&self, x: f64) -> Result<Vec<f64>> {
        let psi = self.basis_activations(x);
        let sum: f64 = psi.iter().sum();
        if !(sum >= EPS_ACT) {
            return Err(Error::DegeneratePhase { phase: x, sum });
        }
        Ok(self.forcing_from(&psi, sum, x))
    }

    /// Forcing term with the activation sum clamped from below by
    /// [`EPS_ACT`]. Identical to [`forcing_term`](Self::forcing_term) where
    /// that is defined and decays continuously to zero beyond.
    fn forcing_guarded(&self, x: f64, psi: &mut [f64]) -> Vec<f64> {
        let mut sum = 0.0;
        for ((p, c), s) in psi.iter_mut().zip(&self.centers).zip(&self.widths) {
            *p = gaussian(x, *c, *s);
            sum += *p;
        }
        self.forcing_from(psi, sum.max(EPS_ACT), x)
    }

    fn forcing_from(&self, psi: &[f64], sum: f64, x: f64) -> Vec<f64> {
        self.weights
            .iter()
            .zip(self.goal.iter().zip(&self.start))
            .map(|(w, (g, y0))| {
                let mix: f64 = w.iter().zip(psi).map(|(w, p)| w * p).sum::<f64>() / sum;
                mix * x * (g - y0)
            })
            .collect()
    }

    /// Copy with the goal replaced.
    pub fn set_goal(&self, goal: &[f64]) -> Result<Self> {
        if goal.len() != self.dims {
            return Err(invalid(format!(
                "goal has {} components, DMP has {}",
                goal.len(),
                self.dims
            )));
        }
        if goal.iter().any(|g| !g.is_finite()) {
            return Err(invalid("goal must be finite"));
        }
        Ok(Self {
            goal: goal.to_vec(),
            ..self.clone()
        })
    }

    /// Copy with the time constant replaced.
    pub fn set_tau(&self, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid(format!("tau must be positive, got {tau}")));
        }
        Ok(Self {
            tau,
            ..self.clone()
        })
    }
}

#[inline]
fn gaussian(x: f64, c: f64, sigma: f64) -> f64 {
    let u = x - c;
    (-u * u / (2.0 * sigma * sigma)).exp()
}

/// Centers and widths of the Gaussian basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisLayout {
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
}

impl BasisLayout {
    /// Centers at the phase values reached at `n` equally spaced instants over
    /// `[0, duration]`; each width is half the gap to the next center, the
    /// last one copying its neighbor.
    pub fn uniform_in_time(n: usize, duration: f64, tau: f64, alpha_x: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n_basis must be at least 1"));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(invalid(format!(
                "duration must be positive, got {duration}"
            )));
        }
        let phase_at = |t: f64| (-alpha_x * t / tau).exp();
        if n == 1 {
            let width = (1.0 - phase_at(duration)) / 2.0;
            return Ok(Self {
                centers: vec![1.0],
                widths: vec![width.max(f64::MIN_POSITIVE)],
            });
        }
        let centers: Vec<f64> = (0..n)
            .map(|i| phase_at(duration * i as f64 / (n - 1) as f64))
            .collect();
        let mut widths: Vec<f64> = centers
            .windows(2)
            .map(|w| (w[0] - w[1]).abs() / 2.0)
            .collect();
        widths.push(widths[n - 2]);
        Ok(Self { centers, widths })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Time constant; `None` uses the demonstration duration.
    pub tau: Option<f64>,
    pub gains: Gains,
    pub n_basis: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tau: None,
            gains: Gains::default(),
            n_basis: DEFAULT_N_BASIS,
        }
    }
}

/// Intermediate quantities of the weight regression.
#[derive(Debug, Clone)]
pub struct FitWorkspace {
    pub tau: f64,
    pub layout: BasisLayout,
    /// Phase at every demonstration sample.
    pub phase: Vec<f64>,
    /// `activations[k][i]`: basis `i` at sample `k`.
    pub activations: Vec<Vec<f64>>,
    /// `s[j][k] = phase[k] * (g_j - y0_j)`.
    pub s: Vec<Vec<f64>>,
    /// `f_target[j][k]`, the forcing that reproduces the demonstration under
    /// explicit Euler integration at the demonstration's sample period.
    pub f_target: Vec<Vec<f64>>,
}

impl FitWorkspace {
    pub fn new(demo: &Trajectory, opts: &FitOptions) -> Result<Self> {
        if demo.len() < 3 {
            return Err(Error::TooFewSamples {
                needed: 3,
                got: demo.len(),
            });
        }
        opts.gains.validate()?;
        let tau = opts.tau.unwrap_or_else(|| demo.duration());
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid(format!("tau must be positive, got {tau}")));
        }
        let Gains {
            alpha_z,
            beta_z,
            alpha_x,
        } = opts.gains;
        let layout = BasisLayout::uniform_in_time(opts.n_basis, demo.duration(), tau, alpha_x)?;

        let h = demo.dt() / tau;
        let mut phase = Vec::with_capacity(demo.len());
        let mut x = 1.0;
        for _ in 0..demo.len() {
            phase.push(x);
            x -= h * alpha_x * x;
        }
        let activations = phase
            .iter()
            .map(|&x| {
                layout
                    .centers
                    .iter()
                    .zip(&layout.widths)
                    .map(|(c, s)| gaussian(x, *c, *s))
                    .collect()
            })
            .collect();

        // Differences matched to the explicit Euler integrator used by
        // `rollout`, so that fitting inverts it exactly wherever the basis can
        // represent the forcing: z_k = (y_{k+1} - y_k) / h and
        // f_k = (z_{k+1} - z_k) / h - alpha_z * (beta_z * (g - y_k) - z_k).
        // The last two samples lack forward neighbors and reuse the last
        // available target.
        let n = demo.len();
        let (g, y0) = (demo.last(), demo.first());
        let mut s = Vec::with_capacity(demo.dims());
        let mut f_target = Vec::with_capacity(demo.dims());
        for j in 0..demo.dims() {
            let span = g[j] - y0[j];
            s.push(phase.iter().map(|x| x * span).collect());
            let y = demo.column(j);
            let mut f: Vec<f64> = (0..n - 2)
                .map(|k| {
                    let z0 = (y[k + 1] - y[k]) / h;
                    let z1 = (y[k + 2] - y[k + 1]) / h;
                    (z1 - z0) / h - alpha_z * (beta_z * (g[j] - y[k]) - z0)
                })
                .collect();
            let tail = f[n - 3];
            f.extend([tail, tail]);
            f_target.push(f);
        }
        Ok(Self {
            tau,
            layout,
            phase,
            activations,
            s,
            f_target,
        })
    }

    /// Weighted least-squares weight of basis `i` in dimension `j`.
    pub fn weight(&self, j: usize, i: usize) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for ((psi, s), f) in self
            .activations
            .iter()
            .zip(&self.s[j])
            .zip(&self.f_target[j])
        {
            num += psi[i] * s * f;
            den += psi[i] * s * s;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// Weighted squared residual of basis `i` in dimension `j` for weight `w`.
    pub fn residual(&self, j: usize, i: usize, w: f64) -> f64 {
        self.activations
            .iter()
            .zip(&self.s[j])
            .zip(&self.f_target[j])
            .map(|((psi, s), f)| psi[i] * (f - s * w).powi(2))
            .sum()
    }
}

/// Fits a DMP to a demonstration. The goal is the last sample and the start
/// the first.
pub fn fit(demo: &Trajectory, opts: &FitOptions) -> Result<DmpParams> {
    let (g, y0) = (demo.last(), demo.first());
    let active: Vec<bool> = g
        .iter()
        .zip(y0)
        .map(|(g, y)| (g - y).abs() >= EPS_SPAN)
        .collect();
    if !active.iter().any(|a| *a) {
        return Err(Error::DegenerateDemonstration);
    }
    let ws = FitWorkspace::new(demo, opts)?;
    let n_basis = ws.layout.centers.len();
    let weights: Vec<Vec<f64>> = active
        .iter()
        .enumerate()
        .map(|(j, &on)| {
            (0..n_basis)
                .map(|i| if on { ws.weight(j, i) } else { 0.0 })
                .collect()
        })
        .collect();
    if weights.iter().flatten().any(|w| !w.is_finite()) {
        return Err(Error::Solver("non-finite DMP weight".into()));
    }
    let params = DmpParams {
        dims: demo.dims(),
        tau: ws.tau,
        alpha_z: opts.gains.alpha_z,
        beta_z: opts.gains.beta_z,
        alpha_x: opts.gains.alpha_x,
        n_basis,
        centers: ws.layout.centers,
        widths: ws.layout.widths,
        weights,
        goal: g.to_vec(),
        start: y0.to_vec(),
        metadata: Metadata {
            created_at: String::new(),
            context: format!(
                "fitted to a {}-sample demonstration at dt = {} s",
                demo.len(),
                demo.dt()
            ),
        },
    };
    params.validate()?;
    Ok(params)
}

/// Integration state of a DMP.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutState {
    pub y: Vec<f64>,
    /// Scaled velocity, `tau * dy/dt`.
    pub z: Vec<f64>,
    /// Canonical phase.
    pub x: f64,
}

impl RolloutState {
    pub fn at_rest(y: &[f64]) -> Self {
        Self {
            y: y.to_vec(),
            z: vec![0.0; y.len()],
            x: 1.0,
        }
    }

    /// One explicit Euler step of length `dt`. `psi` is scratch space of
    /// `n_basis` entries.
    pub fn step(&mut self, params: &DmpParams, dt: f64, psi: &mut [f64]) {
        let h = dt / params.tau;
        let f = params.forcing_guarded(self.x, psi);
        for j in 0..params.dims {
            let (y, z) = (self.y[j], self.z[j]);
            self.y[j] = y + h * z;
            self.z[j] =
                z + h * (params.alpha_z * (params.beta_z * (params.goal[j] - y) - z) + f[j]);
        }
        self.x -= h * params.alpha_x * self.x;
    }
}

/// Integrates the DMP from `y_start` at rest for `round(duration / dt)` steps.
/// The result holds the initial sample plus one sample per step.
pub fn rollout(params: &DmpParams, y_start: &[f64], dt: f64, duration: f64) -> Result<Trajectory> {
    params.validate()?;
    if y_start.len() != params.dims {
        return Err(invalid(format!(
            "start has {} components, DMP has {}",
            y_start.len(),
            params.dims
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    if !(duration.is_finite() && duration >= dt * (1.0 - 1e-9)) {
        return Err(invalid(format!(
            "duration {duration} is shorter than dt {dt}"
        )));
    }
    if params.alpha_x * dt / params.tau >= 1.0 {
        return Err(invalid(format!(
            "dt = {dt} is too coarse for tau = {} (phase would not stay positive)",
            params.tau
        )));
    }
    let steps = ((duration / dt).round() as usize).max(1);
    let mut state = RolloutState::at_rest(y_start);
    let mut psi = vec![0.0; params.n_basis];
    let mut data = Vec::with_capacity((steps + 1) * params.dims);
    data.extend_from_slice(&state.y);
    for step in 1..=steps {
        state.step(params, dt, &mut psi);
        if state
            .y
            .iter()
            .chain(&state.z)
            .any(|v| !(v.abs() <= OVERFLOW_GUARD))
        {
            return Err(Error::Unstable { step });
        }
        data.extend_from_slice(&state.y);
    }
    Trajectory::from_flat(dt, params.dims, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_basis(w: f64, start: f64, goal: f64) -> DmpParams {
        let mut p = DmpParams::zero_weights(
            vec![start],
            vec![goal],
            1.0,
            Gains::default(),
            BasisLayout {
                centers: vec![1.0],
                widths: vec![0.3],
            },
        )
        .unwrap();
        p.weights[0][0] = w;
        p
    }

    fn layout(n: usize) -> BasisLayout {
        BasisLayout::uniform_in_time(n, 1.0, 1.0, 1.0).unwrap()
    }

    fn min_jerk(t: f64) -> f64 {
        10.0 * t.powi(3) - 15.0 * t.powi(4) + 6.0 * t.powi(5)
    }

    fn rms_over_span(a: &Trajectory, b: &Trajectory, j: usize) -> f64 {
        let n = a.len().min(b.len());
        let mse: f64 = (0..n)
            .map(|k| (a.sample(k)[j] - b.sample(k)[j]).powi(2))
            .sum::<f64>()
            / n as f64;
        let col = b.column(j);
        let span = col.iter().cloned().fold(f64::MIN, f64::max)
            - col.iter().cloned().fold(f64::MAX, f64::min);
        mse.sqrt() / span
    }

    #[test]
    fn activations_hit_one_at_center() {
        let p = DmpParams::zero_weights(vec![0.0], vec![1.0], 1.0, Gains::default(), layout(10))
            .unwrap();
        for i in 0..10 {
            let psi = p.basis_activations(p.centers[i]);
            assert_eq!(psi[i], 1.0);
            let psi = p.basis_activations(p.centers[i] + p.widths[i]);
            assert!((psi[i] - (-0.5f64).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn activations_match_direct_formula() {
        let p = DmpParams::zero_weights(vec![0.0], vec![1.0], 1.0, Gains::default(), layout(10))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x: f64 = rng.random_range(0.3..1.0);
            let psi = p.basis_activations(x);
            for i in 0..10 {
                let c = p.centers[i];
                let s = p.widths[i];
                let direct = (-(1.0 / (2.0 * s.powi(2))) * (x - c).powi(2)).exp();
                assert!((psi[i] - direct).abs() <= 1e-15);
                assert!(psi[i] > 0.0 && psi[i] <= 1.0);
            }
        }
    }

    #[test]
    fn forcing_term_examples() {
        let p = one_basis(2.0, 0.0, 3.0);
        assert!((p.forcing_term(0.5).unwrap()[0] - 3.0).abs() < 1e-15);
        let p = one_basis(0.0, 0.0, 3.0);
        assert_eq!(p.forcing_term(0.5).unwrap(), vec![0.0]);
        let p = one_basis(7.0, 2.0, 2.0);
        assert_eq!(p.forcing_term(0.5).unwrap(), vec![0.0]);
    }

    #[test]
    fn forcing_term_rejects_dead_phase() {
        let p = DmpParams::zero_weights(vec![0.0], vec![1.0], 1.0, Gains::default(), layout(50))
            .unwrap();
        assert!(matches!(
            p.forcing_term(1e-3),
            Err(Error::DegeneratePhase { .. })
        ));
    }

    #[test]
    fn layout_is_decreasing_with_positive_widths() {
        let l = layout(50);
        assert_eq!(l.centers[0], 1.0);
        assert!((l.centers[49] - (-1.0f64).exp()).abs() < 1e-15);
        assert!(l.centers.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(l.widths[49], l.widths[48]);
        assert!(l.widths.iter().all(|w| *w > 0.0));
        assert_eq!(
            BasisLayout::uniform_in_time(1, 1.0, 1.0, 1.0)
                .unwrap()
                .centers,
            vec![1.0]
        );
    }

    #[test]
    fn activation_sum_positive_over_demo_phase_range() {
        let p = DmpParams::zero_weights(vec![0.0], vec![1.0], 1.0, Gains::default(), layout(50))
            .unwrap();
        let x_end = (-1.0f64).exp();
        for k in 0..=1000 {
            let x = x_end + (1.0 - x_end) * k as f64 / 1000.0;
            let sum: f64 = p.basis_activations(x).iter().sum();
            assert!(sum > 0.5, "sum {sum} at {x}");
        }
    }

    #[test]
    fn zero_weights_at_goal_is_equilibrium() {
        let p = DmpParams::zero_weights(
            vec![0.3, -2.0],
            vec![0.3, -2.0],
            1.0,
            Gains::default(),
            layout(20),
        )
        .unwrap();
        let r = rollout(&p, &[0.3, -2.0], DEFAULT_DT, 2.0).unwrap();
        for s in r.samples() {
            assert!((s[0] - 0.3).abs() <= 1e-12 && (s[1] + 2.0).abs() <= 1e-12);
        }
    }

    /// Critically damped response from rest: e(t) = (1 + w t) exp(-w t),
    /// w = alpha_z / (2 tau).
    #[test]
    fn zero_weights_follow_critically_damped_response() {
        let p = DmpParams::zero_weights(vec![0.0], vec![1.0], 1.0, Gains::default(), layout(20))
            .unwrap();
        let r = rollout(&p, &[0.0], DEFAULT_DT, 3.0).unwrap();
        let y = r.column(0);
        assert!(y.windows(2).all(|w| w[1] >= w[0]), "not monotone");
        assert!((y.last().unwrap() - 1.0).abs() <= 0.05);
        let w = 12.5;
        for (k, v) in y.iter().enumerate().step_by(25) {
            let t = k as f64 * DEFAULT_DT;
            let exact = 1.0 - (1.0 + w * t) * (-w * t).exp();
            assert!((v - exact).abs() < 0.02, "t = {t}: {v} vs {exact}");
        }
    }

    #[test]
    fn phase_follows_euler_product() {
        let p = DmpParams::zero_weights(vec![0.0], vec![1.0], 1.3, Gains::default(), layout(5))
            .unwrap();
        let mut state = RolloutState::at_rest(&[0.0]);
        let mut psi = vec![0.0; 5];
        let factor = 1.0 - p.alpha_x * DEFAULT_DT / p.tau;
        for k in 1..2000 {
            let prev = state.x;
            state.step(&p, DEFAULT_DT, &mut psi);
            assert!(state.x < prev && state.x > 0.0);
            assert!((state.x - factor.powi(k)).abs() <= 1e-12);
        }
    }

    fn refit_error(truth: &DmpParams) -> f64 {
        let demo = rollout(truth, &truth.start, DEFAULT_DT, truth.tau).unwrap();
        let opts = FitOptions {
            tau: Some(truth.tau),
            n_basis: truth.n_basis,
            gains: truth.gains(),
        };
        let refit = fit(&demo, &opts).unwrap();
        assert_eq!(refit.centers, truth.centers);
        let again = rollout(&refit, demo.first(), DEFAULT_DT, demo.duration()).unwrap();
        rms_over_span(&again, &demo, 0)
    }

    #[test]
    fn refit_recovers_generating_dmp() {
        let mut truth =
            DmpParams::zero_weights(vec![0.0], vec![1.0], 1.0, Gains::default(), layout(20))
                .unwrap();
        // Fitting inverts the integrator, so pure attractor dynamics come
        // back almost exactly.
        assert!(refit_error(&truth) <= 1e-5);

        // Locally weighted regression recovers a locally averaged weight
        // profile, so the round trip is tight for smoothly varying weights.
        for (i, w) in truth.weights[0].iter_mut().enumerate() {
            *w = 50.0 * (1.0 + 3.0 * i as f64 / 20.0).sin();
        }
        let err = refit_error(&truth);
        assert!(err <= 1e-3, "relative rms {err}");
    }

    #[test]
    fn min_jerk_fit_reconstructs() {
        let n = 250;
        let dt = 1.0 / (n - 1) as f64;
        let vals: Vec<f64> = (0..n).map(|k| min_jerk(k as f64 * dt)).collect();
        let demo = Trajectory::from_flat(dt, 1, vals).unwrap();
        let p = fit(&demo, &FitOptions::default()).unwrap();
        assert_eq!(p.goal, vec![1.0]);
        assert_eq!(p.start, vec![0.0]);
        assert_eq!(p.tau, demo.duration());
        let r = rollout(&p, demo.first(), dt, demo.duration()).unwrap();
        let err = rms_over_span(&r, &demo, 0);
        assert!(err <= 0.02, "relative rms {err}");
    }

    #[test]
    fn closed_loop_demo_is_degenerate() {
        let demo = Trajectory::from_flat(0.01, 1, vec![0.0, 0.5, 1.0, 0.5, 0.0]).unwrap();
        assert!(matches!(
            fit(&demo, &FitOptions::default()),
            Err(Error::DegenerateDemonstration)
        ));
        let short = Trajectory::from_flat(0.01, 1, vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            fit(&short, &FitOptions::default()),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn flat_dimension_gets_zero_weights() {
        // Second dimension wanders but returns to its start.
        let mut rows: Vec<Vec<f64>> = (0..100)
            .map(|k| {
                vec![
                    min_jerk(k as f64 / 99.0),
                    4.0 + 0.1 * (k as f64 * 0.2).sin(),
                ]
            })
            .collect();
        rows[99][1] = rows[0][1];
        let demo = Trajectory::new(0.01, &rows).unwrap();
        let p = fit(&demo, &FitOptions::default()).unwrap();
        assert!(p.weights[1].iter().all(|w| *w == 0.0));
        assert!(p.weights[0].iter().any(|w| *w != 0.0));
    }

    #[test]
    fn set_goal_and_tau() {
        let p = DmpParams::zero_weights(vec![0.0], vec![1.0], 1.0, Gains::default(), layout(10))
            .unwrap();
        assert_eq!(p.set_goal(&[1.0]).unwrap(), p);
        assert_eq!(p.set_tau(1.0).unwrap(), p);
        assert!(p.set_goal(&[1.0, 2.0]).is_err());
        assert!(p.set_tau(0.0).is_err());
        assert!(p.set_tau(-1.0).is_err());

        let moved = p.set_goal(&[-3.0]).unwrap();
        assert_eq!(moved.tau, p.tau);
        let r = rollout(&moved, &[0.0], DEFAULT_DT, 5.0).unwrap();
        assert!((r.last()[0] + 3.0).abs() < 1e-3);
    }

    #[test]
    fn shifted_goal_of_fitted_dmp_is_reached() {
        let vals: Vec<f64> = (0..250).map(|k| min_jerk(k as f64 / 249.0)).collect();
        let demo = Trajectory::from_flat(DEFAULT_DT, 1, vals).unwrap();
        let p = fit(&demo, &FitOptions::default()).unwrap();
        let moved = p.set_goal(&[11.0]).unwrap();
        let r = rollout(&moved, &[0.0], DEFAULT_DT, 5.0 * p.tau).unwrap();
        let tol = 1e-2 * (11.0f64 - 0.0).abs().max(1.0);
        assert!((r.last()[0] - 11.0).abs() <= tol, "{}", r.last()[0]);
    }

    #[test]
    fn doubled_tau_traces_same_phase_space_path() {
        let vals: Vec<f64> = (0..250).map(|k| min_jerk(k as f64 / 249.0)).collect();
        let demo = Trajectory::from_flat(DEFAULT_DT, 1, vals).unwrap();
        let p = fit(&demo, &FitOptions::default()).unwrap();
        let slow = p.set_tau(2.0 * p.tau).unwrap();
        let a = rollout(&p, &[0.0], DEFAULT_DT, p.tau).unwrap();
        let b = rollout(&slow, &[0.0], 2.0 * DEFAULT_DT, slow.tau).unwrap();
        assert_eq!(a.len(), b.len());
        // Same phase at each sample index, so y-vs-x curves line up sample by sample.
        for (ya, yb) in a.as_flat().iter().zip(b.as_flat()) {
            assert!((ya - yb).abs() <= 1e-6);
        }
    }

    #[test]
    fn rollout_rejects_bad_arguments() {
        let p = DmpParams::zero_weights(vec![0.0], vec![1.0], 1.0, Gains::default(), layout(5))
            .unwrap();
        assert!(rollout(&p, &[0.0, 0.0], DEFAULT_DT, 1.0).is_err());
        assert!(rollout(&p, &[0.0], 0.0, 1.0).is_err());
        assert!(rollout(&p, &[0.0], 0.1, 0.01).is_err());
        assert!(rollout(&p, &[0.0], 2.0, 4.0).is_err());
    }

    #[test]
    fn rollout_reports_divergence() {
        let mut p =
            DmpParams::zero_weights(vec![0.0], vec![1.0], 0.01, Gains::default(), layout(5))
                .unwrap();
        p.alpha_z = 5000.0;
        p.beta_z = 5000.0;
        assert!(matches!(
            rollout(&p, &[0.0], 0.009, 5.0),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn validate_catches_malformed_params() {
        let good = DmpParams::zero_weights(vec![0.0], vec![1.0], 1.0, Gains::default(), layout(5))
            .unwrap();
        let mut p = good.clone();
        p.weights[0].pop();
        assert!(p.validate().is_err());
        let mut p = good.clone();
        p.centers.reverse();
        assert!(p.validate().is_err());
        let mut p = good.clone();
        p.widths[0] = 0.0;
        assert!(p.validate().is_err());
        let mut p = good;
        p.alpha_x = -1.0;
        assert!(p.validate().is_err());
    }

    fn min_jerk_demo(n: usize, dims: usize, scale: f64) -> Trajectory {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|k| {
                let s = min_jerk(k as f64 / (n - 1) as f64);
                (0..dims)
                    .map(|j| scale * (1.0 + j as f64 + s * (2.0 - j as f64 * 3.0)))
                    .collect()
            })
            .collect();
        Trajectory::new(DEFAULT_DT, &rows).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn weights_invariant_under_spatial_scaling(scale in 0.01f64..100.0, n in 50usize..300) {
            let demo = min_jerk_demo(n, 2, 1.0);
            let scaled = min_jerk_demo(n, 2, scale);
            let opts = FitOptions { n_basis: 20, ..Default::default() };
            let a = fit(&demo, &opts).unwrap();
            let b = fit(&scaled, &opts).unwrap();
            for (wa, wb) in a.weights.iter().flatten().zip(b.weights.iter().flatten()) {
                prop_assert!((wa - wb).abs() <= 1e-9 * wa.abs().max(1.0), "{} vs {}", wa, wb);
            }
        }

        #[test]
        fn fitted_weights_minimize_weighted_residual(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(20..200);
            let mut y = 0.0;
            let vals: Vec<f64> = (0..n).map(|_| { y += rng.random_range(-0.1..0.3); y }).collect();
            let demo = Trajectory::from_flat(0.01, 1, vals).unwrap();
            if (demo.last()[0] - demo.first()[0]).abs() < 1e-3 { return Ok(()); }
            let ws = FitWorkspace::new(&demo, &FitOptions { n_basis: 8, ..Default::default() }).unwrap();
            for i in 0..8 {
                let w = ws.weight(0, i);
                let best = ws.residual(0, i, w);
                prop_assert!(ws.residual(0, i, w + 1e-3) > best);
                prop_assert!(ws.residual(0, i, w - 1e-3) > best);
            }
        }

        #[test]
        fn rollout_converges_to_goal(
            seed in 0u64..10_000,
            n_basis in 10usize..=50,
            tau in 0.5f64..3.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dims = rng.random_range(1..4);
            let start: Vec<f64> = (0..dims).map(|_| rng.random_range(-5.0..5.0)).collect();
            let goal: Vec<f64> = (0..dims).map(|_| rng.random_range(-5.0..5.0)).collect();
            let mut p = DmpParams::zero_weights(
                start.clone(), goal.clone(), tau, Gains::default(),
                BasisLayout::uniform_in_time(n_basis, tau, tau, 1.0).unwrap(),
            ).unwrap();
            for w in p.weights.iter_mut().flatten() {
                *w = rng.random_range(-1e3..1e3);
            }
            let r = rollout(&p, &start, DEFAULT_DT, 5.0 * tau).unwrap();
            for j in 0..dims {
                let tol = 1e-2 * (goal[j] - start[j]).abs().max(1.0);
                prop_assert!((r.last()[j] - goal[j]).abs() <= tol);
            }
        }
    }
}
