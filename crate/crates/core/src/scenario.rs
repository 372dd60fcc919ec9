//! Seeded synthetic deficient/corrective trajectory pairs.
//!
//! Each scenario starts from an intended minimum-jerk motion and a deficient
//! variant of it. The corrective demonstration starts where the deficient
//! trajectory ended, runs backward along it to a turnaround point, follows it
//! forward again to the cut, and then departs smoothly toward the intended
//! motion. Smooth seeded noise, vanishing at both ends, is added to both
//! trajectories.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dmp::DEFAULT_DT;
use crate::error::{invalid, Error, Result};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// The deficient motion goes past the goal.
    Overshoot,
    /// The deficient motion stops short of the goal.
    Undershoot,
    /// The deficient motion lowers its last dimension ("height") too early;
    /// the intended motion lifts it first.
    ObstacleDip,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [Self::Overshoot, Self::Undershoot, Self::ObstacleDip];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Overshoot => "overshoot",
            Self::Undershoot => "undershoot",
            Self::ObstacleDip => "obstacle-dip",
        }
    }

    /// Normalized times of the turnaround, the cut, and the end of the
    /// departure toward the intended motion.
    fn timing(&self) -> (f64, f64, f64) {
        match self {
            Self::Overshoot | Self::Undershoot => (0.45, 0.55, 1.0),
            Self::ObstacleDip => (0.05, 0.1, 0.4),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub dims: usize,
    /// Duration of the deficient trajectory, seconds.
    pub duration: f64,
    /// Peak amplitude of the added noise, task units.
    pub noise: f64,
    /// Size of the defect relative to the start-to-goal distance.
    pub margin: f64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            dims: 3,
            duration: 2.0,
            noise: 0.002,
            margin: 0.2,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(invalid("scenario needs at least one dimension"));
        }
        if !(self.duration.is_finite() && self.duration >= 20.0 * DEFAULT_DT) {
            return Err(invalid(format!(
                "scenario duration {} is too short",
                self.duration
            )));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(invalid("noise must be non-negative"));
        }
        if !(self.margin.is_finite() && self.margin > 0.0 && self.margin < 1.0) {
            return Err(invalid("margin must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub deficient: Trajectory,
    pub corrective: Trajectory,
    pub corrective_cut: usize,
    /// Goal of the intended motion; the last corrective sample.
    pub goal: Vec<f64>,
}

fn min_jerk(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Sum of three low-frequency sinusoids per dimension, scaled by a window
/// that vanishes at both ends.
struct SmoothNoise {
    /// (amplitude, cycles over the window, phase) per dimension.
    terms: Vec<[(f64, f64, f64); 3]>,
}

impl SmoothNoise {
    fn new(rng: &mut ChaCha8Rng, dims: usize, amplitude: f64) -> Self {
        let terms = (0..dims)
            .map(|_| {
                std::array::from_fn(|_| {
                    (
                        amplitude / 3.0 * rng.random_range(0.5..1.0),
                        rng.random_range(0.5..2.5),
                        rng.random_range(0.0..2.0 * PI),
                    )
                })
            })
            .collect();
        Self { terms }
    }

    /// Noise at normalized time `s` in `[0, 1]`.
    fn at(&self, j: usize, s: f64) -> f64 {
        let window = (PI * s).sin();
        window
            * self.terms[j]
                .iter()
                .map(|(a, f, p)| a * (2.0 * PI * f * s + p).sin())
                .sum::<f64>()
    }
}

/// Builds the scenario; identical `(spec, seed)` give identical output.
pub fn generate_scenario(spec: &ScenarioSpec, seed: u64) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.dims;
    let start: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
    let offset: Vec<f64> = (0..d)
        .map(|j| {
            let magnitude = rng.random_range(0.5..1.5);
            let descending = spec.kind == ScenarioKind::ObstacleDip && j == d - 1;
            if descending || rng.random_bool(0.5) {
                -magnitude
            } else {
                magnitude
            }
        })
        .collect();
    let goal: Vec<f64> = start.iter().zip(&offset).map(|(s, o)| s + o).collect();
    let deficient_noise = SmoothNoise::new(&mut rng, d, spec.noise);
    let corrective_noise = SmoothNoise::new(&mut rng, d, spec.noise);

    let intended = |j: usize, s: f64| -> f64 {
        if spec.kind == ScenarioKind::ObstacleDip && j == d - 1 {
            let top = start[j] + spec.margin * offset[j].abs();
            start[j]
                + (top - start[j]) * min_jerk(s / 0.4)
                + (goal[j] - top) * min_jerk((s - 0.6) / 0.4)
        } else {
            start[j] + offset[j] * min_jerk(s)
        }
    };
    let defective = |j: usize, s: f64| -> f64 {
        match spec.kind {
            ScenarioKind::Overshoot => start[j] + (1.0 + spec.margin) * offset[j] * min_jerk(s),
            ScenarioKind::Undershoot => start[j] + (1.0 - spec.margin) * offset[j] * min_jerk(s),
            ScenarioKind::ObstacleDip if j == d - 1 => start[j] + offset[j] * min_jerk(s / 0.5),
            ScenarioKind::ObstacleDip => intended(j, s),
        }
    };

    let samples = (spec.duration / DEFAULT_DT).round() as usize + 1;
    let last = samples - 1;
    let s_of = |k: usize| k as f64 / last as f64;
    let deficient_clean: Vec<Vec<f64>> = (0..samples)
        .map(|k| (0..d).map(|j| defective(j, s_of(k))).collect())
        .collect();
    let deficient: Vec<Vec<f64>> = deficient_clean
        .iter()
        .enumerate()
        .map(|(k, row)| {
            row.iter()
                .enumerate()
                .map(|(j, v)| v + deficient_noise.at(j, s_of(k)))
                .collect()
        })
        .collect();

    let (s_turn, s_cut, s_done) = spec.kind.timing();
    let turn = (s_turn * last as f64).round() as usize;
    let cut = (s_cut * last as f64).round() as usize;

    // Backward over the deficient trajectory, then forward, departing after
    // the cut.
    let mut path: Vec<Vec<f64>> = (turn..=last)
        .rev()
        .map(|k| deficient_clean[k].clone())
        .collect();
    let corrective_cut = path.len() + (cut - turn - 1);
    for k in turn + 1..=last {
        let s = s_of(k);
        let blend = min_jerk((s - s_cut) / (s_done - s_cut));
        path.push(
            (0..d)
                .map(|j| {
                    let a = defective(j, s);
                    a + blend * (intended(j, s) - a)
                })
                .collect(),
        );
    }
    let span = path.len() - 1;
    for (k, row) in path.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v += corrective_noise.at(j, k as f64 / span as f64);
        }
    }
    let corrective = Trajectory::new(DEFAULT_DT, &path)?;
    let goal = corrective.last().to_vec();

    Ok(Scenario {
        deficient: Trajectory::new(DEFAULT_DT, &deficient)?,
        corrective,
        corrective_cut,
        goal,
    })
}
