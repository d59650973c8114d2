//! Benchmark nonlinear time-varying plants, parameter schedules and seeded noise.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::quantize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    LinearRamp,
    Step,
}

/// Time-varying plant parameter `a(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSchedule {
    pub kind: ScheduleKind,
    pub start_value: f64,
    pub end_value: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl ParamSchedule {
    pub fn constant(value: f64) -> Self {
        ParamSchedule {
            kind: ScheduleKind::Constant,
            start_value: value,
            end_value: value,
            t_start: 0.0,
            t_end: 0.0,
        }
    }

    /// 1.0 rising linearly to 1.2 over the first 25 s.
    pub fn example1() -> Self {
        ParamSchedule {
            kind: ScheduleKind::LinearRamp,
            start_value: 1.0,
            end_value: 1.2,
            t_start: 0.0,
            t_end: 25.0,
        }
    }

    /// 1.0 jumping to 3.0 at 25 s.
    pub fn example2() -> Self {
        ParamSchedule {
            kind: ScheduleKind::Step,
            start_value: 1.0,
            end_value: 3.0,
            t_start: 0.0,
            t_end: 25.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let values = [self.start_value, self.end_value, self.t_start, self.t_end];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("schedule values must be finite".into()));
        }
        if self.t_start > self.t_end {
            return Err(Error::Config(format!(
                "schedule t_start {} is after t_end {}",
                self.t_start, self.t_end
            )));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        match self.kind {
            ScheduleKind::Constant => self.start_value,
            ScheduleKind::LinearRamp => {
                if t <= self.t_start {
                    self.start_value
                } else if t >= self.t_end {
                    self.end_value
                } else {
                    let frac = (t - self.t_start) / (self.t_end - self.t_start);
                    self.start_value + (self.end_value - self.start_value) * frac
                }
            }
            ScheduleKind::Step => {
                if t < self.t_end {
                    self.start_value
                } else {
                    self.end_value
                }
            }
        }
    }
}

/// Seeded white Gaussian noise.
///
/// The stream is ChaCha8 seeded with `seed_from_u64(seed)`, mapped through
/// `rand_distr::StandardNormal` (ziggurat) and scaled by `std`. With `std == 0`
/// no draws are taken and every sample is exactly zero.
#[derive(Clone, Debug)]
pub struct NoiseSource {
    std: f64,
    seed: u64,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(std: f64, seed: u64) -> Result<Self> {
        if !(std >= 0.0) || !std.is_finite() {
            return Err(Error::Config(format!(
                "noise std must be non-negative, got {std}"
            )));
        }
        Ok(NoiseSource {
            std,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_sample(&mut self) -> f64 {
        if self.std == 0.0 {
            return 0.0;
        }
        let z: f64 = StandardNormal.sample(&mut self.rng);
        self.std * z
    }
}

/// `y1 (a u1 y2 + 2.5) / (1 + y1^2 + y2^2 + u1^2)`.
pub fn f1_eval(y1: f64, y2: f64, u1: f64, a: f64) -> f64 {
    y1 * (a * u1 * y2 + 2.5) / (1.0 + y1 * y1 + y2 * y2 + u1 * u1)
}

/// `(0.8 - 0.5 e^(-y1^2)) y1 a - (0.3 + 0.9 e^(-y1^2)) y2 + 0.1 sin(pi y1) + u1`.
pub fn f2_eval(y1: f64, y2: f64, u1: f64, a: f64) -> f64 {
    let decay = (-y1 * y1).exp();
    (0.8 - 0.5 * decay) * y1 * a - (0.3 + 0.9 * decay) * y2 + 0.1 * (PI * y1).sin() + u1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantKind {
    Example1,
    Example2,
}

impl PlantKind {
    /// Nonlinearity evaluated at `(y(k-1), y(k-2), u(k-1), a)`.
    pub fn eval(self, y1: f64, y2: f64, u1: f64, a: f64) -> f64 {
        match self {
            PlantKind::Example1 => f1_eval(y1, y2, u1, a),
            PlantKind::Example2 => f2_eval(y1, y2, u1, a),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PlantKind::Example1 => "example1",
            PlantKind::Example2 => "example2",
        }
    }
}

/// Output of one [`Plant::step`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantOutput {
    pub y: f64,
    pub f_true: f64,
    pub noise: f64,
    /// Input after lattice rounding; `y = f_true + u_applied + noise` exactly.
    pub u_applied: f64,
    pub a: f64,
}

/// `y(k) = f(y(k-1), y(k-2), u(k-1); a(t)) + u(k) + n(k)` with zero initial histories.
#[derive(Clone, Debug)]
pub struct Plant {
    kind: PlantKind,
    schedule: ParamSchedule,
    noise: NoiseSource,
    ts: f64,
    k: usize,
    // most recent first
    y_history: [f64; 2],
    u_history: [f64; 1],
}

impl Plant {
    pub fn new(
        kind: PlantKind,
        schedule: ParamSchedule,
        noise: NoiseSource,
        ts: f64,
    ) -> Result<Self> {
        schedule.validate()?;
        if !(ts > 0.0) || !ts.is_finite() {
            return Err(Error::Config(format!(
                "sampling period must be positive, got {ts}"
            )));
        }
        Ok(Plant {
            kind,
            schedule,
            noise,
            ts,
            k: 0,
            y_history: [0.0; 2],
            u_history: [0.0; 1],
        })
    }

    /// Overrides the lagged input, e.g. to start from a non-zero state.
    pub fn set_history(&mut self, y_history: [f64; 2], u_history: [f64; 1]) {
        self.y_history = y_history;
        self.u_history = u_history;
    }

    pub fn kind(&self) -> PlantKind {
        self.kind
    }

    pub fn time(&self) -> f64 {
        self.k as f64 * self.ts
    }

    pub fn step_index(&self) -> usize {
        self.k
    }

    pub fn y_history(&self) -> &[f64] {
        &self.y_history
    }

    pub fn u_history(&self) -> &[f64] {
        &self.u_history
    }

    pub fn parameter(&self) -> f64 {
        self.schedule.value(self.time())
    }

    /// The nonlinearity the next step will apply, on the signal lattice.
    pub fn f_true(&self) -> f64 {
        quantize(self.kind.eval(
            self.y_history[0],
            self.y_history[1],
            self.u_history[0],
            self.parameter(),
        ))
    }

    pub fn step(&mut self, u: f64) -> Result<PlantOutput> {
        if !u.is_finite() {
            return Err(Error::NonFiniteInput("control input"));
        }
        let a = self.parameter();
        let f_true = self.f_true();
        let noise = quantize(self.noise.next_sample());
        let u_applied = quantize(u);
        let y = f_true + u_applied + noise;

        self.y_history = [y, self.y_history[0]];
        self.u_history = [u_applied];
        self.k += 1;
        Ok(PlantOutput {
            y,
            f_true,
            noise,
            u_applied,
            a,
        })
    }
}
