//! Closed-loop harness: reference model, identifier, certainty-equivalence
//! controller and plant, stepped in a fixed order.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::{FeedbackSource, ReferenceShape, ReferenceSignal, SimConfig};
use crate::control::{certainty_equivalence, matching_error, weighted_history, ReferenceModel};
use crate::dictionary::{build_dictionary, Dictionary};
use crate::error::{Error, Result};
use crate::identifier::{build_regressor, AmpIdentifier, IdentifierSnapshot};
use crate::lattice::quantize;
use crate::plants::{NoiseSource, Plant};

/// One simulation step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub t: f64,
    pub r: f64,
    pub ym: f64,
    pub y: f64,
    pub u: f64,
    pub f_true: f64,
    pub f_hat: f64,
    /// `f_true - f_hat`.
    pub eta: f64,
    /// `ym - y`.
    pub e: f64,
    pub selected_index: Option<usize>,
    pub a: f64,
    pub applied: bool,
}

impl TraceRow {
    /// Numeric column by trace-header name.
    pub fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "k" => self.k as f64,
            "t" => self.t,
            "r" => self.r,
            "ym" => self.ym,
            "y" => self.y,
            "u" => self.u,
            "f_true" => self.f_true,
            "f_hat" => self.f_hat,
            "eta" => self.eta,
            "e" => self.e,
            "a" => self.a,
            "selected_index" => self.selected_index.map_or(f64::NAN, |i| i as f64),
            "applied" => f64::from(u8::from(self.applied)),
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// RMS of `e` over the window.
    pub tracking_rmse: f64,
    /// RMS of `eta` over the window.
    pub identification_rmse: f64,
    pub max_abs_u: f64,
    pub max_abs_y: f64,
    pub window_start: f64,
    pub window_rows: usize,
}

/// RMS errors over rows with `t >= window_start`; maxima over the whole trace.
pub fn compute_metrics(trace: &[TraceRow], window_start: f64) -> Result<Metrics> {
    let window: Vec<&TraceRow> = trace.iter().filter(|r| r.t >= window_start).collect();
    if window.is_empty() {
        return Err(Error::Empty("metrics window"));
    }
    let rms = |f: fn(&TraceRow) -> f64| {
        (window.iter().map(|r| f(r).powi(2)).sum::<f64>() / window.len() as f64).sqrt()
    };
    let max_abs = |f: fn(&TraceRow) -> f64| trace.iter().map(|r| f(r).abs()).fold(0.0, f64::max);
    Ok(Metrics {
        tracking_rmse: rms(|r| r.e),
        identification_rmse: rms(|r| r.eta),
        max_abs_u: max_abs(|r| r.u),
        max_abs_y: max_abs(|r| r.y),
        window_start,
        window_rows: window.len(),
    })
}

/// Reference input `r(t)`.
pub fn reference_value(spec: &ReferenceSignal, t: f64) -> f64 {
    let phase = 2.0 * PI * spec.frequency * t;
    match spec.shape {
        ReferenceShape::Sine => spec.offset + spec.amplitude * phase.sin(),
        ReferenceShape::Square => {
            let s = phase.sin();
            let sign = if s > 0.0 {
                1.0
            } else if s < 0.0 {
                -1.0
            } else {
                0.0
            };
            spec.offset + spec.amplitude * sign
        }
        ReferenceShape::Constant => spec.offset + spec.amplitude,
    }
}

/// Everything produced by one closed-loop run.
#[derive(Clone, Debug)]
pub struct SimRun {
    pub trace: Vec<TraceRow>,
    pub metrics: Metrics,
    pub reference_coefficients: Vec<f64>,
    pub dictionary: Arc<Dictionary>,
    pub identifier: IdentifierSnapshot,
}

fn finite(value: f64, step: usize, quantity: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { step, quantity })
    }
}

/// Runs the loop for `round(duration / ts)` steps. Per step: reference input,
/// reference model output, regressor, estimate (or the true `f` when
/// `oracle`), control law, plant, identifier update on `y - u`, trace row.
pub fn run_closed_loop(config: &SimConfig) -> Result<SimRun> {
    config.validate()?;
    let s = config.reference_model.coefficients()?;
    let mut model = ReferenceModel::new(s.clone())?;
    let dictionary = Arc::new(build_dictionary(
        &config.dictionary,
        config.regressor.dim(),
    )?);
    let mut identifier = AmpIdentifier::new(
        Arc::clone(&dictionary),
        config.regressor,
        config.identifier.epsilon,
        config.identifier.safeguard,
    )?;
    let noise = NoiseSource::new(config.noise.std, config.noise.seed)?;
    let mut plant = Plant::new(config.plant.kind, config.plant.schedule, noise, config.ts)?;

    let y_depth = config.regressor.p.max(model.order());
    let u_depth = config.regressor.q;
    let mut y_hist: Vec<f64> = vec![0.0; y_depth];
    let mut u_hist: Vec<f64> = vec![0.0; u_depth];

    let steps = config.steps();
    let mut trace = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = k as f64 * config.ts;
        let r = quantize(reference_value(&config.reference, t));

        let model_feedback = quantize(model.feedback());
        let ym = model_feedback + r;
        model.advance(ym);
        finite(ym, k, "reference model output")?;

        let reg = build_regressor(&y_hist, &u_hist, config.regressor);
        let f_true = plant.f_true();
        let known =
            quantize(config.identifier.known_input_gain * u_hist.first().copied().unwrap_or(0.0));
        let f_hat = if config.oracle {
            f_true
        } else {
            quantize(finite(identifier.predict(&reg)?, k, "f_hat")?) + known
        };

        let feedback = match config.feedback {
            FeedbackSource::ModelHistory => model_feedback,
            FeedbackSource::PlantHistory => quantize(weighted_history(&s, &y_hist)),
        };
        let control = certainty_equivalence(f_hat, feedback, r).map_err(|_| Error::NonFinite {
            step: k,
            quantity: "f_hat",
        })?;
        finite(control.u, k, "control input")?;

        let out = plant.step(control.u).map_err(|_| Error::NonFinite {
            step: k,
            quantity: "control input",
        })?;
        finite(out.y, k, "plant output")?;

        let update = identifier.update(&reg, out.y - out.u_applied - known)?;
        if identifier.theta().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step: k,
                quantity: "theta",
            });
        }

        y_hist.rotate_right(1);
        y_hist[0] = out.y;
        u_hist.rotate_right(1);
        u_hist[0] = out.u_applied;

        trace.push(TraceRow {
            k,
            t,
            r,
            ym,
            y: out.y,
            u: out.u_applied,
            f_true,
            f_hat,
            eta: matching_error(f_true, f_hat),
            e: ym - out.y,
            selected_index: Some(update.selected_index),
            a: out.a,
            applied: update.applied,
        });
    }

    let metrics = compute_metrics(&trace, config.metrics_window_start)?;
    Ok(SimRun {
        trace,
        metrics,
        reference_coefficients: s,
        dictionary,
        identifier: identifier.snapshot(),
    })
}
