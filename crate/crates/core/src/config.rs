//! Experiment configuration: JSON schema, built-in example defaults, and
//! resolution (defaults, then file, then `key=value` overrides).

use std::fs;
use std::path::Path;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::control::poles_to_coefficients;
use crate::dictionary::{DictionarySpec, FamilySpec, ScalarizationSpec};
use crate::error::{Error, Result};
use crate::identifier::{RegressorConfig, Safeguard, DEFAULT_EPSILON};
use crate::plants::{ParamSchedule, PlantKind};
use crate::wavelet::{ShapeKind, WaveletFamily, DEFAULT_LEVELS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub kind: PlantKind,
    pub schedule: ParamSchedule,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pole {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<Pole> for Complex<f64> {
    fn from(p: Pole) -> Self {
        Complex::new(p.re, p.im)
    }
}

/// Reference model given by poles, explicit coefficients, or both (which must agree).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceModelSpec {
    #[serde(default)]
    pub poles: Option<Vec<Pole>>,
    #[serde(default)]
    pub coefficients: Option<Vec<f64>>,
}

impl ReferenceModelSpec {
    pub fn from_poles(poles: &[(f64, f64)]) -> Self {
        ReferenceModelSpec {
            poles: Some(poles.iter().map(|&(re, im)| Pole { re, im }).collect()),
            coefficients: None,
        }
    }

    /// Resolved `s_1..s_n`.
    pub fn coefficients(&self) -> Result<Vec<f64>> {
        match (&self.poles, &self.coefficients) {
            (None, None) => Err(Error::Config(
                "reference_model needs poles or coefficients".into(),
            )),
            (None, Some(s)) => Ok(s.clone()),
            (Some(p), None) => {
                let poles: Vec<Complex<f64>> = p.iter().map(|&p| p.into()).collect();
                poles_to_coefficients(&poles)
            }
            (Some(p), Some(s)) => {
                let poles: Vec<Complex<f64>> = p.iter().map(|&p| p.into()).collect();
                let derived = poles_to_coefficients(&poles)?;
                let agree = derived.len() == s.len()
                    && derived.iter().zip(s).all(|(a, b)| (a - b).abs() <= 1e-9);
                if agree {
                    Ok(s.clone())
                } else {
                    Err(Error::Config(format!(
                        "reference_model poles give {derived:?} but coefficients are {s:?}"
                    )))
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceShape {
    Sine,
    Square,
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSignal {
    pub shape: ReferenceShape,
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    #[serde(default)]
    pub offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub std: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifierSpec {
    pub epsilon: f64,
    pub safeguard: Safeguard,
    /// Known coefficient on `u(k-1)` inside `f`; the dictionary fits the rest.
    #[serde(default)]
    pub known_input_gain: f64,
}

/// Which output history the control law's feedback term uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackSource {
    #[default]
    ModelHistory,
    PlantHistory,
}

/// A complete closed-loop experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub plant: PlantSpec,
    pub dictionary: DictionarySpec,
    pub regressor: RegressorConfig,
    pub reference_model: ReferenceModelSpec,
    pub reference: ReferenceSignal,
    /// Sampling period, seconds.
    pub ts: f64,
    /// Horizon, seconds.
    pub duration: f64,
    pub noise: NoiseSpec,
    pub identifier: IdentifierSpec,
    pub feedback: FeedbackSource,
    /// Replace the estimate with the true nonlinearity.
    pub oracle: bool,
    /// Metrics use rows with `t >= metrics_window_start`.
    pub metrics_window_start: f64,
}

fn families(entries: &[(WaveletFamily, ShapeKind, usize, f64)]) -> Vec<FamilySpec> {
    entries
        .iter()
        .map(|&(family, kind, shifts, scale)| FamilySpec {
            family,
            kind,
            shifts,
            scale,
        })
        .collect()
}

impl SimConfig {
    fn base(
        kind: PlantKind,
        schedule: ParamSchedule,
        poles: &[(f64, f64)],
        dict: Vec<FamilySpec>,
    ) -> Self {
        SimConfig {
            plant: PlantSpec { kind, schedule },
            dictionary: DictionarySpec {
                families: dict,
                levels: DEFAULT_LEVELS,
                scalarization: ScalarizationSpec::default(),
            },
            regressor: RegressorConfig { p: 2, q: 1 },
            reference_model: ReferenceModelSpec::from_poles(poles),
            reference: ReferenceSignal {
                shape: ReferenceShape::Sine,
                amplitude: 1.0,
                frequency: 0.04,
                offset: 0.0,
            },
            ts: 0.05,
            duration: 50.0,
            noise: NoiseSpec { std: 0.01, seed: 1 },
            identifier: IdentifierSpec {
                epsilon: DEFAULT_EPSILON,
                safeguard: Safeguard::Clamp,
                known_input_gain: 0.0,
            },
            feedback: FeedbackSource::ModelHistory,
            oracle: false,
            metrics_window_start: 25.0,
        }
    }

    /// Slowly ramping rational plant with poles {0.5, 0.4 +/- 0.4i}.
    pub fn example1() -> Self {
        use ShapeKind::*;
        use WaveletFamily::*;
        Self::base(
            PlantKind::Example1,
            ParamSchedule::example1(),
            &[(0.5, 0.0), (0.4, 0.4), (0.4, -0.4)],
            families(&[
                (Db2, Scaling, 10, 1.0),
                (Db2, Wavelet, 5, 1.0),
                (Db3, Scaling, 8, 1.0),
                (Db3, Wavelet, 4, 1.0),
            ]),
        )
    }

    /// Step-changing plant with poles {0.4, 0.2 +/- 0.2i}.
    ///
    /// `f` carries `u(k-1)` with unit gain, which the identifier treats as
    /// known; a single-point update cannot learn that slope fast enough to keep
    /// the loop stable. The scalarization follows the sign pattern of the
    /// remaining `y(k-1)`/`y(k-2)` dependence.
    pub fn example2() -> Self {
        use ShapeKind::*;
        use WaveletFamily::*;
        let mut cfg = Self::base(
            PlantKind::Example2,
            ParamSchedule::example2(),
            &[(0.4, 0.0), (0.2, 0.2), (0.2, -0.2)],
            families(&[(Bior3_3, Scaling, 4, 2.14), (Db3, Scaling, 7, 1.42)]),
        );
        cfg.dictionary.scalarization.weights = Some(vec![-0.17, 0.053, 0.0]);
        cfg.identifier.known_input_gain = 1.0;
        cfg
    }

    pub fn for_plant(kind: PlantKind) -> Self {
        match kind {
            PlantKind::Example1 => Self::example1(),
            PlantKind::Example2 => Self::example2(),
        }
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.ts).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ts > 0.0) || !self.ts.is_finite() {
            return Err(Error::Config(format!(
                "ts must be positive, got {}",
                self.ts
            )));
        }
        if !(self.duration >= self.ts) || !self.duration.is_finite() {
            return Err(Error::Config(format!(
                "duration {} must be at least ts {}",
                self.duration, self.ts
            )));
        }
        if !(self.metrics_window_start < self.duration) {
            return Err(Error::Config(format!(
                "metrics_window_start {} must precede the end of the run at {}",
                self.metrics_window_start, self.duration
            )));
        }
        RegressorConfig::new(self.regressor.p, self.regressor.q)?;
        let r = &self.reference;
        if ![r.amplitude, r.frequency, r.offset]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::Config("reference parameters must be finite".into()));
        }
        self.plant.schedule.validate()?;
        self.reference_model.coefficients()?;
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Merges `overlay` into `base`; every overlay key must already exist in `base`.
/// Objects merge recursively, anything else is replaced.
fn merge(base: &mut Value, overlay: Value, path: &str) -> Result<()> {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (key, value) in o {
                let child = join(path, &key);
                let slot = b
                    .get_mut(&key)
                    .ok_or_else(|| Error::UnknownKey(child.clone()))?;
                // optional sections (null in the defaults) take the overlay wholesale
                if slot.is_null() || !value.is_object() {
                    *slot = value;
                } else {
                    merge(slot, value, &child)?;
                }
            }
            Ok(())
        }
        (slot, value) => {
            *slot = value;
            Ok(())
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Parses `key=value`; the value is read as JSON when possible, else as a string.
pub fn parse_override(text: &str) -> Result<(String, Value)> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{text}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override `{text}` has an empty key")));
    }
    let value =
        serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    Ok((key.to_string(), value))
}

/// Sets a dotted `key` in `root`; each path segment must already exist.
pub fn apply_override(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut node = root;
    let segments: Vec<&str> = key.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let path = segments[..=i].join(".");
        node = match node {
            Value::Object(map) => map
                .get_mut(*seg)
                .ok_or_else(|| Error::UnknownKey(path.clone()))?,
            Value::Array(items) => {
                let idx: usize = seg.parse().map_err(|_| Error::UnknownKey(path.clone()))?;
                items
                    .get_mut(idx)
                    .ok_or_else(|| Error::UnknownKey(path.clone()))?
            }
            _ => return Err(Error::UnknownKey(path)),
        };
    }
    *node = value;
    Ok(())
}

fn plant_kind_of(file: &Value) -> Result<Option<PlantKind>> {
    match file.pointer("/plant/kind") {
        None => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| Error::Config(format!("plant.kind: {e}"))),
    }
}

/// Resolves a config from defaults, an optional file document and overrides,
/// in that order. When no defaults are given they are chosen from the file's
/// `plant.kind` (example 1 if absent).
pub fn resolve(
    defaults: Option<SimConfig>,
    file: Option<Value>,
    overrides: &[(String, Value)],
) -> Result<SimConfig> {
    let defaults = match (defaults, &file) {
        (Some(d), _) => d,
        (None, Some(f)) => SimConfig::for_plant(plant_kind_of(f)?.unwrap_or(PlantKind::Example1)),
        (None, None) => SimConfig::example1(),
    };
    let mut value = defaults.to_value();
    if let Some(file) = file {
        if !file.is_object() {
            return Err(Error::Config("config file must hold a JSON object".into()));
        }
        merge(&mut value, file, "")?;
    }
    for (key, v) in overrides {
        apply_override(&mut value, key, v.clone())?;
    }
    let config: SimConfig =
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Reads a JSON config document.
pub fn read_config_file(path: &Path) -> Result<Value> {
    if !path.exists() {
        return Err(Error::ConfigNotFound(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(value)
}

/// Empty JSON object, handy for building file documents in code.
pub fn empty_document() -> Value {
    Value::Object(Map::new())
}
