//! Online adaptive matching pursuit identifier for NARX models.
//!
//! Each step evaluates the whole dictionary at the current regressor, picks the
//! atom with the largest absolute response and moves only that coefficient so
//! the model interpolates the newest measurement exactly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};

/// Default lower bound on `|g_m|` before the safeguard applies.
pub const DEFAULT_EPSILON: f64 = 1e-2;

/// Lag structure of the NARX regressor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressorConfig {
    /// Output lags.
    pub p: usize,
    /// Input lags.
    pub q: usize,
}

impl RegressorConfig {
    pub fn new(p: usize, q: usize) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::Config(format!(
                "regressor lags must be positive, got p={p}, q={q}"
            )));
        }
        Ok(RegressorConfig { p, q })
    }

    pub fn dim(&self) -> usize {
        self.p + self.q
    }
}

/// `[y(k-1) .. y(k-p), u(k-1) .. u(k-q)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Regressor(Vec<f64>);

impl Regressor {
    pub fn from_values(values: Vec<f64>) -> Self {
        Regressor(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Assembles the regressor from most-recent-first histories. Entries the
/// histories do not reach yet are zero.
pub fn build_regressor(y_history: &[f64], u_history: &[f64], config: RegressorConfig) -> Regressor {
    fn lagged(h: &[f64], n: usize) -> impl Iterator<Item = f64> + '_ {
        (0..n).map(move |i| h.get(i).copied().unwrap_or(0.0))
    }
    Regressor(
        lagged(y_history, config.p)
            .chain(lagged(u_history, config.q))
            .collect(),
    )
}

/// Policy for a maximal basis response below epsilon.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Safeguard {
    /// Divide by `sign(g_m) * epsilon` instead of `g_m`.
    #[default]
    Clamp,
    /// Leave the coefficients unchanged.
    Skip,
}

/// Result of [`select_index`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    Index(usize),
    /// The largest `|g_i|` is below epsilon; carries its index.
    BelowThreshold(usize),
}

impl Selection {
    pub fn index(self) -> usize {
        match self {
            Selection::Index(i) | Selection::BelowThreshold(i) => i,
        }
    }
}

/// Index of the largest `|g_i|`, lowest index on ties.
pub fn select_index(g: &[f64], epsilon: f64) -> Result<Selection> {
    if g.is_empty() {
        return Err(Error::Empty("basis response"));
    }
    let mut best = 0;
    for (i, v) in g.iter().enumerate().skip(1) {
        if v.abs() > g[best].abs() {
            best = i;
        }
    }
    if g[best].abs() < epsilon {
        Ok(Selection::BelowThreshold(best))
    } else {
        Ok(Selection::Index(best))
    }
}

/// What one call to [`AmpIdentifier::update`] did.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateRecord {
    /// Prediction error before the update.
    pub error_before: f64,
    pub selected_index: usize,
    /// Basis response `g_m` of the selected atom.
    pub correlation: f64,
    /// False when the skip safeguard suppressed the update.
    pub applied: bool,
}

/// Serializable identifier state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifierSnapshot {
    pub theta: Vec<f64>,
    pub epsilon: f64,
    pub safeguard: Safeguard,
    pub regressor: RegressorConfig,
    pub dictionary_size: usize,
    pub last_selected: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct AmpIdentifier {
    dictionary: Arc<Dictionary>,
    config: RegressorConfig,
    theta: Vec<f64>,
    epsilon: f64,
    safeguard: Safeguard,
    last_selected: Option<usize>,
}

impl AmpIdentifier {
    /// Zero-initialized coefficients over `dictionary`.
    pub fn new(
        dictionary: Arc<Dictionary>,
        config: RegressorConfig,
        epsilon: f64,
        safeguard: Safeguard,
    ) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if dictionary.regressor_dim() != config.dim() {
            return Err(Error::DimensionMismatch {
                expected: config.dim(),
                actual: dictionary.regressor_dim(),
            });
        }
        if dictionary.len() < config.dim() {
            return Err(Error::InsufficientAtoms {
                actual: dictionary.len(),
                minimum: config.dim(),
            });
        }
        let n = dictionary.len();
        Ok(AmpIdentifier {
            dictionary,
            config,
            theta: vec![0.0; n],
            epsilon,
            safeguard,
            last_selected: None,
        })
    }

    pub fn dictionary(&self) -> &Arc<Dictionary> {
        &self.dictionary
    }

    pub fn config(&self) -> RegressorConfig {
        self.config
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn safeguard(&self) -> Safeguard {
        self.safeguard
    }

    pub fn last_selected(&self) -> Option<usize> {
        self.last_selected
    }

    /// Replaces the coefficient vector.
    pub fn set_theta(&mut self, theta: Vec<f64>) -> Result<()> {
        if theta.len() != self.theta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.theta.len(),
                actual: theta.len(),
            });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFiniteInput("theta"));
        }
        self.theta = theta;
        Ok(())
    }

    fn responses(&self, reg: &Regressor) -> Result<Vec<f64>> {
        if reg.len() != self.config.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.config.dim(),
                actual: reg.len(),
            });
        }
        self.dictionary.evaluate_all(reg.values())
    }

    /// `g(phi)^T theta`.
    pub fn predict(&self, reg: &Regressor) -> Result<f64> {
        let g = self.responses(reg)?;
        Ok(compensated_dot(&g, &self.theta))
    }

    /// Single-coefficient correction toward the measurement `y`.
    pub fn update(&mut self, reg: &Regressor, y: f64) -> Result<UpdateRecord> {
        if !y.is_finite() {
            return Err(Error::NonFiniteInput("measurement"));
        }
        let g = self.responses(reg)?;
        let error = y - compensated_dot(&g, &self.theta);
        let selection = select_index(&g, self.epsilon)?;
        let m = selection.index();
        let gm = g[m];

        let divisor = match (selection, self.safeguard) {
            (Selection::Index(_), _) => Some(gm),
            (Selection::BelowThreshold(_), Safeguard::Clamp) => Some(if gm < 0.0 {
                -self.epsilon
            } else {
                self.epsilon
            }),
            (Selection::BelowThreshold(_), Safeguard::Skip) => None,
        };
        if let Some(d) = divisor {
            self.theta[m] += error / d;
        }
        self.last_selected = Some(m);
        Ok(UpdateRecord {
            error_before: error,
            selected_index: m,
            correlation: gm,
            applied: divisor.is_some(),
        })
    }

    pub fn snapshot(&self) -> IdentifierSnapshot {
        IdentifierSnapshot {
            theta: self.theta.clone(),
            epsilon: self.epsilon,
            safeguard: self.safeguard,
            regressor: self.config,
            dictionary_size: self.dictionary.len(),
            last_selected: self.last_selected,
        }
    }
}

/// Dot product evaluated in roughly twice the working precision
/// (TwoProduct via FMA plus TwoSum accumulation of the error terms).
pub(crate) fn compensated_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0_f64;
    let mut err = 0.0_f64;
    for (&x, &y) in a.iter().zip(b) {
        let p = x * y;
        let p_err = x.mul_add(y, -p);
        let s = sum + p;
        let bp = s - sum;
        let s_err = (sum - (s - bp)) + (p - bp);
        sum = s;
        err += p_err + s_err;
    }
    sum + err
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{build_dictionary, DictionarySpec, FamilySpec, ScalarizationSpec};
    use crate::wavelet::{ShapeKind, WaveletFamily};

    fn dictionary() -> Arc<Dictionary> {
        let spec = DictionarySpec {
            families: vec![
                FamilySpec {
                    family: WaveletFamily::Db2,
                    kind: ShapeKind::Scaling,
                    shifts: 5,
                    scale: 1.0,
                },
                FamilySpec {
                    family: WaveletFamily::Db3,
                    kind: ShapeKind::Wavelet,
                    shifts: 3,
                    scale: 1.0,
                },
            ],
            levels: 10,
            scalarization: ScalarizationSpec::default(),
        };
        Arc::new(build_dictionary(&spec, 3).unwrap())
    }

    fn identifier(safeguard: Safeguard) -> AmpIdentifier {
        AmpIdentifier::new(
            dictionary(),
            RegressorConfig::new(2, 1).unwrap(),
            1e-2,
            safeguard,
        )
        .unwrap()
    }

    #[test]
    fn regressor_assembly() {
        let c21 = RegressorConfig::new(2, 1).unwrap();
        assert_eq!(
            build_regressor(&[0.5, 0.2], &[0.1], c21).values(),
            &[0.5, 0.2, 0.1]
        );
        assert_eq!(build_regressor(&[], &[], c21).values(), &[0.0, 0.0, 0.0]);
        let c12 = RegressorConfig::new(1, 2).unwrap();
        assert_eq!(
            build_regressor(&[-1.0], &[2.0, 3.0], c12).values(),
            &[-1.0, 2.0, 3.0]
        );
        // longer histories are truncated
        assert_eq!(
            build_regressor(&[1.0, 2.0, 3.0], &[4.0, 5.0], c21).values(),
            &[1.0, 2.0, 4.0]
        );
        assert!(RegressorConfig::new(0, 1).is_err());
    }

    #[test]
    fn select_index_examples() {
        assert_eq!(
            select_index(&[0.5, -1.0, 0.7], 1e-2).unwrap(),
            Selection::Index(1)
        );
        assert_eq!(
            select_index(&[0.3, 0.3], 1e-2).unwrap(),
            Selection::Index(0)
        );
        assert_eq!(
            select_index(&[1e-9, -1e-9], 1e-2).unwrap(),
            Selection::BelowThreshold(0)
        );
        assert!(matches!(select_index(&[], 1e-2), Err(Error::Empty(_))));
    }

    #[test]
    fn zero_theta_predicts_zero() {
        let id = identifier(Safeguard::Clamp);
        for v in [-3.0, 0.0, 1.7] {
            let reg = Regressor::from_values(vec![v, v * 0.5, -v]);
            assert_eq!(id.predict(&reg).unwrap(), 0.0);
        }
    }

    #[test]
    fn unit_theta_selects_basis() {
        let mut id = identifier(Safeguard::Clamp);
        let reg = Regressor::from_values(vec![0.3, -0.2, 0.9]);
        let g = id.dictionary().evaluate_all(reg.values()).unwrap();
        for j in 0..g.len() {
            let mut theta = vec![0.0; g.len()];
            theta[j] = 1.0;
            id.set_theta(theta).unwrap();
            assert_eq!(id.predict(&reg).unwrap(), g[j]);
        }
    }

    #[test]
    fn hand_dot_product() {
        let g = [0.2, -0.5, 1.0];
        let theta = [1.0, 2.0, 3.0];
        assert!((compensated_dot(&g, &theta) - 2.2).abs() < 1e-15);
    }

    #[test]
    fn update_interpolates_measurement() {
        let mut id = identifier(Safeguard::Clamp);
        let reg = Regressor::from_values(vec![0.4, 0.1, -0.2]);
        let rec = id.update(&reg, 2.0).unwrap();
        assert!(rec.applied);
        assert_eq!(rec.error_before, 2.0);
        let changed: Vec<usize> = (0..id.theta().len())
            .filter(|&i| id.theta()[i] != 0.0)
            .collect();
        assert_eq!(changed, vec![rec.selected_index]);
        assert!((id.predict(&reg).unwrap() - 2.0).abs() < 1e-12);

        // perfect prediction leaves theta unchanged
        let before = id.theta().to_vec();
        let y = id.predict(&reg).unwrap();
        let rec = id.update(&reg, y).unwrap();
        assert!(rec.applied);
        assert_eq!(rec.error_before, 0.0);
        assert_eq!(id.theta(), &before[..]);
    }

    #[test]
    fn skip_and_clamp_below_threshold() {
        // epsilon larger than any atom response forces the safeguard
        let mut skip = AmpIdentifier::new(
            dictionary(),
            RegressorConfig::new(2, 1).unwrap(),
            10.0,
            Safeguard::Skip,
        )
        .unwrap();
        let reg = Regressor::from_values(vec![0.0, 0.0, 0.0]);
        let rec = skip.update(&reg, 1.0).unwrap();
        assert!(!rec.applied);
        assert!(skip.theta().iter().all(|t| *t == 0.0));

        let mut clamp = AmpIdentifier::new(
            dictionary(),
            RegressorConfig::new(2, 1).unwrap(),
            10.0,
            Safeguard::Clamp,
        )
        .unwrap();
        let rec = clamp.update(&reg, 1.0).unwrap();
        assert!(rec.applied);
        let expected = if rec.correlation < 0.0 { -0.1 } else { 0.1 };
        assert_eq!(clamp.theta()[rec.selected_index], expected);
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let mut id = identifier(Safeguard::Clamp);
        let short = Regressor::from_values(vec![0.0, 0.0]);
        assert!(matches!(
            id.predict(&short),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(id.update(&short, 1.0).is_err());
        assert!(id
            .update(&Regressor::from_values(vec![0.0; 3]), f64::NAN)
            .is_err());
        assert!(AmpIdentifier::new(
            dictionary(),
            RegressorConfig::new(1, 1).unwrap(),
            1e-2,
            Safeguard::Clamp
        )
        .is_err());
    }

    #[test]
    fn snapshot_round_trips_through_json() {
        let mut id = identifier(Safeguard::Skip);
        id.update(&Regressor::from_values(vec![1.0, 0.5, -0.5]), 0.7)
            .unwrap();
        let snap = id.snapshot();
        let json = serde_json::to_string(&snap).unwrap();
        let back: IdentifierSnapshot = serde_json::from_str(&json).unwrap();
        assert_eq!(back, snap);
        assert!(json.contains("\"safeguard\":\"skip\""));
    }
}
