//! Periodic wavelet dictionaries on `[0, 10)` and their evaluation at a regressor.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching_pursuit::SampledDictionary;
use crate::wavelet::{
    cascade_tabulate, ShapeKind, TabulatedFunction, WaveletFamily, WaveletFilter,
};

/// Length of the periodic atom domain, in seconds.
pub const PERIOD: f64 = 10.0;

/// Grid step used by the coverage check.
pub const COVERAGE_STEP: f64 = 0.01;

/// An atom counts as "covering" `x` when `|atom(x)|` exceeds this.
pub const COVERAGE_THRESHOLD: f64 = 1e-6;

// Wrapped coordinates are snapped to multiples of 2^-32 so that `x` and
// `x + PERIOD` land on the same lookup position.
const WRAP_LATTICE: f64 = 4_294_967_296.0;

/// Reduces `x` into `[0, period)` on the wrap lattice.
pub fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    let snapped = (r * WRAP_LATTICE).round() / WRAP_LATTICE;
    if snapped >= period {
        0.0
    } else {
        snapped
    }
}

/// One family/kind entry of a dictionary layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub family: WaveletFamily,
    pub kind: ShapeKind,
    /// Number of uniformly spaced copies over the period.
    pub shifts: usize,
    /// Horizontal stretch applied to the tabulated shape.
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarizationSpec {
    /// Per-component weights; `None` means the uniform mean.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "default_offset")]
    pub offset: f64,
}

fn default_offset() -> f64 {
    5.0
}

impl Default for ScalarizationSpec {
    fn default() -> Self {
        ScalarizationSpec {
            weights: None,
            offset: default_offset(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionarySpec {
    pub families: Vec<FamilySpec>,
    #[serde(default = "default_levels")]
    pub levels: u32,
    #[serde(default)]
    pub scalarization: ScalarizationSpec,
}

fn default_levels() -> u32 {
    crate::wavelet::DEFAULT_LEVELS
}

/// Affine map from a regressor vector to an atom argument in `[0, period)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarizationMap {
    weights: Vec<f64>,
    offset: f64,
    period: f64,
}

impl ScalarizationMap {
    pub fn new(weights: Vec<f64>, offset: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("scalarization weights"));
        }
        if weights.iter().any(|w| !w.is_finite()) || !offset.is_finite() {
            return Err(Error::NonFiniteInput("scalarization parameter"));
        }
        Ok(ScalarizationMap {
            weights,
            offset,
            period: PERIOD,
        })
    }

    /// Uniform-weight mean of `dim` components plus `offset`.
    pub fn uniform(dim: usize, offset: f64) -> Result<Self> {
        Self::new(vec![1.0 / dim as f64; dim], offset)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `(sum_i w_i * phi_i + offset) mod period`.
    pub fn scalarize(&self, regressor: &[f64]) -> Result<f64> {
        if regressor.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: regressor.len(),
            });
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(regressor)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.offset;
        if !s.is_finite() {
            return Err(Error::NonFiniteInput("scalarized regressor"));
        }
        Ok(wrap(s, self.period))
    }
}

/// A shifted, scaled, unit-norm, periodic copy of a tabulated shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    family: WaveletFamily,
    kind: ShapeKind,
    shape: Arc<TabulatedFunction>,
    shift: f64,
    scale: f64,
    norm_constant: f64,
    period: f64,
}

impl Atom {
    pub fn new(
        family: WaveletFamily,
        kind: ShapeKind,
        shape: Arc<TabulatedFunction>,
        shift: f64,
        scale: f64,
    ) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidDictionary(format!(
                "scale must be positive, got {scale}"
            )));
        }
        if shape.support_len() * scale > PERIOD {
            return Err(Error::InvalidDictionary(format!(
                "{family} {kind} support {} exceeds the period {PERIOD}",
                shape.support_len() * scale
            )));
        }
        let energy = shape.energy() * scale;
        if !(energy > 0.0) {
            return Err(Error::InvalidDictionary(format!(
                "{family} {kind} shape has zero energy"
            )));
        }
        Ok(Atom {
            family,
            kind,
            shape,
            shift: wrap(shift, PERIOD),
            scale,
            norm_constant: 1.0 / energy.sqrt(),
            period: PERIOD,
        })
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn shape(&self) -> &TabulatedFunction {
        &self.shape
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn norm_constant(&self) -> f64 {
        self.norm_constant
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Support width after scaling.
    pub fn width(&self) -> f64 {
        self.shape.support_len() * self.scale
    }

    /// Periodic evaluation: wrap, shift, then interpolate the tabulation.
    pub fn eval(&self, x: f64) -> f64 {
        let offset = (wrap(x, self.period) - self.shift).rem_euclid(self.period);
        let local = self.shape.x0() + offset / self.scale;
        self.norm_constant * self.shape.eval(local)
    }

    /// Discrete L2 norm over one period, sampled at the atom's own grid.
    pub fn discrete_norm(&self) -> f64 {
        let step = self.shape.dx() * self.scale;
        let sum: f64 = (0..self.shape.samples().len())
            .map(|k| {
                let v = self.eval(self.shift + k as f64 * step);
                v * v
            })
            .sum();
        (sum * step).sqrt()
    }
}

/// Ordered atom collection plus the regressor scalarization.
#[derive(Clone, Debug, PartialEq)]
pub struct Dictionary {
    atoms: Vec<Atom>,
    scalarization: ScalarizationMap,
}

impl Dictionary {
    pub fn new(atoms: Vec<Atom>, scalarization: ScalarizationMap) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Empty("dictionary"));
        }
        Ok(Dictionary {
            atoms,
            scalarization,
        })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn scalarization(&self) -> &ScalarizationMap {
        &self.scalarization
    }

    /// Regressor dimension the scalarization expects.
    pub fn regressor_dim(&self) -> usize {
        self.scalarization.dim()
    }

    /// Every atom evaluated at the same scalar argument.
    pub fn evaluate_at(&self, x: f64) -> Vec<f64> {
        self.atoms.iter().map(|a| a.eval(x)).collect()
    }

    /// The basis response vector for one regressor.
    pub fn evaluate_all(&self, regressor: &[f64]) -> Result<Vec<f64>> {
        let x = self.scalarization.scalarize(regressor)?;
        Ok(self.evaluate_at(x))
    }

    /// Grid points in `[0, period)` with no atom above the coverage threshold,
    /// merged into closed ranges.
    pub fn uncovered_ranges(&self) -> Vec<(f64, f64)> {
        let steps = (PERIOD / COVERAGE_STEP).round() as usize;
        let mut ranges: Vec<(f64, f64)> = Vec::new();
        let mut open: Option<(f64, f64)> = None;
        for i in 0..steps {
            let x = i as f64 * COVERAGE_STEP;
            let covered = self
                .atoms
                .iter()
                .any(|a| a.eval(x).abs() > COVERAGE_THRESHOLD);
            match (covered, open.as_mut()) {
                (false, Some(r)) => r.1 = x,
                (false, None) => open = Some((x, x)),
                (true, Some(_)) => ranges.extend(open.take()),
                (true, None) => {}
            }
        }
        ranges.extend(open);
        ranges
    }

    /// Samples every atom on `points` uniform positions over one period and
    /// normalizes the columns to unit Euclidean norm.
    pub fn to_sampled(&self, points: usize) -> Result<SampledDictionary> {
        if points == 0 {
            return Err(Error::Empty("sample grid"));
        }
        let step = PERIOD / points as f64;
        let columns = self
            .atoms
            .iter()
            .enumerate()
            .map(|(i, atom)| {
                let col: Vec<f64> = (0..points).map(|j| atom.eval(j as f64 * step)).collect();
                let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::InvalidDictionary(format!(
                        "atom {i} vanishes on a {points}-point grid"
                    )));
                }
                Ok(col.into_iter().map(|v| v / norm).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        SampledDictionary::new(columns)
    }

    /// Short human-readable layout summary, e.g. `db2/scaling x4, db3/wavelet x4`.
    pub fn summary(&self) -> String {
        let mut parts: Vec<(WaveletFamily, ShapeKind, usize)> = Vec::new();
        for atom in &self.atoms {
            match parts.last_mut() {
                Some(last) if last.0 == atom.family && last.1 == atom.kind => last.2 += 1,
                _ => parts.push((atom.family, atom.kind, 1)),
            }
        }
        parts
            .iter()
            .map(|(f, k, n)| format!("{f}/{k} x{n}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn format_ranges(ranges: &[(f64, f64)]) -> String {
    ranges
        .iter()
        .map(|(a, b)| format!("[{a:.2}, {b:.2}]"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Builds the dictionary for `spec`, in family-major, shift-minor order.
///
/// `regressor_dim` sets both the scalarization width and the minimum atom count.
pub fn build_dictionary(spec: &DictionarySpec, regressor_dim: usize) -> Result<Dictionary> {
    if regressor_dim == 0 {
        return Err(Error::InvalidDictionary(
            "regressor dimension must be positive".into(),
        ));
    }
    let scalarization = match &spec.scalarization.weights {
        Some(w) => {
            if w.len() != regressor_dim {
                return Err(Error::DimensionMismatch {
                    expected: regressor_dim,
                    actual: w.len(),
                });
            }
            ScalarizationMap::new(w.clone(), spec.scalarization.offset)?
        }
        None => ScalarizationMap::uniform(regressor_dim, spec.scalarization.offset)?,
    };

    let total: usize = spec.families.iter().map(|f| f.shifts).sum();
    if total < regressor_dim {
        return Err(Error::InsufficientAtoms {
            actual: total,
            minimum: regressor_dim,
        });
    }

    let mut atoms = Vec::with_capacity(total);
    for entry in &spec.families {
        if entry.shifts == 0 {
            continue;
        }
        let filter = WaveletFilter::new(entry.family, entry.kind)?;
        let shape = Arc::new(cascade_tabulate(&filter, spec.levels)?);
        let spacing = PERIOD / entry.shifts as f64;
        for i in 0..entry.shifts {
            atoms.push(Atom::new(
                entry.family,
                entry.kind,
                Arc::clone(&shape),
                i as f64 * spacing,
                entry.scale,
            )?);
        }
    }

    let dict = Dictionary::new(atoms, scalarization)?;
    let uncovered = dict.uncovered_ranges();
    if !uncovered.is_empty() {
        return Err(Error::Uncovered(format_ranges(&uncovered)));
    }
    Ok(dict)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(entries: &[(WaveletFamily, ShapeKind, usize, f64)]) -> DictionarySpec {
        DictionarySpec {
            families: entries
                .iter()
                .map(|&(family, kind, shifts, scale)| FamilySpec {
                    family,
                    kind,
                    shifts,
                    scale,
                })
                .collect(),
            levels: 10,
            scalarization: ScalarizationSpec::default(),
        }
    }

    fn haar_atom(shift: f64) -> Atom {
        let filter = WaveletFilter::new(WaveletFamily::Haar, ShapeKind::Scaling).unwrap();
        let shape = Arc::new(cascade_tabulate(&filter, 8).unwrap());
        Atom::new(WaveletFamily::Haar, ShapeKind::Scaling, shape, shift, 1.0).unwrap()
    }

    #[test]
    fn scalarize_examples() {
        let map = ScalarizationMap::uniform(3, 5.0).unwrap();
        assert_eq!(map.scalarize(&[0.0, 0.0, 0.0]).unwrap(), 5.0);

        let mean = ScalarizationMap::new(vec![1.0], 5.0).unwrap();
        assert_eq!(mean.scalarize(&[6.0]).unwrap(), 1.0);
        assert_eq!(mean.scalarize(&[-5.0]).unwrap(), 0.0);

        let two = ScalarizationMap::new(vec![0.5, 0.5], 5.0).unwrap();
        assert_eq!(two.scalarize(&[4.0, 8.0]).unwrap(), 1.0);

        assert!(matches!(
            map.scalarize(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 2
            })
        ));
    }

    #[test]
    fn scalarize_stays_in_period() {
        let map = ScalarizationMap::new(vec![1.0], 0.0).unwrap();
        for x in [-1e-17, -10.0, 9.999_999_999_999_998, 1e6 + 0.25, -3.7] {
            let s = map.scalarize(&[x]).unwrap();
            assert!((0.0..PERIOD).contains(&s), "{x} -> {s}");
        }
    }

    #[test]
    fn haar_atom_support() {
        let atom = haar_atom(4.0);
        assert!((atom.norm_constant() - 1.0).abs() < 1e-12);
        assert!((atom.eval(4.5) - 1.0 * atom.norm_constant()).abs() < 1e-12);
        assert_eq!(atom.eval(6.0), 0.0);
        assert_eq!(atom.eval(3.99), 0.0);
    }

    #[test]
    fn atom_wraps_across_period_end() {
        let atom = haar_atom(9.5);
        assert!((atom.eval(9.75) - atom.norm_constant()).abs() < 1e-12);
        assert_eq!(atom.eval(0.25), atom.eval(9.75));
        assert_eq!(atom.eval(0.75), 0.0);
    }

    #[test]
    fn atom_eval_is_periodic() {
        let dict = build_dictionary(
            &spec(&[
                (WaveletFamily::Db2, ShapeKind::Scaling, 5, 1.0),
                (WaveletFamily::Db3, ShapeKind::Wavelet, 3, 1.0),
            ]),
            3,
        )
        .unwrap();
        for atom in dict.atoms() {
            assert_eq!(atom.eval(2.3), atom.eval(12.3));
            for i in -2000..2000 {
                let x = i as f64 * 0.0137;
                assert_eq!(atom.eval(x), atom.eval(x + PERIOD), "x={x}");
            }
        }
    }

    #[test]
    fn atom_midpoint_interpolation() {
        let atom = build_dictionary(
            &spec(&[(WaveletFamily::Db3, ShapeKind::Scaling, 4, 1.0)]),
            1,
        )
        .unwrap()
        .atoms()[1]
            .clone();
        let dx = atom.shape().dx();
        let i = 700;
        let s = atom.shape().samples();
        let x = atom.shift() + (i as f64 + 0.5) * dx;
        let expected = atom.norm_constant() * ((s[i] + s[i + 1]) / 2.0);
        assert!((atom.eval(x) - expected).abs() < 1e-15);
    }

    #[test]
    fn haar_three_shifts() {
        let dict = build_dictionary(
            &spec(&[(WaveletFamily::Haar, ShapeKind::Scaling, 3, PERIOD / 3.0)]),
            3,
        )
        .unwrap();
        assert_eq!(dict.len(), 3);
        for atom in dict.atoms() {
            assert!((atom.discrete_norm() - 1.0).abs() < 1e-9);
        }
        // three disjoint atoms; the coverage rule does not apply to a hand-built set
        let atoms: Vec<Atom> = [0.0, 3.0, 6.0].iter().map(|&s| haar_atom(s)).collect();
        let small = Dictionary::new(atoms, ScalarizationMap::new(vec![1.0], 0.0).unwrap()).unwrap();
        assert_eq!(small.len(), 3);
        for atom in small.atoms() {
            assert!((atom.discrete_norm() - 1.0).abs() < 1e-9);
        }
        let g = small.evaluate_all(&[3.4]).unwrap();
        assert_eq!(g.iter().filter(|v| **v != 0.0).count(), 1);
        assert!((g[1] - small.atoms()[1].norm_constant()).abs() < 1e-12);
    }

    #[test]
    fn insufficient_atoms() {
        let err = build_dictionary(
            &spec(&[(WaveletFamily::Haar, ShapeKind::Scaling, 2, 5.0)]),
            3,
        )
        .unwrap_err();
        assert!(err.to_string().contains("insufficient atoms"), "{err}");
    }

    #[test]
    fn uncovered_layout_is_rejected() {
        let err = build_dictionary(
            &spec(&[(WaveletFamily::Haar, ShapeKind::Scaling, 3, 1.0)]),
            3,
        )
        .unwrap_err();
        match err {
            Error::Uncovered(ranges) => assert!(ranges.starts_with("[1.00, 3.33]"), "{ranges}"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn oversized_support_is_rejected() {
        let err = build_dictionary(
            &spec(&[(WaveletFamily::Db5, ShapeKind::Scaling, 4, 2.0)]),
            3,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidDictionary(_)));
    }

    #[test]
    fn evaluate_all_zero_regressor_hits_midpoint() {
        let dict = build_dictionary(
            &spec(&[(WaveletFamily::Db3, ShapeKind::Scaling, 4, 1.0)]),
            3,
        )
        .unwrap();
        let g = dict.evaluate_all(&[0.0; 3]).unwrap();
        for (gi, atom) in g.iter().zip(dict.atoms()) {
            assert_eq!(*gi, atom.eval(5.0));
        }
        assert!(dict.evaluate_all(&[0.0; 2]).is_err());
    }

    #[test]
    fn summary_groups_runs() {
        let dict = build_dictionary(
            &spec(&[
                (WaveletFamily::Db2, ShapeKind::Scaling, 4, 1.0),
                (WaveletFamily::Db2, ShapeKind::Wavelet, 2, 1.0),
                (WaveletFamily::Db3, ShapeKind::Scaling, 4, 1.0),
            ]),
            3,
        )
        .unwrap();
        assert_eq!(
            dict.summary(),
            "db2/scaling x4, db2/wavelet x2, db3/scaling x4"
        );
    }
}
