//! Batch matching pursuit over a finite, sampled, unit-norm dictionary.

use crate::error::{Error, Result};

/// Column norms must be within this of one.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

/// A finite collection of unit-norm columns of equal length.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledDictionary {
    columns: Vec<Vec<f64>>,
}

impl SampledDictionary {
    pub fn new(columns: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::Empty("dictionary"));
        };
        let len = first.len();
        if len == 0 {
            return Err(Error::Empty("dictionary column"));
        }
        for (index, col) in columns.iter().enumerate() {
            if col.len() != len {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    actual: col.len(),
                });
            }
            let norm = dot(col, col).sqrt();
            if !((norm - 1.0).abs() <= UNIT_NORM_TOLERANCE) {
                return Err(Error::NonUnitColumn { index, norm });
            }
        }
        Ok(SampledDictionary { columns })
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Length of each column.
    pub fn signal_len(&self) -> usize {
        self.columns[0].len()
    }
}

/// Outcome of [`decompose`].
#[derive(Clone, Debug, PartialEq)]
pub struct MpResult {
    /// `(atom index, coefficient)` in pick order.
    pub picks: Vec<(usize, f64)>,
    pub residual: Vec<f64>,
    /// Residual norm after each pick, starting with `||f||` before the first.
    pub residual_norms: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Greedy expansion of `f`: at each step pick the column with the largest
/// absolute correlation to the residual (lowest index on ties) and remove
/// its projection. Stops after `max_iters` picks or once the residual norm
/// is at most `tol`.
pub fn decompose(
    f: &[f64],
    dict: &SampledDictionary,
    max_iters: usize,
    tol: f64,
) -> Result<MpResult> {
    if f.is_empty() {
        return Err(Error::Empty("signal"));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("signal sample"));
    }
    if f.len() != dict.signal_len() {
        return Err(Error::DimensionMismatch {
            expected: dict.signal_len(),
            actual: f.len(),
        });
    }
    if max_iters == 0 {
        return Err(Error::Config("max_iters must be at least 1".into()));
    }
    if !(tol >= 0.0) {
        return Err(Error::Config(format!(
            "tolerance must be non-negative, got {tol}"
        )));
    }

    let mut residual = f.to_vec();
    let mut picks = Vec::new();
    let mut residual_norms = vec![norm(&residual)];

    while picks.len() < max_iters && *residual_norms.last().unwrap() > tol {
        let (best, coeff) = dict
            .columns
            .iter()
            .map(|col| dot(&residual, col))
            .enumerate()
            .fold((0, 0.0_f64), |(bi, bc), (i, c)| {
                if c.abs() > bc.abs() {
                    (i, c)
                } else {
                    (bi, bc)
                }
            });
        if coeff == 0.0 {
            // residual orthogonal to every atom
            break;
        }
        for (r, g) in residual.iter_mut().zip(&dict.columns[best]) {
            *r -= coeff * g;
        }
        picks.push((best, coeff));
        residual_norms.push(norm(&residual));
    }

    Ok(MpResult {
        picks,
        residual,
        residual_norms,
    })
}

/// Sum of `coefficient * column` over the picks.
pub fn reconstruct(result: &MpResult, dict: &SampledDictionary) -> Result<Vec<f64>> {
    let mut out = vec![0.0; dict.signal_len()];
    for &(index, coeff) in &result.picks {
        let col = dict.columns.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: dict.len(),
        })?;
        for (o, g) in out.iter_mut().zip(col) {
            *o += coeff * g;
        }
    }
    Ok(out)
}
