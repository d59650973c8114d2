//! Linear reference model and the certainty-equivalence control law.

use nalgebra::DMatrix;

pub use nalgebra::Complex;

use crate::error::{Error, Result};

/// Imaginary residue allowed when expanding conjugate-pair products, and the
/// tolerance used to pair conjugates.
pub const CONJUGATE_TOLERANCE: f64 = 1e-12;

/// Expands `prod (z - p_i) = z^n + c_1 z^(n-1) + ... + c_n` and returns
/// `s_i = -c_i`, the coefficients of `y_m(k) = sum s_i y_m(k-i) + r(k)`.
pub fn poles_to_coefficients(poles: &[Complex<f64>]) -> Result<Vec<f64>> {
    if poles.is_empty() {
        return Err(Error::Empty("pole list"));
    }
    for p in poles {
        if !p.re.is_finite() || !p.im.is_finite() {
            return Err(Error::NonFiniteInput("pole"));
        }
        if p.norm() >= 1.0 {
            return Err(Error::Unstable(format!(
                "pole {} has magnitude {} >= 1",
                fmt_complex(*p),
                p.norm()
            )));
        }
    }
    check_conjugate_pairs(poles)?;

    let mut coeffs = vec![Complex::new(1.0, 0.0)];
    for &p in poles {
        let mut next = vec![Complex::new(0.0, 0.0); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * p;
        }
        coeffs = next;
    }
    coeffs[1..]
        .iter()
        .map(|c| {
            if c.im.abs() > CONJUGATE_TOLERANCE {
                Err(Error::UnpairedPole(format!(
                    "expansion left imaginary residue {}",
                    c.im
                )))
            } else {
                Ok(-c.re)
            }
        })
        .collect()
}

fn fmt_complex(p: Complex<f64>) -> String {
    if p.im >= 0.0 {
        format!("{}+{}i", p.re, p.im)
    } else {
        format!("{}{}i", p.re, p.im)
    }
}

fn check_conjugate_pairs(poles: &[Complex<f64>]) -> Result<()> {
    let mut used = vec![false; poles.len()];
    for (i, p) in poles.iter().enumerate() {
        if p.im.abs() <= CONJUGATE_TOLERANCE || used[i] {
            continue;
        }
        let partner = (0..poles.len()).find(|&j| {
            j != i
                && !used[j]
                && (poles[j].re - p.re).abs() <= CONJUGATE_TOLERANCE
                && (poles[j].im + p.im).abs() <= CONJUGATE_TOLERANCE
        });
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => return Err(Error::UnpairedPole(fmt_complex(*p))),
        }
    }
    Ok(())
}

/// Roots of `z^n - s_1 z^(n-1) - ... - s_n` from the companion matrix.
pub fn coefficients_to_poles(s: &[f64]) -> Vec<Complex<f64>> {
    let n = s.len();
    if n == 0 {
        return Vec::new();
    }
    let companion = DMatrix::from_fn(n, n, |i, j| {
        if i == 0 {
            s[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion.complex_eigenvalues().iter().copied().collect()
}

/// Schur-Cohn step-down test: true when every root of
/// `z^n - s_1 z^(n-1) - ... - s_n` lies strictly inside the unit circle.
pub fn is_schur_stable(s: &[f64]) -> bool {
    let mut a: Vec<f64> = std::iter::once(1.0).chain(s.iter().map(|v| -v)).collect();
    while a.len() > 1 {
        let n = a.len() - 1;
        let k = a[n] / a[0];
        if !(k.abs() < 1.0) {
            return false;
        }
        let denom = 1.0 - k * k;
        a = (0..n).map(|i| (a[i] - k * a[n - i]) / denom).collect();
    }
    true
}

/// Stable AR reference model `y_m(k) = sum s_i y_m(k-i) + r(k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceModel {
    s: Vec<f64>,
    // most recent first: y_m(k-1), ..., y_m(k-n)
    history: Vec<f64>,
}

impl ReferenceModel {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Empty("reference model coefficients"));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("reference model coefficient"));
        }
        if !is_schur_stable(&s) {
            return Err(Error::Unstable(format!(
                "characteristic polynomial with s = {s:?} has a root on or outside the unit circle"
            )));
        }
        let n = s.len();
        Ok(ReferenceModel {
            s,
            history: vec![0.0; n],
        })
    }

    pub fn from_poles(poles: &[Complex<f64>]) -> Result<Self> {
        Self::new(poles_to_coefficients(poles)?)
    }

    /// Builds a model with an explicit starting history (most recent first).
    pub fn with_history(s: Vec<f64>, history: Vec<f64>) -> Result<Self> {
        let mut model = Self::new(s)?;
        if history.len() != model.s.len() {
            return Err(Error::DimensionMismatch {
                expected: model.s.len(),
                actual: history.len(),
            });
        }
        model.history = history;
        Ok(model)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.s
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn order(&self) -> usize {
        self.s.len()
    }

    /// `sum s_i y_m(k-i)` over the current history.
    pub fn feedback(&self) -> f64 {
        weighted_history(&self.s, &self.history)
    }

    /// Advances one step and returns `y_m(k)`.
    pub fn step(&mut self, r: f64) -> f64 {
        let ym = self.feedback() + r;
        self.advance(ym);
        ym
    }

    /// Pushes an externally computed `y_m(k)` into the history.
    pub fn advance(&mut self, ym: f64) {
        self.history.rotate_right(1);
        self.history[0] = ym;
    }

    /// Steady-state gain `1 / (1 - sum s_i)`.
    pub fn dc_gain(&self) -> f64 {
        1.0 / (1.0 - self.s.iter().sum::<f64>())
    }
}

/// `sum s_i h_i` with `h` most recent first; missing entries count as zero.
pub fn weighted_history(s: &[f64], history: &[f64]) -> f64 {
    s.iter().zip(history).map(|(a, b)| a * b).sum()
}

/// One evaluation of the certainty-equivalence law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlRecord {
    pub u: f64,
    pub f_hat: f64,
    pub r: f64,
    pub feedback_term: f64,
}

/// `u = -f_hat + feedback + r`, with the feedback supplied by the caller.
pub fn certainty_equivalence(f_hat: f64, feedback_term: f64, r: f64) -> Result<ControlRecord> {
    if !f_hat.is_finite() {
        return Err(Error::NonFiniteInput("f_hat"));
    }
    Ok(ControlRecord {
        u: -f_hat + feedback_term + r,
        f_hat,
        r,
        feedback_term,
    })
}

/// Control law using the reference model's own output history as feedback.
pub fn control_law(f_hat: f64, model: &ReferenceModel, r: f64) -> Result<ControlRecord> {
    certainty_equivalence(f_hat, model.feedback(), r)
}

/// Identification error `eta = f - f_hat`.
pub fn matching_error(f_true: f64, f_hat: f64) -> f64 {
    f_true - f_hat
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn pole_placement_examples() {
        let s = poles_to_coefficients(&[c(0.5, 0.0), c(0.4, 0.4), c(0.4, -0.4)]).unwrap();
        for (a, b) in s.iter().zip([1.3, -0.72, 0.16]) {
            assert!((a - b).abs() < 1e-12, "{s:?}");
        }
        let s = poles_to_coefficients(&[c(0.4, 0.0), c(0.2, 0.2), c(0.2, -0.2)]).unwrap();
        for (a, b) in s.iter().zip([0.8, -0.24, 0.032]) {
            assert!((a - b).abs() < 1e-12, "{s:?}");
        }
        assert_eq!(poles_to_coefficients(&[c(0.0, 0.0)]).unwrap(), vec![0.0]);
    }

    #[test]
    fn pole_placement_errors() {
        assert!(matches!(
            poles_to_coefficients(&[c(1.0, 0.0)]),
            Err(Error::Unstable(_))
        ));
        assert!(matches!(
            poles_to_coefficients(&[c(0.6, 0.8)]),
            Err(Error::Unstable(_))
        ));
        assert!(matches!(
            poles_to_coefficients(&[c(0.2, 0.3), c(0.2, 0.3)]),
            Err(Error::UnpairedPole(_))
        ));
    }

    #[test]
    fn schur_cohn_agrees_with_roots() {
        assert!(is_schur_stable(&[1.3, -0.72, 0.16]));
        assert!(is_schur_stable(&[0.0]));
        assert!(!is_schur_stable(&[1.0]));
        assert!(!is_schur_stable(&[2.5, -1.0]));
        // z^2 - 1.8 z + 0.81 = (z - 0.9)^2
        assert!(is_schur_stable(&[1.8, -0.81]));
        assert!(ReferenceModel::new(vec![1.1]).is_err());
    }

    #[test]
    fn reference_step_examples() {
        let mut m = ReferenceModel::new(vec![1.3, -0.72, 0.16]).unwrap();
        assert_eq!(m.step(1.0), 1.0);

        let mut m =
            ReferenceModel::with_history(vec![1.3, -0.72, 0.16], vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(m.step(0.0), 1.3);
        assert_eq!(m.history(), &[1.3, 1.0, 0.0]);

        let mut m = ReferenceModel::with_history(vec![0.5], vec![2.0]).unwrap();
        assert_eq!(m.step(0.0), 1.0);
    }

    #[test]
    fn control_law_examples() {
        let m = ReferenceModel::new(vec![1.3, -0.72, 0.16]).unwrap();
        assert_eq!(control_law(0.0, &m, 1.0).unwrap().u, 1.0);

        let m = ReferenceModel::with_history(vec![1.3, -0.72, 0.16], vec![1.0, 0.0, 0.0]).unwrap();
        let rec = control_law(0.5, &m, 0.0).unwrap();
        assert!((rec.u - 0.8).abs() < 1e-15);

        let m =
            ReferenceModel::with_history(vec![0.8, -0.24, 0.032], vec![1.0, 2.0, -1.0]).unwrap();
        let rec = control_law(0.1, &m, 0.5).unwrap();
        assert!((rec.u - 0.688).abs() < 1e-12, "{}", rec.u);
        assert_eq!(rec.u, -rec.f_hat + rec.feedback_term + rec.r);

        assert!(control_law(f64::INFINITY, &m, 0.0).is_err());
    }

    #[test]
    fn matching_error_examples() {
        assert_eq!(matching_error(0.875, 0.875), 0.0);
        assert!((matching_error(1.0, 0.4) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn dc_gain() {
        let m = ReferenceModel::new(vec![1.3, -0.72, 0.16]).unwrap();
        assert!((m.dc_gain() - 1.0 / 0.26).abs() < 1e-12);
    }
}
