//! Wavelet filter tables and dyadic tabulation of scaling functions and wavelets.
//!
//! Scaling functions are tabulated from their lowpass filter by first solving the
//! refinement equation at the integers (an eigenvector problem) and then filling
//! in each finer dyadic level with the two-scale relation
//! `phi(x) = sqrt(2) * sum_n h[n] * phi(2x - n)`. Every tabulated value is therefore
//! an exact (to rounding) point value of the limit function, not a truncated
//! cascade iterate. Wavelets follow from the tabulated scaling function through
//! the quadrature-mirror highpass `g[n] = (-1)^n * h~[M-1-n]`, where `h~` is the
//! dual lowpass (equal to `h` for orthogonal families).

use std::f64::consts::SQRT_2;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the filter normalization checks performed at load time.
pub const FILTER_TOLERANCE: f64 = 1e-12;

/// Default number of dyadic levels used when tabulating atoms.
pub const DEFAULT_LEVELS: u32 = 10;

#[allow(clippy::excessive_precision)]
const DB2: [f64; 4] = [
    0.482_962_913_144_534_143_374_9,
    0.836_516_303_737_807_905_575_3,
    0.224_143_868_042_013_381_026,
    -0.129_409_522_551_260_381_174_4,
];

#[allow(clippy::excessive_precision)]
const DB3: [f64; 6] = [
    0.332_670_552_950_082_615_998_5,
    0.806_891_509_311_092_576_494_5,
    0.459_877_502_118_491_570_095_2,
    -0.135_011_020_010_254_588_696_4,
    -0.085_441_273_882_026_661_692_82,
    0.035_226_291_885_709_536_602_74,
];

#[allow(clippy::excessive_precision)]
const DB4: [f64; 8] = [
    0.230_377_813_308_896_500_863_3,
    0.714_846_570_552_915_647_089_9,
    0.630_880_767_929_858_907_881_7,
    -0.027_983_769_416_859_854_211_41,
    -0.187_034_811_719_093_084_079_6,
    0.030_841_381_835_560_763_627_22,
    0.032_883_011_666_885_199_735_41,
    -0.010_597_401_785_069_032_104_88,
];

#[allow(clippy::excessive_precision)]
const DB5: [f64; 10] = [
    0.160_102_397_974_192_914_480_7,
    0.603_829_269_797_189_670_540_1,
    0.724_308_528_437_772_927_728_1,
    0.138_428_145_901_320_731_505_4,
    -0.242_294_887_066_382_031_862_6,
    -0.032_244_869_584_638_374_648_48,
    0.077_571_493_840_045_713_523_13,
    -0.006_241_490_212_798_274_274_191,
    -0.012_580_751_999_081_999_468_51,
    0.003_335_725_285_473_771_277_998,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WaveletFamily {
    #[serde(rename = "haar")]
    Haar,
    #[serde(rename = "db2")]
    Db2,
    #[serde(rename = "db3")]
    Db3,
    #[serde(rename = "db4")]
    Db4,
    #[serde(rename = "db5")]
    Db5,
    #[serde(rename = "bior3.1")]
    Bior3_1,
    #[serde(rename = "bior3.3")]
    Bior3_3,
}

impl WaveletFamily {
    pub const ALL: [WaveletFamily; 7] = [
        WaveletFamily::Haar,
        WaveletFamily::Db2,
        WaveletFamily::Db3,
        WaveletFamily::Db4,
        WaveletFamily::Db5,
        WaveletFamily::Bior3_1,
        WaveletFamily::Bior3_3,
    ];

    pub fn is_orthogonal(self) -> bool {
        !matches!(self, WaveletFamily::Bior3_1 | WaveletFamily::Bior3_3)
    }

    pub fn name(self) -> &'static str {
        match self {
            WaveletFamily::Haar => "haar",
            WaveletFamily::Db2 => "db2",
            WaveletFamily::Db3 => "db3",
            WaveletFamily::Db4 => "db4",
            WaveletFamily::Db5 => "db5",
            WaveletFamily::Bior3_1 => "bior3.1",
            WaveletFamily::Bior3_3 => "bior3.3",
        }
    }

    /// Reconstruction lowpass filter.
    fn lowpass(self) -> Vec<f64> {
        match self {
            WaveletFamily::Haar => vec![1.0 / SQRT_2, 1.0 / SQRT_2],
            WaveletFamily::Db2 => DB2.to_vec(),
            WaveletFamily::Db3 => DB3.to_vec(),
            WaveletFamily::Db4 => DB4.to_vec(),
            WaveletFamily::Db5 => DB5.to_vec(),
            // quadratic B-spline refinement mask
            WaveletFamily::Bior3_1 | WaveletFamily::Bior3_3 => [1.0, 3.0, 3.0, 1.0]
                .iter()
                .map(|c| c * SQRT_2 / 8.0)
                .collect(),
        }
    }

    /// Decomposition (dual) lowpass; drives the reconstruction wavelet.
    fn dual_lowpass(self) -> Vec<f64> {
        match self {
            WaveletFamily::Bior3_1 => [-1.0, 3.0, 3.0, -1.0]
                .iter()
                .map(|c| c * SQRT_2 / 4.0)
                .collect(),
            WaveletFamily::Bior3_3 => [3.0, -9.0, -7.0, 45.0, 45.0, -7.0, -9.0, 3.0]
                .iter()
                .map(|c| c * SQRT_2 / 64.0)
                .collect(),
            other => other.lowpass(),
        }
    }
}

impl fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Scaling,
    Wavelet,
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShapeKind::Scaling => "scaling",
            ShapeKind::Wavelet => "wavelet",
        })
    }
}

/// A validated two-scale filter pair for one family and shape kind.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletFilter {
    family: WaveletFamily,
    lowpass: Vec<f64>,
    dual_lowpass: Vec<f64>,
    kind: ShapeKind,
}

impl WaveletFilter {
    /// Loads the embedded coefficient table for `family` and validates it.
    pub fn new(family: WaveletFamily, kind: ShapeKind) -> Result<Self> {
        Self::from_coefficients(family, family.lowpass(), family.dual_lowpass(), kind)
    }

    /// Builds a filter from explicit coefficients. Normalization is checked
    /// against the rules for `family` (orthogonal or biorthogonal).
    pub fn from_coefficients(
        family: WaveletFamily,
        lowpass: Vec<f64>,
        dual_lowpass: Vec<f64>,
        kind: ShapeKind,
    ) -> Result<Self> {
        let filter = WaveletFilter {
            family,
            lowpass,
            dual_lowpass,
            kind,
        };
        filter.validate()?;
        Ok(filter)
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn dual_lowpass(&self) -> &[f64] {
        &self.dual_lowpass
    }

    /// Quadrature-mirror highpass `g[n] = (-1)^n h~[M-1-n]`.
    pub fn highpass(&self) -> Vec<f64> {
        let m = self.dual_lowpass.len();
        (0..m)
            .map(|n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sign * self.dual_lowpass[m - 1 - n]
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let check = |coeffs: &[f64], sum: &'static str, actual: f64, expected: f64| {
            if coeffs.is_empty()
                || !actual.is_finite()
                || (actual - expected).abs() > FILTER_TOLERANCE
            {
                Err(Error::FilterNormalization {
                    family: self.family.to_string(),
                    sum,
                    actual,
                    expected,
                })
            } else {
                Ok(())
            }
        };
        let sum: f64 = self.lowpass.iter().sum();
        check(&self.lowpass, "sum(h)", sum, SQRT_2)?;
        let dual_sum: f64 = self.dual_lowpass.iter().sum();
        check(&self.dual_lowpass, "sum(h_dual)", dual_sum, SQRT_2)?;
        if self.family.is_orthogonal() {
            let energy: f64 = self.lowpass.iter().map(|h| h * h).sum();
            check(&self.lowpass, "sum(h^2)", energy, 1.0)?;
        }
        Ok(())
    }
}

/// Uniformly sampled real function on `[x0, x0 + (len - 1) * dx]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedFunction {
    samples: Vec<f64>,
    x0: f64,
    dx: f64,
}

impl TabulatedFunction {
    pub fn new(samples: Vec<f64>, x0: f64, dx: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("tabulation"));
        }
        if !(dx > 0.0) || !dx.is_finite() || !x0.is_finite() {
            return Err(Error::InvalidDictionary(format!(
                "tabulation spacing must be positive and finite, got dx={dx}"
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFiniteInput("tabulated sample"));
        }
        Ok(TabulatedFunction { samples, x0, dx })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Position of the last sample.
    pub fn x_end(&self) -> f64 {
        self.x0 + (self.samples.len() - 1) as f64 * self.dx
    }

    pub fn support_len(&self) -> f64 {
        self.x_end() - self.x0
    }

    /// Linear interpolation; zero outside the tabulated interval.
    pub fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.x0) / self.dx;
        let last = self.samples.len() - 1;
        if !(pos >= 0.0) || pos > last as f64 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        if i >= last {
            return self.samples[last];
        }
        let t = pos - i as f64;
        (1.0 - t) * self.samples[i] + t * self.samples[i + 1]
    }

    /// Riemann sum of the samples.
    pub fn integral(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.dx
    }

    /// Discrete squared L2 norm, `sum(s^2) * dx`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum::<f64>() * self.dx
    }
}

/// Tabulates the scaling function or wavelet of `filter` at spacing `2^-levels`.
///
/// The scaling function lives on `[0, L-1]` for a lowpass of length `L`; the
/// wavelet on `[0, (L + M - 2) / 2]` where `M` is the dual lowpass length.
pub fn cascade_tabulate(filter: &WaveletFilter, levels: u32) -> Result<TabulatedFunction> {
    if !(4..=16).contains(&levels) {
        return Err(Error::InvalidLevels(levels));
    }
    filter.validate()?;
    let phi = scaling_samples(filter.lowpass(), levels)?;
    let dx = 1.0 / f64::from(1u32 << levels);
    match filter.kind() {
        ShapeKind::Scaling => TabulatedFunction::new(phi, 0.0, dx),
        ShapeKind::Wavelet => {
            let psi = wavelet_samples(&phi, &filter.highpass(), filter.lowpass().len(), levels);
            TabulatedFunction::new(psi, 0.0, dx)
        }
    }
}

/// Scaling function values at `k / 2^levels`, `k = 0..=(L-1) * 2^levels`.
fn scaling_samples(h: &[f64], levels: u32) -> Result<Vec<f64>> {
    let len = h.len();
    let scale = 1usize << levels;
    let last = (len - 1) * scale;
    let mut values = vec![0.0; last + 1];

    for (m, v) in integer_values(h)?.into_iter().enumerate() {
        values[m * scale] = v;
    }

    // fill odd multiples of each successively finer step
    for j in 1..=levels {
        let step = 1usize << (levels - j);
        let mut k = step;
        while k < last {
            let mut acc = 0.0;
            for (n, &hn) in h.iter().enumerate() {
                let shift = n * scale;
                let twice = 2 * k;
                if twice >= shift && twice - shift <= last {
                    acc += hn * values[twice - shift];
                }
            }
            values[k] = SQRT_2 * acc;
            k += 2 * step;
        }
    }
    Ok(values)
}

/// Values of the scaling function at the integers `0..L-1` (the value at `L-1`
/// is zero under the right-continuous convention). Solves the restricted
/// eigenproblem `phi = M phi` with `M[i][j] = sqrt(2) h[2i - j]`, normalized so
/// the values sum to one.
fn integer_values(h: &[f64]) -> Result<Vec<f64>> {
    let n = h.len() - 1;
    if n == 0 {
        return Err(Error::InvalidDictionary(
            "lowpass filter needs at least two taps".into(),
        ));
    }
    let mut system = DMatrix::<f64>::zeros(n + 1, n);
    for i in 0..n {
        for j in 0..n {
            let idx = 2 * i as isize - j as isize;
            let coeff = if idx >= 0 && (idx as usize) < h.len() {
                SQRT_2 * h[idx as usize]
            } else {
                0.0
            };
            system[(i, j)] = coeff - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        system[(n, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;

    let svd = system.svd(true, true);
    let solution = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidDictionary(format!("refinement eigenproblem: {e}")))?;
    let residual = (h_matrix(h, n) * &solution - &solution).amax();
    if residual > 1e-10 || solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDictionary(
            "refinement equation has no normalized fixed point at the integers".into(),
        ));
    }
    let mut values: Vec<f64> = solution.iter().copied().collect();
    values.push(0.0);
    Ok(values)
}

fn h_matrix(h: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        let idx = 2 * i as isize - j as isize;
        if idx >= 0 && (idx as usize) < h.len() {
            SQRT_2 * h[idx as usize]
        } else {
            0.0
        }
    })
}

/// Wavelet values at `k / 2^levels` from tabulated scaling values.
fn wavelet_samples(phi: &[f64], g: &[f64], lowpass_len: usize, levels: u32) -> Vec<f64> {
    let scale = 1usize << levels;
    let phi_last = phi.len() - 1;
    // support end (L + M - 2) / 2 in units of the fine grid
    let last = (lowpass_len + g.len() - 2) * scale / 2;
    (0..=last)
        .map(|k| {
            let twice = 2 * k;
            let acc: f64 = g
                .iter()
                .enumerate()
                .filter_map(|(n, &gn)| {
                    let shift = n * scale;
                    (twice >= shift && twice - shift <= phi_last).then(|| gn * phi[twice - shift])
                })
                .sum();
            SQRT_2 * acc
        })
        .collect()
}
