//! Fixed-point signal lattice for the closed loop.
//!
//! Every signal that crosses the loop (reference, feedback, estimates, plant
//! nonlinearity, noise, applied input) is rounded to a multiple of `2^-40`.
//! Sums and differences of such values are exact in `f64` while their
//! magnitudes stay below [`EXACT_RANGE`], so the additive loop identities
//! (`y = f + u + n`, `y = y_m + eta` under perfect cancellation) hold without
//! rounding error.

/// Lattice spacing exponent: signals are multiples of `2^-LATTICE_BITS`.
pub const LATTICE_BITS: i32 = 40;

const SCALE: f64 = (1u64 << LATTICE_BITS) as f64;

/// Magnitude below which lattice additions are exact (`2^(52 - LATTICE_BITS)`).
pub const EXACT_RANGE: f64 = (1u64 << (52 - LATTICE_BITS)) as f64;

/// Nearest lattice point (ties away from zero). Non-finite values pass through.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() || x.abs() >= EXACT_RANGE * 2.0 {
        return x;
    }
    (x * SCALE).round() / SCALE
}

/// True when `x` already lies on the lattice.
pub fn on_lattice(x: f64) -> bool {
    quantize(x) == x
}
