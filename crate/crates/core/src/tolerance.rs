/// Relative slack allowed when comparing a measured quantity with a bound.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// `lhs <= rhs` up to [`BOUND_TOLERANCE`] relative to `rhs`.
#[inline]
pub fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + BOUND_TOLERANCE * rhs.abs()
}
