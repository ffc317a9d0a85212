//! Floating-point abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used by quadrature and statistics: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; values are always representable up to rounding.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every Scalar")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize converts to every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Pairwise (tree) summation. The summation order depends only on the slice
/// length, so results are bit-stable across thread counts.
pub fn pairwise_sum<S: Scalar>(values: &[S]) -> S {
    const LEAF: usize = 64;
    if values.len() <= LEAF {
        let mut acc = S::zero();
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64 * 0.5).collect();
        let naive: f64 = v.iter().sum();
        assert_eq!(pairwise_sum(&v), naive);
    }

    #[test]
    fn pairwise_is_more_accurate_in_f32() {
        let v = vec![0.1f32; 1 << 20];
        let exact = 0.1f64 * (1u64 << 20) as f64;
        let pw = pairwise_sum(&v) as f64;
        let naive: f32 = v.iter().copied().fold(0.0, |a, b| a + b);
        assert!((pw - exact).abs() < (naive as f64 - exact).abs());
        assert!((pw - exact).abs() / exact < 1e-5);
    }
}
