use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point sample type shared by every image, matrix and optimizer in the crate.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static {
    /// Converts an `f64` literal. Total for the implementing types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Sums a slice by recursive halving. Order depends only on the length, so
/// results are reproducible and error grows as O(log n) instead of O(n).
pub fn pairwise_sum<T: Scalar>(values: &[T]) -> T {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().fold(T::zero(), |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Reduces a list of fixed-width accumulators with the same halving tree as [`pairwise_sum`].
pub(crate) fn pairwise_reduce<T: Scalar, const N: usize>(parts: &[[T; N]]) -> [T; N] {
    match parts.len() {
        0 => [T::zero(); N],
        1 => parts[0],
        len => {
            let mid = len / 2;
            let a = pairwise_reduce(&parts[..mid]);
            let b = pairwise_reduce(&parts[mid..]);
            let mut out = a;
            for (o, v) in out.iter_mut().zip(b) {
                *o = *o + v;
            }
            out
        }
    }
}
