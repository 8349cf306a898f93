//! Scalar abstraction for probability arithmetic.
//!
//! Every probability-carrying structure in the crate (posteriors, trellis
//! recursions, belief-propagation messages, feature tensors) is generic over
//! [`Real`], so the same kernels run in `f64` for oracle-grade accuracy and in
//! `f32` when memory matters.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable for probabilities: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant, panicking only if the type cannot hold it
    /// (never for `f32`/`f64`).
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Normalizes `v` in place to sum to one. Returns the pre-normalization sum;
/// leaves `v` untouched when that sum is not strictly positive.
pub(crate) fn normalize<T: Real>(v: &mut [T]) -> T {
    let s: T = v.iter().copied().sum();
    if s > T::zero() && s.is_finite() {
        let inv = T::one() / s;
        for x in v.iter_mut() {
            *x *= inv;
        }
    }
    s
}

/// Index of the largest entry; ties go to the smaller index.
pub(crate) fn argmax<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
