//! Scalar abstraction for the scoring kernels.
//!
//! The similarity, fuzzy-ratio and metric kernels are written against
//! [`Real`] so they can run in `f32` or `f64`. Pipeline types use the
//! [`Score`](crate::Score) alias.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::Debug;
use std::iter::Sum;

/// Floating point scalar: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + ToPrimitive + Sum + Debug + Send + Sync + 'static {
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::infinity)
    }

    fn hundred() -> Self {
        Self::from_u8(100).expect("100 fits every float type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `num / den` as a fraction, or zero when `den == 0`.
pub fn ratio<S: Real>(num: usize, den: usize) -> S {
    if den == 0 {
        S::zero()
    } else {
        S::from_usize_lossy(num) / S::from_usize_lossy(den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_handles_zero_denominator() {
        assert_eq!(ratio::<f64>(3, 0), 0.0);
        assert_eq!(ratio::<f32>(1, 4), 0.25);
    }
}
