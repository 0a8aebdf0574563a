//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar: `f32` or `f64`.
///
/// All geometry, path-space, quadrature and determinant code is written
/// against this trait. Acceptance tolerances are stated for `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let s = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - s) + x;
        } else {
            self.carry += (x - s) + self.sum;
        }
        self.sum = s;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(iter: I) -> T {
    iter.into_iter().collect::<CompensatedSum<T>>().value()
}
