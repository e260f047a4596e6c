//! Scalar abstraction shared by every module.
//!
//! All numerics are written against [`Real`], which is implemented for `f32`
//! and `f64`. Complex amplitudes are `num_complex::Complex<T>` (re-exported by
//! nalgebra). Tolerances in the public API are plain `f64` and are converted
//! once at the boundary.

use nalgebra::{Complex, ComplexField, RealField};
use num_traits::{FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real field used for amplitudes, coefficients and tolerances.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Serialize + DeserializeOwned + Send + Sync
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex amplitude over `T`.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

#[inline]
pub(crate) fn c0<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn c1<T: Real>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

/// Unit-modulus phase of `z`, or 1 when `z` vanishes.
#[inline]
pub(crate) fn phase_of<T: Real>(z: C<T>) -> C<T> {
    let r = z.modulus();
    if r > T::zero() {
        z / cr(r)
    } else {
        c1()
    }
}
