//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Real floating-point scalar usable throughout the library.
///
/// Implemented for `f32` and `f64`. Validation tolerances quoted in the
/// documentation are `f64` values; for lower-precision scalars they are
/// raised to a precision-dependent floor (see [`floor_tol`]).
pub trait Real: RealField + Copy + ToPrimitive + Display + Debug + Send + Sync {}

impl<T> Real for T where T: RealField + Copy + ToPrimitive + Display + Debug + Send + Sync {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Lossy conversion to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    ToPrimitive::to_f64(&x).unwrap_or(f64::NAN)
}

/// Modulus of a complex number.
#[inline]
pub fn cabs<T: Real>(z: num_complex::Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

/// Smallest positive value treated as nonzero when guarding divisions.
#[inline]
pub fn tiny<T: Real>() -> T {
    lit::<T>(1e-300).max(T::default_epsilon() * lit::<T>(1e-30))
}

/// Returns `max(tol, 1e4 * eps)`.
///
/// For `f64` every tolerance used in the crate is above the floor, so the
/// stated value is used unchanged.
#[inline]
pub fn floor_tol<T: Real>(tol: f64) -> T {
    let floor = T::default_epsilon() * lit::<T>(1e4);
    let t = lit::<T>(tol);
    if t > floor {
        t
    } else {
        floor
    }
}
