//! Scalar abstraction for the numeric core.
//!
//! Everything in this crate is generic over a real scalar implementing
//! [`Real`]; complex quantities are `num_complex::Complex<T>`. Concrete
//! aliases for the common instantiations live at the crate root.

use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable throughout the crate: `f32`, `f64`, or anything that
/// provides the same field operations through `nalgebra::RealField`.
pub trait Real: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy + Default {}

impl<T> Real for T where T: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy + Default {}

/// Shorthand for the complex type over a given scalar.
pub type C<T> = Complex<T>;

/// Convert an `f64` constant into `T`, panicking only for scalars that
/// cannot represent plain floats (none of the supported ones).
#[inline]
pub fn r<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("scalar conversion from f64")
}

#[inline]
pub fn c<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(r(re), r(im))
}

/// Default coefficient prune threshold: spin-word coefficients smaller than
/// this in magnitude are treated as identically zero. 1e-14 for f64-class
/// scalars, scaled up for coarser ones.
pub fn default_prune<T: Real>() -> T {
    let floor = r::<T>(1e-14);
    let eps_based = T::default_epsilon() * r::<T>(100.0);
    if eps_based > floor {
        eps_based
    } else {
        floor
    }
}
