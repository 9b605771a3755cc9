//! Physical constants (SI).

use crate::scalar::Real;

/// Reduced Planck constant (J s), CODATA 2018.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Speed of light in vacuum (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `HBAR` in the requested scalar type.
pub fn hbar<T: Real>() -> T {
    T::of(HBAR)
}

/// `SPEED_OF_LIGHT` in the requested scalar type.
pub fn speed_of_light<T: Real>() -> T {
    T::of(SPEED_OF_LIGHT)
}
