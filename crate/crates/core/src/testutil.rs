//! Shared fixtures for the unit tests.

use crate::params::{KerrInput, KerrUnit, PhysicalParams, ProbeInput};

/// The worked operating point used across the test suite: a silica
/// microtoroid pumped at 780 nm, driven at the lower mechanical sideband.
pub(crate) fn toroid() -> PhysicalParams<f64> {
    PhysicalParams {
        wavelength: 780e-9,
        mass: 5e-11,
        radius: 19e-6,
        linear_index: 1.47,
        nonlinear_index: 3.2e-20,
        quality_factor: 1.7e7,
        mech_frequency: 2.0 * std::f64::consts::PI * 83.7e6,
        mech_damping: 2.0 * std::f64::consts::PI * 20e3,
        pump_power: 10e-3,
        probe: ProbeInput::Ratio(0.05),
        detuning: -(2.0 * std::f64::consts::PI * 83.7e6),
        kerr: KerrInput::ModeVolume(1e-16),
    }
}

/// Same point with the linewidth pinned to `kappa = 2*pi*22 MHz` by adjusting
/// the quality factor (the linewidth is the better-known quantity for the
/// reference device, so it wins over the rounded Q).
pub(crate) fn toroid_pinned_kappa() -> PhysicalParams<f64> {
    let mut p = toroid();
    let omega_c = 2.0 * std::f64::consts::PI * crate::constants::SPEED_OF_LIGHT / 780e-9;
    p.quality_factor = omega_c / (2.0 * std::f64::consts::PI * 22e6);
    p
}

/// Pinned-linewidth point with a directly supplied Kerr coefficient.
pub(crate) fn toroid_with_kerr(value: f64, unit: KerrUnit) -> PhysicalParams<f64> {
    let mut p = toroid_pinned_kappa();
    p.kerr = KerrInput::Coefficient { value, unit };
    p
}
