//! Classical response of a Kerr-nonlinear optomechanical microresonator driven
//! by a strong pump and a weak probe.
//!
//! The crate covers four layers, bottom up:
//!
//! * [`params`]: user-facing physical parameters in SI units and the derived
//!   quantities (cavity frequency, decay rate, drive amplitudes, zero-point
//!   motion, Kerr coefficient) every solver consumes.
//! * [`steady_state`]: the pump-only operating point: a real cubic in the
//!   intracavity photon number, branch selection, the Kerr-induced cavity
//!   shift and the opto-mechanically broadened transparency linewidth.
//! * [`response`]: probe sidebands on top of the operating point: first- and
//!   second-order amplitudes from 3x3 complex linear systems, closed-form
//!   cross-checks, probe transmission, second-sideband efficiency,
//!   and group delays from finite-difference phase slopes.
//! * [`oracle`]: an independent fixed-step time-domain integrator with
//!   harmonic demodulation, used to validate the frequency-domain results.
//!
//! All numerics are generic over the scalar type through [`scalar::Real`];
//! `f64` is the working precision and the aliases below pin it for everyday
//! use.

// Validation guards are written `!(x > bound)` rather than `x <= bound`:
// the negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod cubic;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod params;
pub mod response;
pub mod scalar;
pub mod steady_state;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, ErrorClass};
pub use params::{DerivedParams, KerrInput, KerrUnit, PhysicalParams, ProbeInput};
pub use response::{
    group_delays, group_delays_with_step, observables, observables_with, spectrum, GroupDelays,
    Method, SidebandResponse, SpectrumPoint,
};
pub use steady_state::{solve_steady_state, Branch, SteadyState};

/// Complex number at working precision.
pub type C64 = num_complex::Complex<f64>;

/// Input parameters at working precision.
pub type PhysicalParams64 = params::PhysicalParams<f64>;
/// Derived drive/cavity quantities at working precision.
pub type DerivedParams64 = params::DerivedParams<f64>;
/// Pump-only operating point at working precision.
pub type SteadyState64 = steady_state::SteadyState<f64>;
/// Probe response at one probe detuning, working precision.
pub type SidebandResponse64 = response::SidebandResponse<f64>;
/// Group delays at the mechanical frequency, working precision.
pub type GroupDelays64 = response::GroupDelays<f64>;
/// Demodulated time-domain harmonics, working precision.
pub type DemodResult64 = oracle::DemodResult<f64>;
