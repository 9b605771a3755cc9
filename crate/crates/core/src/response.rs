//! Probe sidebands on top of the pumped operating point.
//!
//! A weak probe at detuning `Omega` from the pump dresses the mean field with
//! harmonics:
//!
//! ```text
//! a(t) = abar + A1m e^{-i Omega t} + A1p e^{+i Omega t}
//!             + A2m e^{-2i Omega t} + A2p e^{+2i Omega t} + ...
//! x(t) = xbar + X1 e^{-i Omega t} + X1* e^{+i Omega t}
//!             + X2 e^{-2i Omega t} + X2* e^{+2i Omega t} + ...
//! ```
//!
//! Keeping the hierarchy strictly triangular (first order driven only by the
//! probe, second order only by first-order products) turns each order into a
//! 3x3 complex linear system in (A1m, conj(A1p), X1) resp. (A2m, conj(A2p),
//! X2). `A1m` sits at the probe frequency itself (the upper first-order
//! sideband), `A2m` at `omega_l + 2 Omega` (the upper second-order sideband).
//!
//! # Scaling of the mechanical row
//!
//! In SI units the mechanical row carries `m omega_m^2 ~ 1e7` next to field
//! rows of order `kappa ~ 1e8`, but its unknown is metres (~1e-15) against
//! sqrt-photons (~1e5), which puts 30+ orders of magnitude between matrix
//! entries. All solves therefore use the dimensionless displacement
//! `X / x_zpf` and divide the mechanical row by `hbar / x_zpf`; every entry
//! then lands near rad/s scale and the condition number reflects genuine
//! physics instead of unit choices.
//!
//! # Where hbar sits
//!
//! The sideband algebra is commonly quoted with hbar absorbed into the field
//! normalization. This crate keeps SI quantities; the table lists each spot
//! the conversion reinstates hbar (`n = |abar|^2`):
//!
//! | term | absorbed-hbar form | SI form used here |
//! |---|---|---|
//! | radiation-pressure drive | `g (abar A1p* + abar* A1m)` | `hbar g (...)` |
//! | beta numerator | `(2 U alpha0 + g^2) n` | `(2 U alpha0 + hbar g^2) n` |
//! | first-order numerator | `alpha0 alpha+ + i g^2 n` | `... + i hbar g^2 n` |
//! | shared denominators | `2 g^2 n (Delta + dw)` | `2 hbar g^2 n (Delta + dw)` |
//! | X1 numerator | `-(alpha+ + i dw) g abar*` | `-(alpha+ + i dw) hbar g abar*` |
//! | X1^2 coefficient | `(2 U lambda0 + g^2) beta g abar*` | `(2 U lambda0 + hbar g^2) beta g abar*` |
//!
//! `dw` is the Kerr shift of the operating point and `Delta` its effective
//! detuning; both come from [`SteadyState`].

use num_complex::Complex;

use crate::error::Error;
use crate::linalg::{solve3x3, Solve3Outcome};
use crate::scalar::Real;
use crate::steady_state::{solve_steady_state, Branch, SteadyState};

/// Solves whose condition estimate exceeds this are rejected as singular.
const CONDITION_LIMIT: f64 = 1e12;

/// Default phase-differentiation step as a fraction of the mechanical
/// frequency; transparency features are wider than the broadened linewidth,
/// which is ~1e-3 omega_m at the operating points of interest.
const DELAY_STEP_FRACTION: f64 = 1e-4;
const DELAY_STEP_FRACTION_MIN: f64 = 1e-7;
const DELAY_STEP_FRACTION_MAX: f64 = 1e-2;

fn c_re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// `i * z` without constructing a unit constant.
fn mul_i<T: Real>(z: Complex<T>) -> Complex<T> {
    Complex::new(-z.im, z.re)
}

/// Which solver produced a [`SidebandResponse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Direct 3x3 linear solves; the reference path.
    #[default]
    Matrix,
    /// Closed-form expressions, kept as a cross-check of the algebra.
    ClosedForm,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Matrix => "matrix-solve",
            Method::ClosedForm => "closed-form",
        }
    }
}

/// The per-detuning coefficients entering both sideband systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseCoefficients<T> {
    /// `kappa + i(Delta - Omega)`, rad/s.
    pub alpha_plus: Complex<T>,
    /// `kappa - i(Delta + Omega)`, rad/s.
    pub alpha_minus: Complex<T>,
    /// `m (omega_m^2 - i gamma_m Omega - Omega^2)`, kg rad^2/s^2.
    pub alpha_zero: Complex<T>,
    /// `kappa + i(Delta - 2 Omega)`, rad/s.
    pub lambda_plus: Complex<T>,
    /// `kappa - i(Delta + 2 Omega)`, rad/s.
    pub lambda_minus: Complex<T>,
    /// `m (omega_m^2 - 2i gamma_m Omega - 4 Omega^2)`, kg rad^2/s^2.
    pub lambda_zero: Complex<T>,
    /// `-(2 U alpha_zero + hbar g^2) n / (i g (alpha_plus + i dw))`, kg m/s.
    pub beta: Complex<T>,
    /// Probe-pump detuning this set was evaluated at, rad/s.
    pub probe_detuning: T,
}

/// The coefficients that do not involve `beta` (every solver needs these;
/// only the closed-form second order needs `beta`).
struct LinearCoeffs<T> {
    alpha_plus: Complex<T>,
    alpha_minus: Complex<T>,
    alpha_zero: Complex<T>,
    lambda_plus: Complex<T>,
    lambda_minus: Complex<T>,
    lambda_zero: Complex<T>,
}

fn linear_coeffs<T: Real>(ss: &SteadyState<T>, omega: T) -> Result<LinearCoeffs<T>, Error> {
    if !(omega > T::zero()) || !omega.is_finite() {
        return Err(Error::InvalidParameter {
            field: "probe_detuning",
            message: format!("must be finite and > 0, got {omega}"),
        });
    }
    let d = &ss.derived;
    let kappa = d.decay_rate;
    let delta = ss.effective_detuning;
    let m = d.mass;
    let wm2 = d.mech_frequency * d.mech_frequency;
    let two = T::of(2.0);
    Ok(LinearCoeffs {
        alpha_plus: Complex::new(kappa, delta - omega),
        alpha_minus: Complex::new(kappa, -(delta + omega)),
        alpha_zero: Complex::new(m * (wm2 - omega * omega), -(m * d.mech_damping * omega)),
        lambda_plus: Complex::new(kappa, delta - two * omega),
        lambda_minus: Complex::new(kappa, -(delta + two * omega)),
        lambda_zero: Complex::new(
            m * (wm2 - T::of(4.0) * omega * omega),
            -(two * m * d.mech_damping * omega),
        ),
    })
}

/// Evaluates every response coefficient, including `beta`.
///
/// `beta` has a pole at `alpha_plus + i*kerr_shift = 0` (unreachable while
/// `kappa > 0`, since that complex number keeps real part `kappa`) and is
/// defined by continuity as 0 when `g = 0` and `U = 0`; with `g = 0` but
/// `U != 0` it has no finite value and the call fails.
pub fn coefficients<T: Real>(
    ss: &SteadyState<T>,
    omega: T,
) -> Result<ResponseCoefficients<T>, Error> {
    let lc = linear_coeffs(ss, omega)?;
    let d = &ss.derived;
    let g = d.om_coupling;
    let n = ss.photon_number;

    let beta = if g == T::zero() {
        if d.kerr == T::zero() {
            Complex::new(T::zero(), T::zero())
        } else {
            return Err(Error::Singular {
                omega: omega.as_f64(),
                condition: f64::INFINITY,
                context: "beta has no finite g -> 0 limit when U != 0",
            });
        }
    } else {
        let pole = lc.alpha_plus + Complex::new(T::zero(), ss.kerr_shift);
        if pole.norm() == T::zero() {
            return Err(Error::Singular {
                omega: omega.as_f64(),
                condition: f64::INFINITY,
                context: "beta pole: alpha_plus + i*kerr_shift vanished",
            });
        }
        let numerator = (lc.alpha_zero * (T::of(2.0) * d.kerr) + c_re(d.hbar_g_sq())) * n;
        -numerator / (mul_i(pole) * g)
    };

    Ok(ResponseCoefficients {
        alpha_plus: lc.alpha_plus,
        alpha_minus: lc.alpha_minus,
        alpha_zero: lc.alpha_zero,
        lambda_plus: lc.lambda_plus,
        lambda_minus: lc.lambda_minus,
        lambda_zero: lc.lambda_zero,
        beta,
        probe_detuning: omega,
    })
}

/// Shared shape of both sideband systems: unknowns `(Akm, conj(Akp), Xk/x_zpf)`.
///
/// `mech_diag` is the scaled mechanical diagonal `alpha0 (or lambda0) * x_zpf^2
/// / hbar`, which the caller passes as `(...)/(2 m omega_m)` with the mass
/// already cancelled.
fn sideband_matrix<T: Real>(
    ss: &SteadyState<T>,
    field_plus: Complex<T>,
    field_minus: Complex<T>,
    mech_diag: Complex<T>,
) -> [[Complex<T>; 3]; 3] {
    let d = &ss.derived;
    let abar = ss.field;
    let g0 = d.vacuum_coupling();
    let two_iu = mul_i(c_re(T::of(2.0) * d.kerr));
    [
        [field_minus, -(two_iu * abar * abar), mul_i(abar * g0)],
        [two_iu * abar.conj() * abar.conj(), field_plus, -mul_i(abar.conj() * g0)],
        [abar.conj() * g0, abar * g0, mech_diag],
    ]
}

fn scaled_mech_diag<T: Real>(lc_zero: Complex<T>, d: &crate::params::DerivedParams<T>) -> Complex<T> {
    // alpha0 * x_zpf^2 / hbar = (omega_m^2 - i gamma Omega - Omega^2)/(2 omega_m);
    // dividing out the mass keeps f32 viable.
    lc_zero / (T::of(2.0) * d.mass * d.mech_frequency)
}

fn solve_sideband<T: Real>(
    matrix: &[[Complex<T>; 3]; 3],
    rhs: &[Complex<T>; 3],
    omega: T,
    context: &'static str,
) -> Result<[Complex<T>; 3], Error> {
    match solve3x3(matrix, rhs) {
        Solve3Outcome::Solved { x, condition } => {
            if condition > T::of(CONDITION_LIMIT) {
                Err(Error::Singular {
                    omega: omega.as_f64(),
                    condition: condition.as_f64(),
                    context,
                })
            } else {
                Ok(x)
            }
        }
        Solve3Outcome::Singular { .. } => Err(Error::Singular {
            omega: omega.as_f64(),
            condition: f64::INFINITY,
            context,
        }),
    }
}

/// One sideband order: the `e^{-ik Omega t}` field amplitude, the
/// `e^{+ik Omega t}` field amplitude, and the mechanical harmonic in metres.
pub type SidebandTriple<T> = (Complex<T>, Complex<T>, Complex<T>);

fn first_order_with_drive<T: Real>(
    ss: &SteadyState<T>,
    lc: &LinearCoeffs<T>,
    omega: T,
    eps_p: T,
) -> Result<SidebandTriple<T>, Error> {
    let d = &ss.derived;
    let matrix = sideband_matrix(
        ss,
        lc.alpha_plus,
        lc.alpha_minus,
        scaled_mech_diag(lc.alpha_zero, d),
    );
    let rhs = [c_re(eps_p), c_re(T::zero()), c_re(T::zero())];
    let x = solve_sideband(&matrix, &rhs, omega, "first-order sideband system")?;
    // Unknowns came back as (A1m, conj(A1p), X1/x_zpf).
    Ok((x[0], x[1].conj(), x[2] * d.x_zpf))
}

/// First-order sideband amplitudes `(A1m, A1p, X1)` at probe detuning
/// `omega`; `X1` in metres.
pub fn first_order<T: Real>(
    ss: &SteadyState<T>,
    omega: T,
) -> Result<SidebandTriple<T>, Error> {
    let lc = linear_coeffs(ss, omega)?;
    first_order_with_drive(ss, &lc, omega, ss.derived.probe_amplitude)
}

/// Second-order sideband amplitudes `(A2m, A2p, X2)` sourced by the
/// first-order amplitudes (same `omega`); `X2` in metres.
pub fn second_order<T: Real>(
    ss: &SteadyState<T>,
    first: SidebandTriple<T>,
    omega: T,
) -> Result<SidebandTriple<T>, Error> {
    let lc = linear_coeffs(ss, omega)?;
    second_order_inner(ss, &lc, first, omega)
}

fn second_order_inner<T: Real>(
    ss: &SteadyState<T>,
    lc: &LinearCoeffs<T>,
    (a1m, a1p, x1): SidebandTriple<T>,
    omega: T,
) -> Result<SidebandTriple<T>, Error> {
    let d = &ss.derived;
    let g0 = d.vacuum_coupling();
    let x1_scaled = x1 / d.x_zpf;
    let a1p_conj = a1p.conj();
    let abar = ss.field;
    let matrix = sideband_matrix(
        ss,
        lc.lambda_plus,
        lc.lambda_minus,
        scaled_mech_diag(lc.lambda_zero, d),
    );
    // Sources are the first-order beat notes: the radiation-pressure mixing
    // products and the Kerr self-mixing products a*(A1-)^2 and 2a A1- A1+*,
    // which the |a|^2 a term generates at twice the beat frequency. Dropping
    // the Kerr pair leaves the solve inconsistent with the integrated
    // equations of motion as soon as U > 0. In the scaled mechanical row the
    // hbar g from the radiation pressure force reduces to g0.
    let two_iu = mul_i(c_re(T::of(2.0) * d.kerr));
    let kerr_minus = two_iu * (abar.conj() * a1m * a1m + abar * a1m * a1p_conj * T::of(2.0));
    let kerr_plus_conj =
        -two_iu * (abar * a1p_conj * a1p_conj + abar.conj() * a1p_conj * a1m * T::of(2.0));
    let rhs = [
        -mul_i(a1m * x1_scaled * g0) + kerr_minus,
        mul_i(a1p_conj * x1_scaled * g0) + kerr_plus_conj,
        -(a1m * a1p_conj * g0),
    ];
    let x = solve_sideband(&matrix, &rhs, omega, "second-order sideband system")?;
    Ok((x[0], x[1].conj(), x[2] * d.x_zpf))
}

fn closed_form_first_with_drive<T: Real>(
    ss: &SteadyState<T>,
    lc: &LinearCoeffs<T>,
    omega: T,
    eps_p: T,
) -> Result<(Complex<T>, Complex<T>), Error> {
    let d = &ss.derived;
    let g_sq_n = d.hbar_g_sq() * ss.photon_number;
    let dw = ss.kerr_shift;
    let delta = ss.effective_detuning;

    let denom = lc.alpha_zero * lc.alpha_plus * lc.alpha_minus
        - lc.alpha_zero * (dw * dw)
        + c_re(T::of(2.0) * g_sq_n * (delta + dw));
    if denom.norm() == T::zero() {
        return Err(Error::Singular {
            omega: omega.as_f64(),
            condition: f64::INFINITY,
            context: "closed-form first-order denominator vanished",
        });
    }
    let a1m = (lc.alpha_zero * lc.alpha_plus + mul_i(c_re(g_sq_n))) * eps_p / denom;
    let x1 = -(lc.alpha_plus + Complex::new(T::zero(), dw))
        * (d.hbar * d.om_coupling)
        * ss.field.conj()
        * eps_p
        / denom;
    Ok((a1m, x1))
}

/// Closed-form first-order amplitudes `(A1m, X1)`.
///
/// Equivalent to the matrix solve (the expressions are its exact solution);
/// kept as an independent implementation to cross-check the linear algebra.
pub fn closed_form_first<T: Real>(
    ss: &SteadyState<T>,
    omega: T,
) -> Result<(Complex<T>, Complex<T>), Error> {
    let lc = linear_coeffs(ss, omega)?;
    closed_form_first_with_drive(ss, &lc, omega, ss.derived.probe_amplitude)
}

/// Closed-form second-order amplitude and its deviation from the matrix path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormSecond<T> {
    /// `A2m` as given by the closed-form coefficient groups.
    pub a2_minus: Complex<T>,
    /// `|closed - matrix| / |matrix|` against [`second_order`] at the same
    /// point (infinite if only the matrix result vanishes).
    pub delta_vs_matrix: T,
}

/// Evaluates the closed-form second-order upper-sideband amplitude and
/// reports how far it lands from the matrix solve.
///
/// The first coefficient group reads
/// `[g (lambda_plus + i dw) beta - (lambda0 lambda_minus + i hbar g^2 n)] / D2`
/// times `A1m X1`, the second `-(2 U lambda0 + hbar g^2) beta g abar* / D2`
/// times `X1^2`, with `D2 = lambda0 lambda_plus lambda_minus - dw^2 lambda0 +
/// 2 hbar g^2 n (Delta + dw)`. These groups are not the solution of the
/// second-order linear system (they are not even dimensionally amplitudes),
/// so `delta_vs_matrix` is large at generic points; it is recorded rather
/// than hidden.
pub fn closed_form_second<T: Real>(
    ss: &SteadyState<T>,
    first: SidebandTriple<T>,
    omega: T,
) -> Result<ClosedFormSecond<T>, Error> {
    let lc = linear_coeffs(ss, omega)?;
    let co = coefficients(ss, omega)?;
    let d = &ss.derived;
    let g = d.om_coupling;
    let g_sq = d.hbar_g_sq();
    let g_sq_n = g_sq * ss.photon_number;
    let dw = ss.kerr_shift;
    let delta = ss.effective_detuning;
    let (a1m, _, x1) = first;

    let denom = lc.lambda_zero * lc.lambda_plus * lc.lambda_minus
        - lc.lambda_zero * (dw * dw)
        + c_re(T::of(2.0) * g_sq_n * (delta + dw));
    if denom.norm() == T::zero() {
        return Err(Error::Singular {
            omega: omega.as_f64(),
            condition: f64::INFINITY,
            context: "closed-form second-order denominator vanished",
        });
    }

    let group1 = (lc.lambda_plus + Complex::new(T::zero(), dw)) * g * co.beta
        - (lc.lambda_zero * lc.lambda_minus + mul_i(c_re(g_sq_n)));
    let group2 = -(lc.lambda_zero * (T::of(2.0) * d.kerr) + c_re(g_sq))
        * co.beta
        * g
        * ss.field.conj();
    let a2_closed = (group1 * (a1m * x1) + group2 * (x1 * x1)) / denom;

    let (a2_matrix, _, _) = second_order_inner(ss, &lc, first, omega)?;
    let delta_vs_matrix = if a2_matrix.norm() == T::zero() {
        if a2_closed.norm() == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        (a2_closed - a2_matrix).norm() / a2_matrix.norm()
    };

    Ok(ClosedFormSecond { a2_minus: a2_closed, delta_vs_matrix })
}

/// Full single-detuning response: amplitudes, probe transmission, and
/// second-sideband efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandResponse<T> {
    /// Probe-pump detuning `Omega`, rad/s.
    pub probe_detuning: T,
    /// Coefficient of `e^{-i Omega t}`: the upper first-order sideband at the
    /// probe frequency itself.
    pub a1_minus: Complex<T>,
    /// Coefficient of `e^{+i Omega t}`: the lower (Stokes) first-order
    /// sideband.
    pub a1_plus: Complex<T>,
    /// First mechanical harmonic, m.
    pub x1: Complex<T>,
    /// Coefficient of `e^{-2i Omega t}`: the upper second-order sideband.
    pub a2_minus: Complex<T>,
    /// Coefficient of `e^{+2i Omega t}`.
    pub a2_plus: Complex<T>,
    /// Second mechanical harmonic, m.
    pub x2: Complex<T>,
    /// Probe transmission `t_p = 1 - kappa A1m / eps_p` (probe-amplitude
    /// independent; defined by the unit-probe solve when `eps_p = 0`).
    pub transmission: Complex<T>,
    /// `s2 = -kappa A2m / eps_p`; its modulus is the sideband efficiency.
    pub second_sideband: Complex<T>,
    /// `|t_p|^2`.
    pub tp_abs2: T,
    /// `eta = |s2|`.
    pub eta: T,
    pub method: Method,
    /// Operating-point context carried for output assembly: decay rate,
    /// drive amplitudes, and mean field.
    pub decay_rate: T,
    pub pump_amplitude: T,
    pub probe_amplitude: T,
    pub mean_field: Complex<T>,
}

impl<T: Real> SidebandResponse<T> {
    /// Output component at the pump frequency, `eps_l/sqrt(kappa) -
    /// sqrt(kappa) abar`.
    pub fn output_pump(&self) -> Complex<T> {
        let sk = self.decay_rate.sqrt();
        c_re(self.pump_amplitude / sk) - self.mean_field * sk
    }

    /// Output component at the probe frequency, `eps_p/sqrt(kappa) -
    /// sqrt(kappa) A1m`.
    pub fn output_probe(&self) -> Complex<T> {
        let sk = self.decay_rate.sqrt();
        c_re(self.probe_amplitude / sk) - self.a1_minus * sk
    }
}

/// Computes the response with the default matrix method.
pub fn observables<T: Real>(
    ss: &SteadyState<T>,
    omega: T,
) -> Result<SidebandResponse<T>, Error> {
    observables_with(ss, omega, Method::Matrix)
}

/// Computes the response with an explicit method choice.
///
/// With `Method::ClosedForm`, `a1_minus`, `x1` and `a2_minus` come from the
/// closed-form expressions, `a1_plus` from the identity `abar conj(A1p) =
/// (beta/hbar) X1`, and the remaining second-order amplitudes (`a2_plus`,
/// `x2`) from the linear solve, which the closed forms do not cover.
///
/// A zero probe amplitude yields zero sideband amplitudes; `transmission` is
/// still reported from a unit-probe solve since `t_p` is independent of the
/// probe strength, and `s2` (linear in `eps_p`) is zero.
pub fn observables_with<T: Real>(
    ss: &SteadyState<T>,
    omega: T,
    method: Method,
) -> Result<SidebandResponse<T>, Error> {
    let lc = linear_coeffs(ss, omega)?;
    let d = &ss.derived;
    let eps_p = d.probe_amplitude;
    let kappa = d.decay_rate;
    let unit_probe = eps_p == T::zero();
    let drive = if unit_probe { T::one() } else { eps_p };

    let (a1m, a1p, x1) = match method {
        Method::Matrix => first_order_with_drive(ss, &lc, omega, drive)?,
        Method::ClosedForm => {
            let (a1m, x1) = closed_form_first_with_drive(ss, &lc, omega, drive)?;
            let co = coefficients(ss, omega)?;
            let a1p = if ss.field.norm() == T::zero() {
                Complex::new(T::zero(), T::zero())
            } else {
                ((co.beta / d.hbar) * x1 / ss.field).conj()
            };
            (a1m, a1p, x1)
        }
    };

    let (a2m, a2p, x2) = {
        let matrix = second_order_inner(ss, &lc, (a1m, a1p, x1), omega)?;
        match method {
            Method::Matrix => matrix,
            Method::ClosedForm => {
                let cf = closed_form_second(ss, (a1m, a1p, x1), omega)?;
                (cf.a2_minus, matrix.1, matrix.2)
            }
        }
    };

    let transmission = c_re(T::one()) - a1m * (kappa / drive);
    let second_sideband = if unit_probe {
        Complex::new(T::zero(), T::zero())
    } else {
        -a2m * (kappa / eps_p)
    };

    let (a1m, a1p, x1, a2m, a2p, x2) = if unit_probe {
        let zero = Complex::new(T::zero(), T::zero());
        (zero, zero, zero, zero, zero, zero)
    } else {
        (a1m, a1p, x1, a2m, a2p, x2)
    };

    Ok(SidebandResponse {
        probe_detuning: omega,
        a1_minus: a1m,
        a1_plus: a1p,
        x1,
        a2_minus: a2m,
        a2_plus: a2p,
        x2,
        transmission,
        second_sideband,
        tp_abs2: transmission.norm_sqr(),
        eta: second_sideband.norm(),
        method,
        decay_rate: kappa,
        pump_amplitude: d.pump_amplitude,
        probe_amplitude: eps_p,
        mean_field: ss.field,
    })
}

/// Group delays of probe and second sideband at `Omega = omega_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupDelays<T> {
    /// Probe delay `d arg(t_p)/d Omega`, s.
    pub tau1: T,
    /// Second-sideband delay `(1/2) d arg(s2)/d Omega`, s.
    pub tau2: T,
    /// Detuning the derivative was evaluated at (the mechanical frequency).
    pub probe_detuning: T,
    /// Full step of the coarse central-difference stencil actually used,
    /// rad/s (requested values are clamped into the supported range).
    pub step: T,
    /// `|tau1(h) - tau1(h/2)|`: the Richardson disagreement of the two
    /// stencils; the reported tau1 comes from the h/2 stencil.
    pub richardson_tau1: T,
    /// Same for tau2.
    pub richardson_tau2: T,
}

/// Phases of `t_p` and `s2` at one detuning.
fn phases<T: Real>(ss: &SteadyState<T>, omega: T) -> Result<(T, T), Error> {
    let r = observables(ss, omega)?;
    Ok((r.transmission.arg(), second_sideband_phase(ss, omega)?))
}

/// `arg(s2)` is probe-independent; compute it from the unit-probe second
/// order amplitude so delays exist even at `eps_p = 0`.
fn second_sideband_phase<T: Real>(ss: &SteadyState<T>, omega: T) -> Result<T, Error> {
    let lc = linear_coeffs(ss, omega)?;
    let first = first_order_with_drive(ss, &lc, omega, T::one())?;
    let (a2m, _, _) = second_order_inner(ss, &lc, first, omega)?;
    Ok((-a2m).arg())
}

/// Shifts `phi` by multiples of 2 pi until it lies within pi of `anchor`.
fn unwrap_toward<T: Real>(phi: T, anchor: T) -> T {
    let two_pi = T::of(2.0) * T::PI();
    let mut out = phi;
    while out - anchor > T::PI() {
        out -= two_pi;
    }
    while anchor - out > T::PI() {
        out += two_pi;
    }
    out
}

/// Group delays with the default differentiation step.
pub fn group_delays<T: Real>(ss: &SteadyState<T>) -> Result<GroupDelays<T>, Error> {
    group_delays_with_step(ss, ss.derived.mech_frequency * T::of(DELAY_STEP_FRACTION))
}

/// Group delays with an explicit step `h` (clamped to the supported range).
/// Central differences at `h` and `h/2`; the `h/2` value is reported and the
/// difference between the two is recorded as the Richardson disagreement.
pub fn group_delays_with_step<T: Real>(
    ss: &SteadyState<T>,
    step: T,
) -> Result<GroupDelays<T>, Error> {
    let wm = ss.derived.mech_frequency;
    let h = step
        .max(wm * T::of(DELAY_STEP_FRACTION_MIN))
        .min(wm * T::of(DELAY_STEP_FRACTION_MAX));

    let (t_c, s_c) = phases(ss, wm)?;
    let mut tp = [T::zero(); 4];
    let mut s2 = [T::zero(); 4];
    let offsets = [-h, -h * T::of(0.5), h * T::of(0.5), h];
    for (i, off) in offsets.into_iter().enumerate() {
        let (t, s) = phases(ss, wm + off)?;
        tp[i] = unwrap_toward(t, t_c);
        s2[i] = unwrap_toward(s, s_c);
        let jump = (tp[i] - t_c).abs().max((s2[i] - s_c).abs());
        if jump > T::PI() * T::of(0.5) {
            return Err(Error::StepSize { step: h.as_f64(), jump: jump.as_f64() });
        }
    }

    let tau1_h = (tp[3] - tp[0]) / (T::of(2.0) * h);
    let tau1_h2 = (tp[2] - tp[1]) / h;
    let half = T::of(0.5);
    let tau2_h = half * (s2[3] - s2[0]) / (T::of(2.0) * h);
    let tau2_h2 = half * (s2[2] - s2[1]) / h;

    Ok(GroupDelays {
        tau1: tau1_h2,
        tau2: tau2_h2,
        probe_detuning: wm,
        step: h,
        richardson_tau1: (tau1_h - tau1_h2).abs(),
        richardson_tau2: (tau2_h - tau2_h2).abs(),
    })
}

/// One spectrum row; failures stay in-row so a sweep never aborts wholesale.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPoint<T> {
    pub probe_detuning: T,
    pub response: Result<SidebandResponse<T>, Error>,
}

/// Sweeps the response over a probe-detuning grid. The operating point is
/// solved once; the grid must be nondecreasing and inside `(0, 2 omega_m]`.
pub fn spectrum<T: Real>(
    derived: &crate::params::DerivedParams<T>,
    branch: Branch,
    grid: &[T],
    method: Method,
) -> Result<Vec<SpectrumPoint<T>>, Error> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            field: "probe_grid",
            message: "grid must be nonempty".into(),
        });
    }
    let limit = T::of(2.0) * derived.mech_frequency;
    for pair in grid.windows(2) {
        if !(pair[0] <= pair[1]) {
            return Err(Error::InvalidParameter {
                field: "probe_grid",
                message: format!("grid must be ascending, found {} after {}", pair[1], pair[0]),
            });
        }
    }
    for &w in grid {
        if !(w > T::zero()) || w > limit {
            return Err(Error::InvalidParameter {
                field: "probe_grid",
                message: format!(
                    "grid values must lie in (0, {:.6e}] rad/s (twice the mechanical frequency), got {:.6e}",
                    limit.as_f64(),
                    w.as_f64()
                ),
            });
        }
    }
    let ss = solve_steady_state(derived, branch)?;
    Ok(grid
        .iter()
        .map(|&omega| SpectrumPoint {
            probe_detuning: omega,
            response: observables_with(&ss, omega, method),
        })
        .collect())
}
