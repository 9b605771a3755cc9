//! Brute-force time-domain ground truth.
//!
//! Integrates the full nonlinear equations of motion in the pump rotating
//! frame,
//!
//! ```text
//! da/dt = a [ -kappa + i (Delta_c - g x + 2 U |a|^2) ] + eps_l + eps_p e^{-i Omega t}
//! dx/dt = p / m
//! dp/dt = -m omega_m^2 x - gamma_m p - hbar g |a|^2
//! ```
//!
//! with a classical fixed-step 4th-order Runge-Kutta scheme, then extracts
//! the harmonic content at multiples of the pump-probe beat `Omega` by
//! trapezoidal projection. Nothing here shares algebra with the perturbative
//! response module, which is the point: agreement between the two is the
//! strongest correctness evidence this crate produces.
//!
//! Two step-size choices make the demodulation exact rather than merely
//! approximate:
//!
//! * the step is `2 pi / Omega / N` for an integer `N`, so every beat period
//!   contains exactly `N` steps and demod windows align with the drive;
//! * drive and demod phase factors are read from precomputed length-`N`
//!   tables indexed by `step mod N`, so the phase never drifts no matter how
//!   long the integration runs.

use num_complex::Complex;

use crate::error::Error;
use crate::scalar::Real;
use crate::steady_state::SteadyState;

/// Retained field harmonics `k` in `a(t) = sum_k a_k e^{-i k Omega t}`.
pub const FIELD_HARMONICS: [i32; 5] = [-2, -1, 0, 1, 2];

/// Where the integration starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialCondition {
    /// Launch from the analytic operating point `(abar, xbar, 0)`; cuts the
    /// burn-in to transients the probe itself excites.
    #[default]
    AnalyticSteadyState,
    /// Launch from `(0, 0, 0)`; slower, but exposes basin/branch
    /// disagreements with the analytic selection.
    Zero,
}

/// Integration and demodulation controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig<T> {
    /// Substeps of the fastest timescale among `2pi/Omega`, `2pi/omega_m`,
    /// `1/kappa`. At least 100.
    pub steps_per_period: u32,
    /// Transient-settling time before demodulation starts, rounded up to
    /// whole beat periods. `None` integrates five damping times `5/Gamma`
    /// with the broadened linewidth of the operating point.
    pub burn_in_seconds: Option<T>,
    /// Demodulation window length in beat periods, at least 1.
    pub window_periods: u32,
    /// Successive windows must agree to this relative level, in (0, 1e-2].
    pub tolerance: T,
    /// Give up after this many windows (at least 2; the metric needs a pair).
    pub max_windows: u32,
    pub initial: InitialCondition,
}

impl<T: Real> Default for OracleConfig<T> {
    fn default() -> Self {
        OracleConfig {
            steps_per_period: 400,
            burn_in_seconds: None,
            window_periods: 50,
            tolerance: T::of(1e-3),
            max_windows: 40,
            initial: InitialCondition::AnalyticSteadyState,
        }
    }
}

impl<T: Real> OracleConfig<T> {
    pub fn validate(&self) -> Result<(), Error> {
        if self.steps_per_period < 100 {
            return Err(Error::InvalidParameter {
                field: "steps_per_period",
                message: format!("must be >= 100, got {}", self.steps_per_period),
            });
        }
        if self.window_periods < 1 {
            return Err(Error::InvalidParameter {
                field: "window_periods",
                message: "must be >= 1".into(),
            });
        }
        if !(self.tolerance > T::zero() && self.tolerance <= T::of(1e-2)) {
            return Err(Error::InvalidParameter {
                field: "tolerance",
                message: format!("must lie in (0, 1e-2], got {}", self.tolerance),
            });
        }
        if self.max_windows < 2 {
            return Err(Error::InvalidParameter {
                field: "max_windows",
                message: "must be >= 2 so successive windows can be compared".into(),
            });
        }
        if let Some(b) = self.burn_in_seconds {
            if !(b >= T::zero()) || !b.is_finite() {
                return Err(Error::InvalidParameter {
                    field: "burn_in_seconds",
                    message: format!("must be finite and >= 0, got {b}"),
                });
            }
        }
        Ok(())
    }
}

/// Demodulated harmonic content of a converged run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemodResult<T> {
    /// Beat frequency the harmonics refer to, rad/s.
    pub probe_detuning: T,
    /// `a_k` for `k = -2..=2`, stored at index `k + 2`, sqrt(photons).
    pub field_harmonics: [Complex<T>; 5],
    /// `x_k` for `k = 0..=2`, m. Negative-k values are the conjugates
    /// (`x(t)` is real) and are not stored.
    pub mech_harmonics: [Complex<T>; 3],
    /// Fraction of the window-averaged `|a|^2` outside the retained
    /// harmonics; measures how honest the five-term ansatz is.
    pub residual_fraction: T,
    /// Final successive-window agreement metric.
    pub convergence_metric: T,
    /// Demodulation windows integrated before convergence.
    pub windows_used: u32,
    /// Integration step actually used, s.
    pub step: T,
}

impl<T: Real> DemodResult<T> {
    /// Field harmonic `a_k`, `k` in `[-2, 2]`.
    pub fn field(&self, k: i32) -> Complex<T> {
        assert!((-2..=2).contains(&k), "field harmonic {k} out of range");
        self.field_harmonics[(k + 2) as usize]
    }

    /// Mechanical harmonic `x_k`, `k` in `[0, 2]`.
    pub fn mech(&self, k: u32) -> Complex<T> {
        assert!(k <= 2, "mechanical harmonic {k} out of range");
        self.mech_harmonics[k as usize]
    }
}

#[derive(Clone, Copy)]
struct State<T> {
    a: Complex<T>,
    x: T,
    p: T,
}

impl<T: Real> State<T> {
    fn axpy(&self, scale: T, rhs: &State<T>) -> State<T> {
        State {
            a: self.a + rhs.a * scale,
            x: self.x + rhs.x * scale,
            p: self.p + rhs.p * scale,
        }
    }

    fn is_finite(&self) -> bool {
        self.a.re.is_finite() && self.a.im.is_finite() && self.x.is_finite() && self.p.is_finite()
    }
}

struct Stepper<'a, T> {
    derived: &'a crate::params::DerivedParams<T>,
    dt: T,
    /// `e^{-i Omega t}` at step boundaries within one beat (length N).
    drive_full: Vec<Complex<T>>,
    /// Same at half-step offsets.
    drive_half: Vec<Complex<T>>,
    /// `e^{+i k Omega t}` per retained harmonic (index `k+2`), length N each.
    demod: [Vec<Complex<T>>; 5],
    steps_per_beat: usize,
}

impl<'a, T: Real> Stepper<'a, T> {
    fn new(derived: &'a crate::params::DerivedParams<T>, omega: T, steps_per_period: u32) -> Self {
        let two_pi = T::of(2.0) * T::PI();
        let beat = two_pi / omega;
        let fastest = beat
            .min(two_pi / derived.mech_frequency)
            .min(T::one() / derived.decay_rate);
        let raw_dt = fastest / T::of(steps_per_period as f64);
        let n = (beat / raw_dt).ceil().as_f64() as usize;
        let dt = beat / T::of(n as f64);

        let phase = |num: f64| {
            let theta = T::of(2.0) * T::PI() * T::of(num) / T::of(n as f64);
            Complex::new(theta.cos(), theta.sin())
        };
        let drive_full = (0..n).map(|m| phase(m as f64).conj()).collect();
        let drive_half = (0..n).map(|m| phase(m as f64 + 0.5).conj()).collect();
        let demod = std::array::from_fn(|idx| {
            let k = idx as f64 - 2.0;
            (0..n).map(|m| phase(k * m as f64)).collect()
        });

        Stepper { derived, dt, drive_full, drive_half, demod, steps_per_beat: n }
    }

    fn deriv(&self, s: &State<T>, probe_phase: Complex<T>) -> State<T> {
        let d = self.derived;
        let n = s.a.norm_sqr();
        let detune = d.detuning - d.om_coupling * s.x + T::of(2.0) * d.kerr * n;
        let drive = probe_phase * d.probe_amplitude + Complex::new(d.pump_amplitude, T::zero());
        State {
            a: s.a * Complex::new(-d.decay_rate, detune) + drive,
            x: s.p / d.mass,
            p: -d.mech_spring() * s.x - d.mech_damping * s.p - d.hbar * d.om_coupling * n,
        }
    }

    /// One RK4 step from phase index `m` (position within the current beat).
    fn step(&self, s: &State<T>, m: usize) -> State<T> {
        let dt = self.dt;
        let half = dt * T::of(0.5);
        let k1 = self.deriv(s, self.drive_full[m]);
        let k2 = self.deriv(&s.axpy(half, &k1), self.drive_half[m]);
        let k3 = self.deriv(&s.axpy(half, &k2), self.drive_half[m]);
        let k4 = self.deriv(
            &s.axpy(dt, &k3),
            self.drive_full[(m + 1) % self.steps_per_beat],
        );
        let sixth = dt / T::of(6.0);
        let two = T::of(2.0);
        State {
            a: s.a + (k1.a + k2.a * two + k3.a * two + k4.a) * sixth,
            x: s.x + (k1.x + k2.x * two + k3.x * two + k4.x) * sixth,
            p: s.p + (k1.p + k2.p * two + k3.p * two + k4.p) * sixth,
        }
    }
}

#[derive(Clone, Copy)]
struct WindowAccum<T> {
    field: [Complex<T>; 5],
    mech: [Complex<T>; 3],
    power: T,
    samples: T,
}

impl<T: Real> WindowAccum<T> {
    fn new() -> Self {
        WindowAccum {
            field: [Complex::new(T::zero(), T::zero()); 5],
            mech: [Complex::new(T::zero(), T::zero()); 3],
            power: T::zero(),
            samples: T::zero(),
        }
    }

    fn add(&mut self, stepper: &Stepper<T>, s: &State<T>, m: usize, weight: T) {
        for (idx, acc) in self.field.iter_mut().enumerate() {
            *acc += s.a * stepper.demod[idx][m] * weight;
        }
        for (k, acc) in self.mech.iter_mut().enumerate() {
            // e^{+i k Omega t} for k = 0..2 sits at demod indices 2..4.
            *acc += stepper.demod[k + 2][m] * (s.x * weight);
        }
        self.power += s.a.norm_sqr() * weight;
        self.samples += weight;
    }

    fn finish(&self) -> ([Complex<T>; 5], [Complex<T>; 3], T) {
        let field = self.field.map(|z| z / self.samples);
        let mech = self.mech.map(|z| z / self.samples);
        let mean_power = self.power / self.samples;
        let retained: T = field
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr());
        let residual = if mean_power > T::zero() {
            (T::one() - retained / mean_power).max(T::zero())
        } else {
            T::zero()
        };
        (field, mech, residual)
    }
}

/// Largest relative change between two harmonic sets, with a small floor
/// tied to the set's own scale so near-zero harmonics do not dominate.
fn window_change<T: Real>(prev: &[Complex<T>], cur: &[Complex<T>]) -> T {
    let scale = cur
        .iter()
        .fold(T::zero(), |acc, z| acc.max(z.norm()));
    let floor = scale * T::of(1e-6);
    let mut worst = T::zero();
    for (p, c) in prev.iter().zip(cur) {
        let diff = (*c - *p).norm();
        if diff == T::zero() {
            continue;
        }
        let denom = c.norm() + floor;
        let rel = if denom > T::zero() { diff / denom } else { T::infinity() };
        worst = worst.max(rel);
    }
    worst
}

/// Integrates and demodulates; see [`integrate_traced`] for the trajectory
/// hook. The steady state supplies the launch point, the damping time for
/// the default burn-in, and the parameter snapshot.
pub fn integrate<T: Real>(
    ss: &SteadyState<T>,
    omega: T,
    config: &OracleConfig<T>,
) -> Result<DemodResult<T>, Error> {
    integrate_impl(ss, omega, config, None)
}

/// Step observer for [`integrate_traced`]: called with `(t, a, x, p)` at
/// every accepted step.
pub type TraceSink<'a, T> = &'a mut dyn FnMut(T, Complex<T>, T, T);

/// Like [`integrate`], additionally reporting every accepted step
/// `(t, a, x, p)` to `sink`, starting with the initial state at `t = 0`.
pub fn integrate_traced<T: Real>(
    ss: &SteadyState<T>,
    omega: T,
    config: &OracleConfig<T>,
    sink: TraceSink<'_, T>,
) -> Result<DemodResult<T>, Error> {
    integrate_impl(ss, omega, config, Some(sink))
}

fn integrate_impl<T: Real>(
    ss: &SteadyState<T>,
    omega: T,
    config: &OracleConfig<T>,
    mut sink: Option<TraceSink<'_, T>>,
) -> Result<DemodResult<T>, Error> {
    config.validate()?;
    if !(omega > T::zero()) || !omega.is_finite() {
        return Err(Error::InvalidParameter {
            field: "probe_detuning",
            message: format!("must be finite and > 0, got {omega}"),
        });
    }

    let d = &ss.derived;
    let stepper = Stepper::new(d, omega, config.steps_per_period);
    let n_beat = stepper.steps_per_beat;
    let dt = stepper.dt;
    let beat = dt * T::of(n_beat as f64);

    let mut state = match config.initial {
        InitialCondition::AnalyticSteadyState => State {
            a: ss.field,
            x: ss.displacement,
            p: T::zero(),
        },
        InitialCondition::Zero => State {
            a: Complex::new(T::zero(), T::zero()),
            x: T::zero(),
            p: T::zero(),
        },
    };

    let burn = config
        .burn_in_seconds
        .unwrap_or_else(|| T::of(5.0) / ss.omit_linewidth);
    let burn_beats = (burn / beat).ceil().as_f64().max(0.0) as u64;

    let mut step_count: u64 = 0;
    let emit = |step_count: u64, s: &State<T>, sink: &mut Option<TraceSink<'_, T>>| {
        if let Some(f) = sink {
            f(T::of(step_count as f64) * dt, s.a, s.x, s.p);
        }
    };
    emit(step_count, &state, &mut sink);

    // Burn-in: step whole beats, checking for blowup once per beat.
    for _ in 0..burn_beats {
        for m in 0..n_beat {
            state = stepper.step(&state, m);
            step_count += 1;
            emit(step_count, &state, &mut sink);
        }
        if !state.is_finite() {
            return Err(Error::Unstable { time: (step_count as f64) * dt.as_f64() });
        }
    }

    // Demodulation windows until two in a row agree.
    type Harmonics<T> = ([Complex<T>; 5], [Complex<T>; 3]);
    let window_steps = n_beat * config.window_periods as usize;
    let mut prev: Option<Harmonics<T>> = None;
    let mut last_metric = T::infinity();
    for window in 1..=config.max_windows {
        let mut acc = WindowAccum::new();
        acc.add(&stepper, &state, 0, T::of(0.5));
        for j in 0..window_steps {
            let m = j % n_beat;
            state = stepper.step(&state, m);
            step_count += 1;
            emit(step_count, &state, &mut sink);
            let weight = if j + 1 == window_steps { T::of(0.5) } else { T::one() };
            acc.add(&stepper, &state, (j + 1) % n_beat, weight);
        }
        if !state.is_finite() {
            return Err(Error::Unstable { time: (step_count as f64) * dt.as_f64() });
        }
        let (field, mech, residual) = acc.finish();
        if let Some((pf, pm)) = prev {
            let metric = window_change(&pf, &field).max(window_change(&pm, &mech));
            last_metric = metric;
            if metric <= config.tolerance {
                return Ok(DemodResult {
                    probe_detuning: omega,
                    field_harmonics: field,
                    mech_harmonics: mech,
                    residual_fraction: residual,
                    convergence_metric: metric,
                    windows_used: window,
                    step: dt,
                });
            }
        }
        prev = Some((field, mech));
    }

    Err(Error::NoConvergence {
        windows: config.max_windows,
        metric: last_metric.as_f64(),
        tolerance: config.tolerance.as_f64(),
    })
}

/// Pass/fail thresholds for [`compare`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Relative budget for first-order quantities (`|t_p|^2`), default 1%.
    pub first_order: T,
    /// Relative budget for second-order quantities (`eta`), default 10%.
    pub second_order: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances { first_order: T::of(1e-2), second_order: T::of(1e-1) }
    }
}

/// Per-harmonic deviations between the perturbative response and the
/// demodulated trajectory, all relative to the oracle values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport<T> {
    pub probe_detuning: T,
    /// Branch metadata: near bistability the two sides may legitimately
    /// settle on different branches, so reports carry the context instead of
    /// asserting equality there.
    pub branch: &'static str,
    pub branch_index: usize,
    pub near_bistable: bool,
    pub mean_field_dev: T,
    pub a1_minus_dev: T,
    pub a1_plus_dev: T,
    pub a2_minus_dev: T,
    pub x1_dev: T,
    pub tp_abs2_analytic: T,
    pub tp_abs2_oracle: T,
    pub tp_abs2_dev: T,
    pub eta_analytic: T,
    pub eta_oracle: T,
    pub eta_dev: T,
    pub tolerances: Tolerances<T>,
    /// `tp_abs2_dev` within the first-order budget and `eta_dev` within the
    /// second-order budget.
    pub pass: bool,
}

fn rel_dev<T: Real>(analytic: Complex<T>, oracle: Complex<T>) -> T {
    let denom = oracle.norm();
    let diff = (analytic - oracle).norm();
    if denom > T::zero() {
        diff / denom
    } else if diff == T::zero() {
        T::zero()
    } else {
        T::infinity()
    }
}

fn rel_dev_re<T: Real>(analytic: T, oracle: T) -> T {
    rel_dev(Complex::new(analytic, T::zero()), Complex::new(oracle, T::zero()))
}

/// Scores the perturbative response against a demodulated trajectory taken
/// at the same operating point and probe detuning.
pub fn compare<T: Real>(
    ss: &SteadyState<T>,
    analytic: &SidebandResponseRef<'_, T>,
    oracle: &DemodResult<T>,
    tolerances: Tolerances<T>,
) -> Result<ComparisonReport<T>, Error> {
    let analytic = analytic.0;
    let omega = analytic.probe_detuning;
    if rel_dev_re(omega, oracle.probe_detuning) > T::of(1e-12) {
        return Err(Error::Usage(format!(
            "probe detunings differ: response at {:.6e}, trajectory at {:.6e}",
            omega.as_f64(),
            oracle.probe_detuning.as_f64()
        )));
    }
    let d = &ss.derived;
    if analytic.decay_rate != d.decay_rate || analytic.probe_amplitude != d.probe_amplitude {
        return Err(Error::Usage(
            "response was computed from different parameters than the steady state".into(),
        ));
    }
    let eps_p = d.probe_amplitude;
    if eps_p == T::zero() {
        return Err(Error::Usage(
            "comparison requires a probe drive (eps_p > 0)".into(),
        ));
    }
    let kappa = d.decay_rate;

    let tp_oracle =
        Complex::new(T::one(), T::zero()) - oracle.field(1) * (kappa / eps_p);
    let tp_abs2_oracle = tp_oracle.norm_sqr();
    let eta_oracle = (oracle.field(2) * (kappa / eps_p)).norm();

    let tp_abs2_dev = rel_dev_re(analytic.tp_abs2, tp_abs2_oracle);
    let eta_dev = rel_dev_re(analytic.eta, eta_oracle);
    let pass = tp_abs2_dev <= tolerances.first_order && eta_dev <= tolerances.second_order;

    Ok(ComparisonReport {
        probe_detuning: omega,
        branch: ss.branch.name(),
        branch_index: ss.branch_index,
        near_bistable: ss.near_bistable,
        mean_field_dev: rel_dev(ss.field, oracle.field(0)),
        a1_minus_dev: rel_dev(analytic.a1_minus, oracle.field(1)),
        a1_plus_dev: rel_dev(analytic.a1_plus, oracle.field(-1)),
        a2_minus_dev: rel_dev(analytic.a2_minus, oracle.field(2)),
        x1_dev: rel_dev(analytic.x1, oracle.mech(1)),
        tp_abs2_analytic: analytic.tp_abs2,
        tp_abs2_oracle,
        tp_abs2_dev,
        eta_analytic: analytic.eta,
        eta_oracle,
        eta_dev,
        tolerances,
        pass,
    })
}

/// Thin newtype so [`compare`] reads `compare(&ss, &response.into(), ...)`
/// without this module depending on response internals beyond the public
/// struct.
pub struct SidebandResponseRef<'a, T>(pub &'a crate::response::SidebandResponse<T>);

impl<'a, T> From<&'a crate::response::SidebandResponse<T>> for SidebandResponseRef<'a, T> {
    fn from(r: &'a crate::response::SidebandResponse<T>) -> Self {
        SidebandResponseRef(r)
    }
}
