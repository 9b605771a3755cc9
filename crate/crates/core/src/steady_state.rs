//! Pump-only operating point of the driven cavity.
//!
//! With the probe off, the intracavity photon number `n = |a|^2` satisfies a
//! real cubic: the cavity pull has two contributions, the Kerr shift
//! `-2 U n` and the static mechanical displacement, and both enter the
//! resonance condition through the same bracket
//!
//! ```text
//! B(n) = Delta_c + 2 U n + hbar g^2 n / (m omega_m^2),
//! n * (kappa^2 + B(n)^2) = eps_l^2.
//! ```
//!
//! `g < 0` (inward surface pull) makes the displacement positive and
//! `-g*x > 0`, so the optomechanical term adds to the Kerr term with the same
//! sign; the bracket above is asserted in the tests. For strong driving the
//! cubic has three positive roots (optical bistability) and a branch policy
//! picks one.

use num_complex::Complex;

use crate::cubic;
use crate::error::Error;
use crate::params::DerivedParams;
use crate::scalar::Real;

/// Steady-state roots closer than this (relative) are treated as one
/// degenerate root; keeping both would make branch indices flap along sweeps.
const ROOT_MERGE_RTOL: f64 = 1e-6;

/// Any accepted root must satisfy the cubic to this relative backward error.
const ROOT_RESIDUAL_RTOL: f64 = 1e-10;

/// Which steady-state root to follow when several coexist.
///
/// Branches name root positions by photon number: `Lower` is always the
/// smallest root and `Upper` the largest (they coincide outside the bistable
/// region), while `Middle` exists only when three distinct roots are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Lower,
    Middle,
    Upper,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Lower => "lower",
            Branch::Middle => "middle",
            Branch::Upper => "upper",
        }
    }
}

/// Solved operating point plus the diagnostics the response solver needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState<T> {
    /// Snapshot of the derived parameters this state was solved from.
    pub derived: DerivedParams<T>,
    /// Intracavity photon number `n = |a|^2` on the selected branch.
    pub photon_number: T,
    /// Complex mean field, phase fixed by the real positive pump amplitude.
    pub field: Complex<T>,
    /// Static mirror displacement, m.
    pub displacement: T,
    /// Kerr-induced cavity shift `-2 U n`, rad/s (red shift, so <= 0).
    pub kerr_shift: T,
    /// Effective detuning seen by the fluctuations,
    /// `Delta = Delta_c - 2*kerr_shift - g*x`, rad/s.
    pub effective_detuning: T,
    /// Transparency-window linewidth `gamma_m + (g x_zpf)^2 n / kappa`, rad/s.
    pub omit_linewidth: T,
    /// All non-negative photon-number roots, ascending, near-doubles merged.
    pub roots: Vec<T>,
    /// Index of the selected root within `roots`.
    pub branch_index: usize,
    /// Branch policy that made the selection.
    pub branch: Branch,
    /// Two roots were closer than the merge tolerance and were collapsed.
    pub near_bistable: bool,
    /// The selected root is the middle branch, which is expected to be
    /// dynamically unstable.
    pub unstable_candidate: bool,
}

impl<T: Real> SteadyState<T> {
    /// Residual of the mean-field equation
    /// `a * (kappa - i(Delta_c - kerr_shift - g x)) - eps_l`, recomputed from
    /// the stored fields as an independent consistency check.
    pub fn field_equation_residual(&self) -> T {
        let d = &self.derived;
        let bracket =
            d.detuning - self.kerr_shift - d.om_coupling * self.displacement;
        let lhs = self.field * Complex::new(d.decay_rate, -bracket);
        (lhs - Complex::new(d.pump_amplitude, T::zero())).norm()
    }

    /// Transparency-window linewidth for an arbitrary photon number; the
    /// stored [`SteadyState::omit_linewidth`] is this at the selected root.
    pub fn omit_linewidth_at(derived: &DerivedParams<T>, n: T) -> T {
        let g0 = derived.vacuum_coupling();
        derived.mech_damping + g0 * g0 * n / derived.decay_rate
    }
}

/// Collapses runs of nearly equal ascending roots into their mean. Returns
/// the merged list and whether anything was merged.
fn merge_close_roots<T: Real>(roots: &[T]) -> (Vec<T>, bool) {
    let mut merged: Vec<T> = Vec::with_capacity(roots.len());
    let mut any = false;
    for &r in roots {
        match merged.last_mut() {
            Some(last) if (r - *last).abs() <= T::of(ROOT_MERGE_RTOL) * r.abs().max(last.abs()) => {
                *last = (*last + r) * T::of(0.5);
                any = true;
            }
            _ => merged.push(r),
        }
    }
    (merged, any)
}

/// Solves the photon-number cubic and populates the operating point for the
/// requested branch.
pub fn solve_steady_state<T: Real>(
    derived: &DerivedParams<T>,
    branch: Branch,
) -> Result<SteadyState<T>, Error> {
    let eps_l = derived.pump_amplitude;
    let slope = derived.frequency_pull_slope();
    let detuning = derived.detuning;
    let kappa = derived.decay_rate;

    let roots = if eps_l == T::zero() {
        vec![T::zero()]
    } else {
        let c3 = slope * slope;
        let c2 = T::of(2.0) * slope * detuning;
        let c1 = detuning * detuning + kappa * kappa;
        let c0 = -(eps_l * eps_l);
        let mut roots: Vec<T> = cubic::real_roots(c3, c2, c1, c0)
            .into_iter()
            .filter(|&n| n > T::zero())
            .collect();
        for &n in &roots {
            let res = cubic::relative_residual(c3, c2, c1, c0, n);
            if res > T::of(ROOT_RESIDUAL_RTOL) {
                return Err(Error::Numerical(format!(
                    "steady-state root n = {:.6e} has relative residual {:.3e}",
                    n.as_f64(),
                    res.as_f64()
                )));
            }
        }
        if roots.is_empty() {
            return Err(Error::Numerical(format!(
                "no positive photon-number root for eps_l = {:.6e} (solver failure)",
                eps_l.as_f64()
            )));
        }
        let (merged, collapsed) = merge_close_roots(&roots);
        roots = merged;
        if collapsed {
            // Re-check: the mean of a collapsed pair must still satisfy the
            // cubic well enough to use.
            roots.retain(|&n| cubic::relative_residual(c3, c2, c1, c0, n) < T::of(1e-3));
        }
        roots
    };

    let near_bistable = roots.len() == 2;
    let branch_index = match branch {
        Branch::Lower => 0,
        Branch::Upper => roots.len() - 1,
        Branch::Middle => {
            if roots.len() == 3 {
                1
            } else {
                return Err(Error::BranchUnavailable {
                    requested: branch.name(),
                    count: roots.len(),
                    roots: roots.iter().map(|r| r.as_f64()).collect(),
                    available: if roots.len() == 1 { "lower = upper" } else { "lower, upper" },
                });
            }
        }
    };
    let n = roots[branch_index];

    let bracket = detuning + slope * n;
    let field = Complex::new(eps_l, T::zero()) / Complex::new(kappa, -bracket);
    let displacement = -derived.hbar * derived.om_coupling * n / derived.mech_spring();
    let kerr_shift = -T::of(2.0) * derived.kerr * n;
    let effective_detuning =
        detuning - T::of(2.0) * kerr_shift - derived.om_coupling * displacement;
    let omit_linewidth = SteadyState::omit_linewidth_at(derived, n);

    Ok(SteadyState {
        derived: *derived,
        photon_number: n,
        field,
        displacement,
        kerr_shift,
        effective_detuning,
        omit_linewidth,
        roots,
        branch_index,
        branch,
        near_bistable,
        unstable_candidate: matches!(branch, Branch::Middle),
    })
}

/// One entry of a pump-power x Kerr-coefficient sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPointRow<T> {
    /// Pump power for this row, W.
    pub pump_power: T,
    /// Kerr coefficient for this row, rad/s.
    pub kerr: T,
    pub state: SteadyState<T>,
}

/// Solves the operating point over the outer product of pump powers and Kerr
/// coefficients (rad/s), power-major row order. Point failures abort the
/// sweep with the grid coordinates attached.
pub fn kerr_shift_curve<T: Real>(
    base: &crate::params::PhysicalParams<T>,
    pump_powers: &[T],
    kerr_values: &[T],
    branch: Branch,
) -> Result<Vec<OperatingPointRow<T>>, Error> {
    if pump_powers.is_empty() {
        return Err(Error::InvalidParameter {
            field: "pump_powers",
            message: "grid must be nonempty".into(),
        });
    }
    if kerr_values.is_empty() {
        return Err(Error::InvalidParameter {
            field: "kerr_values",
            message: "grid must be nonempty".into(),
        });
    }
    let mut rows = Vec::with_capacity(pump_powers.len() * kerr_values.len());
    for &p in pump_powers {
        for &u in kerr_values {
            let mut params = *base;
            params.pump_power = p;
            params.kerr = crate::params::KerrInput::Coefficient {
                value: u,
                unit: crate::params::KerrUnit::RadPerSec,
            };
            let attach = |source: Error| Error::SweepPoint {
                pump_power: p.as_f64(),
                kerr: u.as_f64(),
                source: Box::new(source),
            };
            let derived = params.derive().map_err(attach)?;
            let state = solve_steady_state(&derived, branch).map_err(attach)?;
            rows.push(OperatingPointRow { pump_power: p, kerr: u, state });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{KerrInput, KerrUnit};
    use crate::testutil::{toroid_pinned_kappa, toroid_with_kerr};

    fn solve_kerr(u_rad_s: f64, pump_mw: f64) -> SteadyState<f64> {
        let mut p = toroid_with_kerr(u_rad_s, KerrUnit::RadPerSec);
        p.pump_power = pump_mw * 1e-3;
        solve_steady_state(&p.derive().unwrap(), Branch::Lower).unwrap()
    }

    #[test]
    fn undriven_cavity_is_empty() {
        let mut p = toroid_pinned_kappa();
        p.pump_power = 0.0;
        let d = p.derive().unwrap();
        let ss = solve_steady_state(&d, Branch::Lower).unwrap();
        assert_eq!(ss.photon_number, 0.0);
        assert_eq!(ss.field, num_complex::Complex64::new(0.0, 0.0));
        assert_eq!(ss.displacement, 0.0);
        assert_eq!(ss.kerr_shift, 0.0);
        assert_eq!(ss.effective_detuning, d.detuning);
        assert_eq!(ss.omit_linewidth, d.mech_damping);
    }

    #[test]
    fn resonant_linear_cavity_photon_number_is_exact() {
        let mut d = toroid_pinned_kappa().derive().unwrap();
        d.kerr = 0.0;
        d.om_coupling = 0.0;
        d.detuning = 0.0;
        let ss = solve_steady_state(&d, Branch::Lower).unwrap();
        let expected = (d.pump_amplitude / d.decay_rate).powi(2);
        assert!(
            (ss.photon_number - expected).abs() <= 1e-12 * expected,
            "n = {:.15e}, expected {:.15e}",
            ss.photon_number,
            expected
        );
    }

    #[test]
    fn linear_point_matches_hand_computed_photon_number() {
        // U = 0 leaves only the weak optomechanical pull; the fixed point of
        // n = eps_l^2 / (kappa^2 + (Delta_c + s n)^2) iterates to ~1.85e7.
        let ss = solve_kerr(0.0, 10.0);
        assert!(
            (1.8e7..1.9e7).contains(&ss.photon_number),
            "n = {:.4e}",
            ss.photon_number
        );
        assert_eq!(ss.kerr_shift, 0.0, "U = 0 must give exactly zero Kerr shift");
        assert_eq!(ss.roots.len(), 1);
        let res = ss.field_equation_residual();
        assert!(res <= 1e-10 * ss.derived.pump_amplitude, "field residual {res:e}");
    }

    #[test]
    fn shift_forms_agree_and_displacement_is_positive() {
        let ss = solve_kerr(27.3, 10.0);
        let d = &ss.derived;
        assert!(ss.displacement > 0.0, "g < 0 must pull x positive");
        assert!(ss.kerr_shift < 0.0, "Kerr shift is a red shift");
        // Same shift from the displacement form 2 U m omega_m^2 x / (hbar g).
        let from_x = 2.0 * d.kerr * d.mech_spring() * ss.displacement / (d.hbar * d.om_coupling);
        assert!(
            (ss.kerr_shift - from_x).abs() <= 1e-12 * ss.kerr_shift.abs(),
            "kerr shift {:.15e} vs displacement form {:.15e}",
            ss.kerr_shift,
            from_x
        );
        // Effective detuning restates the bracket plus one extra Kerr term.
        let n = ss.photon_number;
        let bracket = d.detuning + d.frequency_pull_slope() * n;
        let expected = bracket + 2.0 * d.kerr * n;
        assert!((ss.effective_detuning - expected).abs() <= 1e-6 * expected.abs());
    }

    #[test]
    fn linewidth_broadens_with_photon_number() {
        // Gamma tracks the circulating photon number, so it grows with pump
        // power on a fixed branch. (It is NOT monotone in U at fixed
        // detuning: the Kerr pull first drags the cavity through resonance,
        // raising n, then detunes it again.)
        let gm = toroid_pinned_kappa().mech_damping;
        let mut last = gm;
        for mw in [1.0, 5.0, 10.0, 20.0] {
            let ss = solve_kerr(0.0, mw);
            assert!(
                ss.omit_linewidth > last,
                "Gamma({mw} mW) = {:.4e} not above previous {:.4e}",
                ss.omit_linewidth,
                last
            );
            last = ss.omit_linewidth;
        }
        // n = 0 reduces the linewidth to the bare mechanical damping.
        let d = toroid_pinned_kappa().derive().unwrap();
        assert_eq!(SteadyState::omit_linewidth_at(&d, 0.0), gm);
        // Gamma - gamma_m is exactly linear in n.
        let g1 = SteadyState::omit_linewidth_at(&d, 1e7) - gm;
        let g2 = SteadyState::omit_linewidth_at(&d, 2e7) - gm;
        assert!((g2 - 2.0 * g1).abs() <= 1e-12 * g2.abs());
    }

    #[test]
    fn bistable_window_has_three_ordered_roots() {
        // U = 3 rad/s at this operating point is bistable for pump powers
        // roughly between 3 and 7.5 mW.
        let mut p = toroid_with_kerr(3.0, KerrUnit::RadPerSec);
        p.pump_power = 5e-3;
        let d = p.derive().unwrap();

        let lower = solve_steady_state(&d, Branch::Lower).unwrap();
        assert_eq!(lower.roots.len(), 3, "roots: {:?}", lower.roots);
        assert!(lower.roots[0] < lower.roots[1] && lower.roots[1] < lower.roots[2]);
        assert_eq!(lower.branch_index, 0);
        assert!(!lower.unstable_candidate);
        assert!(!lower.near_bistable);

        let middle = solve_steady_state(&d, Branch::Middle).unwrap();
        assert_eq!(middle.branch_index, 1);
        assert!(middle.unstable_candidate);

        let upper = solve_steady_state(&d, Branch::Upper).unwrap();
        assert_eq!(upper.branch_index, 2);
        assert!(upper.photon_number > lower.photon_number);

        for ss in [&lower, &middle, &upper] {
            let res = ss.field_equation_residual();
            assert!(
                res <= 1e-10 * d.pump_amplitude,
                "branch {} field residual {res:e}",
                ss.branch.name()
            );
        }
    }

    #[test]
    fn middle_branch_errors_when_monostable() {
        let p = toroid_with_kerr(0.0, KerrUnit::RadPerSec);
        let d = p.derive().unwrap();
        let err = solve_steady_state(&d, Branch::Middle).unwrap_err();
        match err {
            Error::BranchUnavailable { requested, count, available, .. } => {
                assert_eq!(requested, "middle");
                assert_eq!(count, 1);
                assert!(available.contains("lower"));
            }
            other => panic!("expected BranchUnavailable, got {other:?}"),
        }
        // Lower and upper both resolve to the single root.
        let a = solve_steady_state(&d, Branch::Lower).unwrap();
        let b = solve_steady_state(&d, Branch::Upper).unwrap();
        assert_eq!(a.photon_number, b.photon_number);
    }

    #[test]
    fn close_roots_merge_into_near_bistable_flag() {
        let (merged, any): (Vec<f64>, bool) = merge_close_roots(&[1.0, 1.0 + 5e-7, 2.0]);
        assert!(any);
        assert_eq!(merged.len(), 2);
        assert!((merged[0] - (1.0 + 2.5e-7)).abs() < 1e-12);
        let (merged, any) = merge_close_roots(&[1.0, 1.1, 2.0]);
        assert!(!any);
        assert_eq!(merged.len(), 3);
    }

    #[test]
    fn lower_branch_is_continuous_along_power_sweeps() {
        // Monostable run-up and the in-window lower branch, separately; the
        // 3-point second difference stays far below the local slope scale.
        for (lo_mw, hi_mw) in [(0.2, 2.5), (3.2, 7.3)] {
            let mut ns = Vec::new();
            let count = 101;
            for i in 0..count {
                let mw = lo_mw + (hi_mw - lo_mw) * (i as f64) / ((count - 1) as f64);
                ns.push(solve_kerr(3.0, mw).photon_number);
            }
            for i in 1..count - 1 {
                let second = (ns[i + 1] - 2.0 * ns[i] + ns[i - 1]).abs();
                let first = (ns[i + 1] - ns[i]).abs() + (ns[i] - ns[i - 1]).abs();
                assert!(
                    second <= 0.3 * first + 1e-9 * ns[i],
                    "jump near {} mW: second diff {:.3e}, first {:.3e}",
                    lo_mw + (hi_mw - lo_mw) * (i as f64) / ((count - 1) as f64),
                    second,
                    first
                );
            }
        }
    }

    #[test]
    fn kerr_curve_matches_single_solves_and_trends() {
        let base = toroid_pinned_kappa();
        let powers: Vec<f64> = vec![2e-3, 6e-3, 10e-3];
        let kerrs: Vec<f64> = vec![0.0, 3.0, 27.3];
        let rows = kerr_shift_curve(&base, &powers, &kerrs, Branch::Lower).unwrap();
        assert_eq!(rows.len(), 9);

        // U = 0 column: exactly zero shift everywhere.
        for row in rows.iter().filter(|r| r.kerr == 0.0) {
            assert_eq!(row.state.kerr_shift, 0.0);
        }
        // Fixed power: |shift| grows with U.
        for p in &powers {
            let col: Vec<f64> = rows
                .iter()
                .filter(|r| r.pump_power == *p)
                .map(|r| r.state.kerr_shift.abs())
                .collect();
            assert!(col[0] < col[1] && col[1] < col[2], "shift vs U at {p} W: {col:?}");
        }
        // Fixed U > 0: |shift| grows with power.
        for u in &kerrs[1..] {
            let col: Vec<f64> = rows
                .iter()
                .filter(|r| r.kerr == *u)
                .map(|r| r.state.kerr_shift.abs())
                .collect();
            assert!(col[0] < col[1] && col[1] < col[2], "shift vs P at {u} rad/s: {col:?}");
        }
        // Single point agrees with solve_steady_state to machine precision.
        let lone = solve_kerr(3.0, 6.0);
        let row = rows.iter().find(|r| r.kerr == 3.0 && r.pump_power == 6e-3).unwrap();
        assert_eq!(row.state.photon_number, lone.photon_number);
    }

    #[test]
    fn sweep_errors_carry_grid_coordinates() {
        let mut base = toroid_pinned_kappa();
        base.kerr = KerrInput::Coefficient { value: 0.0, unit: KerrUnit::RadPerSec };
        let err =
            kerr_shift_curve(&base, &[1e-3], &[-1.0], Branch::Lower).unwrap_err();
        match err {
            Error::SweepPoint { pump_power, kerr, source } => {
                assert_eq!(pump_power, 1e-3);
                assert_eq!(kerr, -1.0);
                assert!(matches!(*source, Error::InvalidParameter { .. }));
            }
            other => panic!("expected SweepPoint, got {other:?}"),
        }
        assert!(kerr_shift_curve(&base, &[], &[0.0], Branch::Lower).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn roots_are_ordered_consistent_and_accurate(
                pump_mw in 0.05f64..20.0,
                u in 0.0f64..10.0,
                detuning_sign in prop::bool::ANY,
            ) {
                let mut p = toroid_with_kerr(u, KerrUnit::RadPerSec);
                p.pump_power = pump_mw * 1e-3;
                if detuning_sign {
                    p.detuning = -p.detuning;
                }
                let d = p.derive().unwrap();
                let ss = solve_steady_state(&d, Branch::Lower).unwrap();
                prop_assert!(matches!(ss.roots.len(), 1..=3));
                for w in ss.roots.windows(2) {
                    prop_assert!(w[0] < w[1], "roots not ascending: {:?}", &ss.roots);
                }
                for &n in &ss.roots {
                    prop_assert!(n > 0.0);
                }
                prop_assert!(ss.field_equation_residual() <= 1e-10 * d.pump_amplitude);
                let n = ss.photon_number;
                prop_assert!((ss.field.norm_sqr() - n).abs() <= 1e-9 * n);
            }
        }
    }
}
