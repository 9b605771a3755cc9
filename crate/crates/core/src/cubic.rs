//! Real roots of cubic polynomials with badly scaled coefficients.
//!
//! The steady-state photon-number equation has leading coefficient ~ `s^2`
//! (sub-1 rad^2/s^2) and constant term ~ `eps_l^2` (1e24 photons/s^2), a
//! spread that breaks naive Cardano formulas in f32 and loses digits in f64.
//! Roots are therefore computed on a rescaled monic polynomial whose
//! coefficients are O(1) and polished with a few Newton steps before
//! mapping back.

use crate::scalar::Real;

/// All real roots of `c3 x^3 + c2 x^2 + c1 x + c0 = 0`, ascending.
///
/// Degenerate leading coefficients fall through to the quadratic and linear
/// cases. The identically zero polynomial returns an empty list. Multiple
/// roots are returned with multiplicity (a double root appears twice), so the
/// caller can detect near-degenerate configurations itself.
pub fn real_roots<T: Real>(c3: T, c2: T, c1: T, c0: T) -> Vec<T> {
    if c3 == T::zero() {
        return quadratic_roots(c2, c1, c0);
    }

    // Monic form x^3 + b x^2 + c x + d.
    let b = c2 / c3;
    let c = c1 / c3;
    let d = c0 / c3;

    // Rescale x = sigma * y so the monic coefficients in y are at most 1 in
    // magnitude. sigma is the natural root-magnitude scale of the polynomial.
    let sigma = b.abs().max(c.abs().sqrt()).max(d.abs().cbrt());
    if sigma == T::zero() || !sigma.is_finite() {
        // x^3 = 0, or inputs so extreme no finite scale exists.
        return vec![T::zero(), T::zero(), T::zero()];
    }
    let bs = b / sigma;
    let cs = c / (sigma * sigma);
    let ds = d / (sigma * sigma * sigma);

    let mut ys = monic_unit_roots(bs, cs, ds);
    for y in &mut ys {
        *y = polish_monic(bs, cs, ds, *y);
    }
    let mut roots: Vec<T> = ys.into_iter().map(|y| y * sigma).collect();
    roots.sort_by(|p, q| p.partial_cmp(q).expect("cubic produced NaN root"));
    roots
}

/// Relative backward error of `x` as a root: `|p(x)|` over the magnitude sum
/// of the evaluated terms. Machine-precision roots score near 1e-16 in f64
/// regardless of how wildly the coefficients are scaled.
pub fn relative_residual<T: Real>(c3: T, c2: T, c1: T, c0: T, x: T) -> T {
    let t3 = c3 * x * x * x;
    let t2 = c2 * x * x;
    let t1 = c1 * x;
    let value = (t3 + t2 + t1 + c0).abs();
    let scale = t3.abs() + t2.abs() + t1.abs() + c0.abs();
    if scale == T::zero() {
        value
    } else {
        value / scale
    }
}

/// Real roots of the depressed-form solve for `y^3 + b y^2 + c y + d` with
/// O(1) coefficients. Either one root (positive discriminant) or three
/// (counted with multiplicity).
fn monic_unit_roots<T: Real>(b: T, c: T, d: T) -> Vec<T> {
    let third = T::one() / T::of(3.0);
    let half = T::of(0.5);

    // Shift y = z - b/3 to remove the quadratic term.
    let shift = b * third;
    let p = c - b * b * third;
    let q = (T::of(2.0) * b * b * b / T::of(27.0)) - b * c * third + d;

    let disc = (q * half) * (q * half) + (p * third) * (p * third) * (p * third);

    if disc > T::zero() {
        // One real root. Pick the cube root with no cancellation against q,
        // then recover the other factor from Vieta to keep full precision.
        let s = disc.sqrt();
        let u3 = if q >= T::zero() { -q * half - s } else { -q * half + s };
        let z = if u3 == T::zero() {
            T::zero()
        } else {
            let u = u3.cbrt();
            u - p / (T::of(3.0) * u)
        };
        vec![z - shift]
    } else if p == T::zero() {
        // disc <= 0 with p = 0 forces q = 0: triple root.
        vec![-shift; 3]
    } else {
        // Three real roots (possibly repeated) via the trigonometric form.
        let m = T::of(2.0) * (-p * third).sqrt();
        let arg = (T::of(3.0) * q / (p * m)).max(-T::one()).min(T::one());
        let theta = arg.acos() * third;
        let two_pi_third = T::of(2.0) * T::PI() * third;
        (0..3)
            .map(|k| m * (theta - two_pi_third * T::of(k as f64)).cos() - shift)
            .collect()
    }
}

/// A few Newton iterations on the O(1) monic cubic. Converges quadratically
/// from the analytic root; bails out if the derivative vanishes (extremum).
fn polish_monic<T: Real>(b: T, c: T, d: T, mut y: T) -> T {
    for _ in 0..3 {
        let f = ((y + b) * y + c) * y + d;
        let df = (T::of(3.0) * y + T::of(2.0) * b) * y + c;
        if df == T::zero() || !df.is_finite() {
            break;
        }
        let step = f / df;
        if !step.is_finite() {
            break;
        }
        y -= step;
    }
    y
}

/// Real roots of `a x^2 + b x + c = 0`, ascending, using the cancellation-free
/// quadratic formula. Falls through to the linear case when `a` is zero.
fn quadratic_roots<T: Real>(a: T, b: T, c: T) -> Vec<T> {
    if a == T::zero() {
        if b == T::zero() {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - T::of(4.0) * a * c;
    if disc < T::zero() {
        return Vec::new();
    }
    let s = disc.sqrt();
    let q = -(b + b.signum() * s) * T::of(0.5);
    let mut roots = if q == T::zero() {
        // b and disc both ~ 0: double root at -b/(2a).
        let r = -b / (T::of(2.0) * a);
        vec![r, r]
    } else {
        vec![q / a, c / q]
    };
    roots.sort_by(|p, r| p.partial_cmp(r).expect("quadratic produced NaN root"));
    roots
}
