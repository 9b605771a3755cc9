//! Dense 3x3 complex linear solves.
//!
//! The sideband systems are single 3x3 solves per probe detuning, so a direct
//! LU factorization with partial pivoting is both the fastest and the most
//! transparent choice. Every solve also reports an infinity-norm condition
//! estimate so callers can reject answers from nearly singular systems
//! instead of returning noise.

use num_complex::Complex;

use crate::scalar::Real;

/// Result of [`solve3x3`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solve3Outcome<T> {
    /// System solved; `condition` is the estimate `‖A‖_inf * ‖A^-1‖_inf`.
    Solved { x: [Complex<T>; 3], condition: T },
    /// A pivot vanished outright; `condition` is infinite.
    Singular { condition: T },
}

/// Magnitude used for pivot selection: cheaper than the modulus and within a
/// factor sqrt(2) of it, which is all pivoting needs.
fn cabs1<T: Real>(z: Complex<T>) -> T {
    z.re.abs() + z.im.abs()
}

struct Lu<T> {
    lu: [[Complex<T>; 3]; 3],
    perm: [usize; 3],
}

// The inner elimination reads one row while writing another at the same
// column offsets; explicit indices are the tractable form.
#[allow(clippy::needless_range_loop)]
fn factor<T: Real>(a: &[[Complex<T>; 3]; 3]) -> Option<Lu<T>> {
    let mut lu = *a;
    let mut perm = [0usize, 1, 2];
    for col in 0..3 {
        let pivot_row = (col..3)
            .max_by(|&i, &j| {
                cabs1(lu[i][col])
                    .partial_cmp(&cabs1(lu[j][col]))
                    .expect("NaN in matrix entry")
            })
            .unwrap();
        if cabs1(lu[pivot_row][col]) == T::zero() {
            return None;
        }
        if pivot_row != col {
            lu.swap(pivot_row, col);
            perm.swap(pivot_row, col);
        }
        let pivot = lu[col][col];
        for row in (col + 1)..3 {
            let factor = lu[row][col] / pivot;
            lu[row][col] = factor;
            for k in (col + 1)..3 {
                lu[row][k] -= factor * lu[col][k];
            }
        }
    }
    Some(Lu { lu, perm })
}

impl<T: Real> Lu<T> {
    fn solve(&self, b: &[Complex<T>; 3]) -> [Complex<T>; 3] {
        // Forward substitution on the permuted right-hand side.
        let mut y = [b[self.perm[0]], b[self.perm[1]], b[self.perm[2]]];
        for row in 1..3 {
            for col in 0..row {
                let sub = self.lu[row][col] * y[col];
                y[row] -= sub;
            }
        }
        // Back substitution.
        for row in (0..3).rev() {
            for col in (row + 1)..3 {
                let sub = self.lu[row][col] * y[col];
                y[row] -= sub;
            }
            y[row] /= self.lu[row][row];
        }
        y
    }
}

fn inf_norm<T: Real>(a: &[[Complex<T>; 3]; 3]) -> T {
    let mut worst = T::zero();
    for row in a {
        let sum = row[0].norm() + row[1].norm() + row[2].norm();
        if sum > worst {
            worst = sum;
        }
    }
    worst
}

/// Solves `A x = b` and estimates the condition number by explicitly forming
/// the three columns of `A^-1` (three extra substitutions; trivial at 3x3).
pub fn solve3x3<T: Real>(a: &[[Complex<T>; 3]; 3], b: &[Complex<T>; 3]) -> Solve3Outcome<T> {
    let Some(lu) = factor(a) else {
        return Solve3Outcome::Singular { condition: T::infinity() };
    };
    let x = lu.solve(b);

    let mut inv_norm = T::zero();
    let mut inv_rows = [[T::zero(); 3]; 3];
    for col in 0..3 {
        let mut e = [Complex::new(T::zero(), T::zero()); 3];
        e[col] = Complex::new(T::one(), T::zero());
        let column = lu.solve(&e);
        for row in 0..3 {
            inv_rows[row][col] = column[row].norm();
        }
    }
    for row in inv_rows {
        let sum = row[0] + row[1] + row[2];
        if sum > inv_norm {
            inv_norm = sum;
        }
    }
    let condition = inf_norm(a) * inv_norm;
    if !condition.is_finite() {
        return Solve3Outcome::Singular { condition: T::infinity() };
    }
    Solve3Outcome::Solved { x, condition }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    type M = [[Complex64; 3]; 3];

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mul(a: &M, x: &[Complex64; 3]) -> [Complex64; 3] {
        let mut out = [c(0.0, 0.0); 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i] += a[i][j] * x[j];
            }
        }
        out
    }

    fn solved(a: &M, b: &[Complex64; 3]) -> ([Complex64; 3], f64) {
        match solve3x3(a, b) {
            Solve3Outcome::Solved { x, condition } => (x, condition),
            Solve3Outcome::Singular { condition } => {
                panic!("unexpected singular outcome, condition {condition:e}")
            }
        }
    }

    #[test]
    fn identity_passes_rhs_through() {
        let a = [
            [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        ];
        let b = [c(1.0, 2.0), c(-3.0, 0.5), c(0.0, -7.0)];
        let (x, condition) = solved(&a, &b);
        assert_eq!(x, b);
        assert!((condition - 1.0).abs() < 1e-14, "cond(I) = {condition}");
    }

    #[test]
    fn zero_diagonal_forces_pivoting() {
        let a = [
            [c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)],
            [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 3.0)],
        ];
        let b = [c(4.0, 0.0), c(5.0, 0.0), c(0.0, 6.0)];
        let (x, _) = solved(&a, &b);
        assert!((x[0] - c(5.0, 0.0)).norm() < 1e-14);
        assert!((x[1] - c(2.0, 0.0)).norm() < 1e-14);
        assert!((x[2] - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn residual_is_tiny_for_generic_complex_system() {
        let a = [
            [c(3.0, 1.0), c(-1.0, 0.2), c(0.5, -0.7)],
            [c(0.1, -2.0), c(4.0, 0.0), c(1.0, 1.0)],
            [c(-0.3, 0.4), c(2.0, -1.0), c(5.0, 2.0)],
        ];
        let b = [c(1.0, 0.0), c(0.0, 1.0), c(-2.0, 3.0)];
        let (x, condition) = solved(&a, &b);
        let ax = mul(&a, &x);
        for i in 0..3 {
            assert!((ax[i] - b[i]).norm() < 1e-13, "residual row {i}: {:?}", ax[i] - b[i]);
        }
        assert!(condition < 100.0, "well-conditioned system reported cond {condition}");
    }

    #[test]
    fn repeated_rows_come_back_singular() {
        let row = [c(1.0, 1.0), c(2.0, 0.0), c(-1.0, 0.5)];
        let a = [row, row, [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]];
        let b = [c(1.0, 0.0); 3];
        match solve3x3(&a, &b) {
            Solve3Outcome::Singular { condition } => {
                assert!(condition.is_infinite());
            }
            Solve3Outcome::Solved { condition, .. } => {
                // Rounding may keep the pivot barely nonzero; the condition
                // estimate must still flag the system as useless.
                assert!(condition > 1e14, "near-singular system scored cond {condition:e}");
            }
        }
    }

    #[test]
    fn condition_tracks_row_scaling() {
        // Scaling one row by 1e-12 makes the matrix ill conditioned even
        // though every pivot stays nonzero.
        let a = [
            [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(1e-12, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        ];
        let b = [c(1.0, 0.0); 3];
        let (_, condition) = solved(&a, &b);
        assert!(condition > 1e11, "cond = {condition:e}");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn entry() -> impl Strategy<Value = Complex64> {
            (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| c(re, im))
        }

        proptest! {
            #[test]
            fn diagonally_dominant_systems_solve_to_machine_precision(
                offdiag in proptest::array::uniform3(proptest::array::uniform3(entry())),
                rhs in proptest::array::uniform3(entry()),
            ) {
                let mut a = offdiag;
                for (i, row) in a.iter_mut().enumerate() {
                    // Off-diagonal magnitudes are < sqrt(2) each; 5 on the
                    // diagonal guarantees strict dominance.
                    row[i] += c(5.0, 0.0);
                }
                let (x, condition) = solved(&a, &rhs);
                let ax = mul(&a, &x);
                for i in 0..3 {
                    prop_assert!((ax[i] - rhs[i]).norm() < 1e-12);
                }
                prop_assert!(condition < 1e3);
            }
        }
    }
}
