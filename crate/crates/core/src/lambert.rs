//! Lambert W function on arbitrary integer branches, scalar and 3×3 matrix.
//!
//! The scalar function uses Halley's iteration on `w·eʷ − y` from a
//! branch-aware starting point: a series around the branch point `−1/e`, a
//! Padé approximant near the origin on the principal branch, and the
//! asymptotic expansion `L₁ − ln L₁ + ln L₁ / L₁` with `L₁ = ln y + 2πik`
//! everywhere else. Branch cuts follow the usual convention (counter-clockwise
//! continuity, `w₀` real on `[−1/e, ∞)`, `w₋₁` real on `[−1/e, 0)`).
//!
//! The matrix function is evaluated through an eigendecomposition,
//! `W_k(M) = V diag(w_k(λᵢ)) V⁻¹`.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat3, CVec3, C64};

pub const TOL_W: f64 = 1e-12;
pub const MAX_ITER: usize = 100;
/// Largest eigenvector-matrix condition number accepted by [`matrix_w`].
pub const DEFECT_THRESHOLD: f64 = 1e8;
/// Eigenvalues below this (relative to `max(1, ‖M‖_F)`) are treated as exact zeros.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-12;

const INV_E: f64 = 1.0 / E;
const TWO_PI: f64 = 2.0 * PI;

/// `w_k(y)`: the branch-`k` solution of `w·eʷ = y`.
pub fn scalar_w(k: i32, y: C64) -> Result<C64> {
    if !(y.re.is_finite() && y.im.is_finite()) {
        return Err(Error::invalid("y", format!("lambert W argument must be finite, got {y}")));
    }
    if y.re == 0.0 && y.im == 0.0 {
        return if k == 0 {
            Ok(C64::new(0.0, 0.0))
        } else {
            Err(Error::LambertDomain { branch: k })
        };
    }

    let dist_bp = (y + INV_E).norm();
    let at_branch_point = branch_point_sign(k, y);
    if let Some(sign) = at_branch_point {
        if dist_bp <= 4.0 * f64::EPSILON {
            return Ok(C64::new(-1.0, 0.0));
        }
        if dist_bp < 1e-6 {
            // the series is accurate to far below the tolerance this close in,
            // and Halley's denominator degenerates at w = -1
            return Ok(branch_point_series(y, sign));
        }
    }

    let mut w = initial_guess(k, y);
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - y;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (wp1 * 2.0);
        let step = f / denom;
        if !(step.re.is_finite() && step.im.is_finite()) {
            break;
        }
        w -= step;
        if step.norm() <= 4.0 * f64::EPSILON * (1.0 + w.norm()) {
            break;
        }
    }

    let residual = (w * w.exp() - y).norm();
    if !(residual <= TOL_W * y.norm().max(1.0)) {
        return Err(Error::LambertNoConvergence {
            branch: k,
            y,
            residual,
        });
    }
    Ok(w)
}

/// Sign of the square-root term when `(k, y)` sits on a sheet that touches
/// the branch point `−1/e`, `None` otherwise.
fn branch_point_sign(k: i32, y: C64) -> Option<f64> {
    match k {
        0 => Some(1.0),
        -1 if y.im >= 0.0 => Some(-1.0),
        1 if y.im < 0.0 => Some(-1.0),
        _ => None,
    }
}

fn branch_point_series(y: C64, sign: f64) -> C64 {
    let p = ((y * E + 1.0) * 2.0).sqrt() * sign;
    // coefficients of the expansion of W around -1/e in p = ±sqrt(2(ey + 1))
    const COEFFS: [f64; 7] = [
        -1.0,
        1.0,
        -1.0 / 3.0,
        11.0 / 72.0,
        -43.0 / 540.0,
        769.0 / 17280.0,
        -221.0 / 8505.0,
    ];
    COEFFS.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * p + c)
}

fn asymptotic(y: C64, k: i32) -> C64 {
    let l1 = y.ln() + C64::new(0.0, TWO_PI * k as f64);
    let l2 = l1.ln();
    l1 - l2 + l2 / l1
}

fn initial_guess(k: i32, y: C64) -> C64 {
    let near_bp = (y + INV_E).norm() < 0.3;
    if let Some(sign) = branch_point_sign(k, y) {
        if near_bp {
            return branch_point_series(y, sign);
        }
    }
    match k {
        0 => {
            let a = y.im.abs();
            if -1.0 < y.re && y.re < 1.5 && a < 1.0 && -2.5 * a - 0.2 < y.re {
                // Padé approximant around the origin
                let num = y * (y * (y * 0.1 + 1.812_187_885_639_363_4) + 2.331_643_981_597_124) + 1.0;
                let den = y * (y * 1.812_187_885_639_363_4 + 3.331_643_981_597_124) + 1.0;
                y * num / den
            } else {
                asymptotic(y, 0)
            }
        }
        -1 if y.im == 0.0 && y.re < 0.0 && y.re > -INV_E => C64::new((-y.re).ln(), 0.0),
        _ => asymptotic(y, k),
    }
}

/// Identifies which branch a solution `w` of `w·eʷ = y` lies on, using the
/// unwinding identity `w + ln w = ln y + 2πik` (with the real `w₋₁` segment on
/// `(−1/e, 0)` handled separately).
pub fn branch_of(w: C64, y: C64) -> i32 {
    if w.im == 0.0 && w.re < -1.0 && y.im == 0.0 && y.re < 0.0 {
        return -1;
    }
    let n = (w + w.ln() - y.ln()).im / TWO_PI;
    n.round() as i32
}

/// Result of the matrix Lambert W evaluation.
#[derive(Debug, Clone)]
pub struct MatrixW {
    pub value: CMat3,
    /// Eigenvalues of the input matrix.
    pub eigenvalues: [C64; 3],
    /// Eigenvector matrix of the input matrix (unit columns).
    pub eigenvectors: CMat3,
    pub condition_estimate: f64,
}

/// `W_k(M) = V diag(w_k(λ₁), w_k(λ₂), w_k(λ₃)) V⁻¹`.
///
/// Eigenvalues that are numerically zero map to 0 on every branch: `w_k(0)`
/// is only finite for `k = 0`, and delay matrices of the form `B·K·θ·Q` are
/// rank one, so their zero eigenvalues have to stay at zero for the matrix
/// equation to have solutions off the principal branch.
pub fn matrix_w(k: i32, m: &CMat3) -> Result<MatrixW> {
    let eig = linalg::eigen3(m)?;
    if !(eig.condition <= DEFECT_THRESHOLD) {
        return Err(Error::NearDefective {
            condition: eig.condition,
            threshold: DEFECT_THRESHOLD,
        });
    }
    let scale = linalg::frobenius(m).max(1.0);
    let mut diag = [C64::new(0.0, 0.0); 3];
    for (d, &lambda) in diag.iter_mut().zip(eig.values.iter()) {
        *d = if lambda.norm() <= ZERO_EIGENVALUE_TOL * scale {
            C64::new(0.0, 0.0)
        } else {
            scalar_w(k, lambda)?
        };
    }
    let v = eig.vectors;
    let v_inv = v.try_inverse().ok_or(Error::NearDefective {
        condition: f64::INFINITY,
        threshold: DEFECT_THRESHOLD,
    })?;
    let value = v * CMat3::from_diagonal(&CVec3::new(diag[0], diag[1], diag[2])) * v_inv;
    Ok(MatrixW {
        value,
        eigenvalues: eig.values,
        eigenvectors: v,
        condition_estimate: eig.condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn trivial_values() {
        assert_eq!(scalar_w(0, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!((scalar_w(0, c(E, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        assert!((scalar_w(0, c(-INV_E, 0.0)).unwrap() - c(-1.0, 0.0)).norm() < 1e-8);
        assert!((scalar_w(-1, c(-INV_E, 0.0)).unwrap() - c(-1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn omega_constant_matches_bisection() {
        let oracle = bisect(0.0, 1.0, |w| w * w.exp() - 1.0);
        let w = scalar_w(0, c(1.0, 0.0)).unwrap();
        assert!((w.re - oracle).abs() < 1e-14);
        assert!(w.im.abs() < 1e-15);
        assert!((w.re - 0.567_143_290_409_783_8).abs() < 1e-15);
    }

    #[test]
    fn zero_is_a_domain_error_off_the_principal_branch() {
        for k in [-3, -1, 1, 2] {
            assert!(matches!(
                scalar_w(k, c(0.0, 0.0)),
                Err(Error::LambertDomain { branch }) if branch == k
            ));
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        assert!(scalar_w(0, c(f64::NAN, 0.0)).is_err());
        assert!(scalar_w(2, c(f64::INFINITY, 1.0)).is_err());
    }

    #[test]
    fn real_branches_on_the_negative_segment() {
        for &y in &[-0.35, -0.3, -0.2, -0.1, -0.01, -1e-5] {
            let w0 = scalar_w(0, c(y, 0.0)).unwrap();
            let wm1 = scalar_w(-1, c(y, 0.0)).unwrap();
            assert!(w0.im.abs() < 1e-12 && wm1.im.abs() < 1e-12, "y = {y}: {w0} {wm1}");
            assert!(wm1.re <= -1.0 && -1.0 <= w0.re);
            let r0 = bisect(-1.0, 0.0, |w| w * w.exp() - y);
            let r1 = bisect(-60.0, -1.0, |w| w * w.exp() - y);
            assert!((w0.re - r0).abs() < 1e-10);
            assert!((wm1.re - r1).abs() < 1e-9 * r1.abs());
        }
    }

    #[test]
    fn diagonal_matrix_reduces_to_scalar() {
        let m = CMat3::from_diagonal(&CVec3::new(c(0.0, 0.0), c(E, 0.0), c(E, 0.0)));
        let w = matrix_w(0, &m).unwrap().value;
        let expect = CMat3::from_diagonal(&CVec3::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)));
        assert!(linalg::frobenius(&(w - expect)) < 1e-12);

        let m = CMat3::identity() * c(E, 0.0);
        let w = matrix_w(0, &m).unwrap().value;
        assert!(linalg::frobenius(&(w - CMat3::identity())) < 1e-12);
    }

    #[test]
    fn defective_matrix_is_rejected() {
        let m = CMat3::new(
            c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0),
        );
        assert!(matches!(matrix_w(0, &m), Err(Error::NearDefective { .. })));
    }
}
