use acc_cutin::lambert::{branch_of, matrix_w, scalar_w};
use acc_cutin::linalg::{self, c, CMat3, C64};
use proptest::prelude::*;

const E_INV: f64 = 0.36787944117144233;

fn residual(w: C64, y: C64) -> f64 {
    (w * w.exp() - y).norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn scalar_round_trip(k in -5i32..=5, r in 1e-6f64..1e3, arg in -std::f64::consts::PI..std::f64::consts::PI) {
        let y = C64::from_polar(r, arg);
        let w = scalar_w(k, y).unwrap();
        prop_assert!(residual(w, y) <= 1e-10 * r.max(1.0), "k = {} y = {} w = {}", k, y, w);
        prop_assert_eq!(branch_of(w, y), k);
    }

    #[test]
    fn conjugate_symmetry(k in 1i32..=5, r in 1e-3f64..1e3, arg in 0.01f64..3.1f64) {
        let y = C64::from_polar(r, arg);
        let a = scalar_w(k, y).unwrap();
        let b = scalar_w(-k, y.conj()).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-10 * a.norm().max(1.0));
    }
}

#[test]
fn branch_point_is_minus_one() {
    let y = c(-E_INV, 0.0);
    for k in [0, -1] {
        let w = scalar_w(k, y).unwrap();
        assert!((w - c(-1.0, 0.0)).norm() <= 1e-8, "k = {k}: {w}");
    }
}

#[test]
fn real_branches_on_the_real_axis() {
    // principal branch is real on [-1/e, ∞), the −1 branch on [-1/e, 0)
    for y in [-0.3, -0.1, 0.0, 0.5, 1.0, std::f64::consts::E, 10.0] {
        let w = scalar_w(0, c(y, 0.0)).unwrap();
        assert!(w.im.abs() < 1e-14 && w.re >= -1.0, "{y}: {w}");
    }
    assert!((scalar_w(0, c(1.0, 0.0)).unwrap().re - 0.5671432904097838).abs() < 1e-14);
    assert!((scalar_w(0, c(std::f64::consts::E, 0.0)).unwrap().re - 1.0).abs() < 1e-14);
    for y in [-0.3, -0.1, -1e-3] {
        let w = scalar_w(-1, c(y, 0.0)).unwrap();
        assert!(w.im.abs() < 1e-14 && w.re <= -1.0, "{y}: {w}");
    }
}

#[test]
fn zero_is_outside_the_non_principal_branches() {
    assert_eq!(scalar_w(0, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    for k in [-2, -1, 1, 3] {
        assert!(scalar_w(k, c(0.0, 0.0)).is_err(), "k = {k}");
    }
}

#[test]
fn non_finite_input_is_rejected() {
    assert!(scalar_w(0, c(f64::NAN, 0.0)).is_err());
    assert!(scalar_w(2, c(1.0, f64::INFINITY)).is_err());
}

fn diagonalizable(seed: u64) -> CMat3 {
    // V diag(λ) V⁻¹ with a well-conditioned V
    let mut s = seed;
    let mut next = move || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let mut v = CMat3::identity();
    for x in v.iter_mut() {
        *x += c(0.3 * next(), 0.3 * next());
    }
    let d = CMat3::from_diagonal(&nalgebra::Vector3::new(c(2.0 * next(), next()), c(next(), 0.5), c(-0.2, next())));
    v * d * v.try_inverse().unwrap()
}

#[test]
fn matrix_round_trip_on_every_branch() {
    for seed in 1..20 {
        let m = diagonalizable(seed);
        for k in -2..=2 {
            let w = matrix_w(k, &m).unwrap().value;
            let back = w * linalg::expm(&w);
            let err = linalg::frobenius(&(back - m));
            assert!(err <= 1e-9 * linalg::frobenius(&m).max(1.0), "seed {seed} k {k}: {err:e}");
        }
    }
}

#[test]
fn matrix_w_of_diagonal_is_elementwise() {
    let m = CMat3::from_diagonal(&nalgebra::Vector3::new(c(1.0, 0.0), c(-0.2, 0.3), c(4.0, -1.0)));
    for k in -1..=1 {
        let w = matrix_w(k, &m).unwrap().value;
        for i in 0..3 {
            let expect = scalar_w(k, m[(i, i)]).unwrap();
            assert!((w[(i, i)] - expect).norm() < 1e-12, "k {k} i {i}");
        }
    }
}

#[test]
fn rank_one_matrix_keeps_zero_eigenvalues_at_zero() {
    let u = nalgebra::Vector3::new(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
    let v = nalgebra::Vector3::new(c(0.2, 0.1), c(0.5, 0.0), c(-0.9, 0.3));
    let m = u * v.transpose();
    for k in [-1, 1, 2] {
        let w = matrix_w(k, &m).unwrap().value;
        let back = w * linalg::expm(&w);
        assert!(linalg::frobenius(&(back - m)) < 1e-10, "k = {k}");
    }
}

#[test]
fn defective_matrix_is_rejected() {
    let mut m = CMat3::zeros();
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(1.0, 0.0);
    m[(0, 1)] = c(1.0, 0.0);
    m[(2, 2)] = c(2.0, 0.0);
    assert!(matrix_w(0, &m).is_err());
}
