//! Small dense linear algebra for the 3-state ACC system.
//!
//! Everything here works on fixed 3×3 (and augmented 4×4) matrices. Eigenvalues
//! come from the complex Schur form; eigenvectors are taken from the SVD null
//! space of `M - λI` per eigenvalue cluster, which keeps repeated eigenvalues
//! with a full eigenbasis (rank-1 inputs) well defined.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat3 = Matrix3<C64>;
pub type CVec3 = Vector3<C64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;

/// Relative distance below which two eigenvalues are treated as one cluster.
const CLUSTER_TOL: f64 = 1e-8;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn complexify(m: &Mat3) -> CMat3 {
    m.map(|x| C64::new(x, 0.0))
}

pub fn complexify_vec(v: &Vec3) -> CVec3 {
    v.map(|x| C64::new(x, 0.0))
}

pub fn frobenius(m: &CMat3) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn expm(m: &CMat3) -> CMat3 {
    m.exp()
}

pub fn expm_real(m: &Mat3) -> Mat3 {
    m.exp()
}

/// Exact propagation of `x' = A x + g` over a step `h` with constant `g`,
/// using the exponential of the augmented matrix `[[A, g], [0, 0]]`.
pub fn propagate_affine(a: &Mat3, g: &Vec3, x0: &Vec3, h: f64) -> Vec3 {
    let mut aug = Matrix4::<f64>::zeros();
    aug.fixed_view_mut::<3, 3>(0, 0).copy_from(&(a * h));
    aug.fixed_view_mut::<3, 1>(0, 3).copy_from(&(g * h));
    let e = aug.exp();
    let z = e * Vector4::new(x0[0], x0[1], x0[2], 1.0);
    Vec3::new(z[0], z[1], z[2])
}

/// Bilinear (non-conjugating) cross product; `cross(a, b)` is orthogonal to
/// both arguments under the plain dot product.
pub fn cross(a: &CVec3, b: &CVec3) -> CVec3 {
    CVec3::new(
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )
}

/// Right null vector of a rank-2 matrix (`m v = 0`), from the best-conditioned
/// cross product of two rows.
pub fn right_null(m: &CMat3) -> CVec3 {
    let rows: [CVec3; 3] = [
        m.row(0).transpose(),
        m.row(1).transpose(),
        m.row(2).transpose(),
    ];
    best_cross(&rows)
}

/// Left null vector of a rank-2 matrix (`uᵀ m = 0`).
pub fn left_null(m: &CMat3) -> CVec3 {
    let cols: [CVec3; 3] = [
        m.column(0).into_owned(),
        m.column(1).into_owned(),
        m.column(2).into_owned(),
    ];
    best_cross(&cols)
}

fn best_cross(v: &[CVec3; 3]) -> CVec3 {
    let candidates = [cross(&v[0], &v[1]), cross(&v[0], &v[2]), cross(&v[1], &v[2])];
    let best = candidates
        .into_iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("three candidates");
    let n = best.norm();
    if n > 0.0 {
        best / C64::new(n, 0.0)
    } else {
        best
    }
}

/// Eigendecomposition of a 3×3 complex matrix.
#[derive(Debug, Clone)]
pub struct Eigen3 {
    pub values: [C64; 3],
    /// Unit-norm eigenvectors as columns.
    pub vectors: CMat3,
    /// 2-norm condition number of `vectors`.
    pub condition: f64,
}

pub fn eigenvalues(m: &CMat3) -> [C64; 3] {
    let schur = nalgebra::Schur::new(*m);
    let (_, t) = schur.unpack();
    [t[(0, 0)], t[(1, 1)], t[(2, 2)]]
}

pub fn eigenvalues_real(m: &Mat3) -> [C64; 3] {
    eigenvalues(&complexify(m))
}

pub fn eigen3(m: &CMat3) -> Result<Eigen3> {
    let values = eigenvalues(m);
    let scale = frobenius(m).max(1.0);

    // Group eigenvalues into clusters of numerically equal values.
    let mut cluster_of = [usize::MAX; 3];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..3 {
        if cluster_of[i] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![i];
        cluster_of[i] = id;
        for j in (i + 1)..3 {
            if cluster_of[j] == usize::MAX && (values[i] - values[j]).norm() <= CLUSTER_TOL * scale {
                cluster_of[j] = id;
                members.push(j);
            }
        }
        clusters.push(members);
    }

    let mut vectors = CMat3::zeros();
    let mut out_values = values;
    for members in &clusters {
        let mean = members.iter().map(|&i| values[i]).sum::<C64>() / C64::new(members.len() as f64, 0.0);
        let shifted = m - CMat3::identity() * mean;
        let svd = nalgebra::SVD::new(shifted, false, true);
        let v_t = svd.v_t.expect("requested V^H");
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        for (slot, &i) in members.iter().enumerate() {
            let row = order[slot];
            let v: CVec3 = v_t.row(row).transpose().map(|z| z.conj());
            vectors.set_column(i, &v);
            if members.len() > 1 {
                out_values[i] = mean;
            }
        }
    }

    let svd = nalgebra::SVD::new(vectors, false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };

    // A cluster that is really a Jordan block leaves the span non-invariant.
    let lambda = CMat3::from_diagonal(&CVec3::new(out_values[0], out_values[1], out_values[2]));
    let residual = frobenius(&(m * vectors - vectors * lambda));
    if residual > 1e-6 * scale {
        return Err(Error::NearDefective {
            condition: f64::INFINITY,
            threshold: crate::lambert::DEFECT_THRESHOLD,
        });
    }

    Ok(Eigen3 {
        values: out_values,
        vectors,
        condition,
    })
}

/// Solves `a x = b` by LU with partial pivoting for a small dense complex system.
pub fn solve_dense(a: &nalgebra::DMatrix<C64>, b: &nalgebra::DVector<C64>) -> Option<nalgebra::DVector<C64>> {
    a.clone().lu().solve(b)
}

/// 2-norm condition estimate of a dense complex matrix.
pub fn condition_dense(a: &nalgebra::DMatrix<C64>) -> f64 {
    let svd = nalgebra::SVD::new(a.clone(), false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_exp(m: &CMat3) -> CMat3 {
        // scaling and squaring around a long Taylor series, as an independent route
        let n = frobenius(m);
        let s = if n > 0.5 { (n / 0.5).log2().ceil() as i32 } else { 0 };
        let a = m / C64::new(2f64.powi(s), 0.0);
        let mut term = CMat3::identity();
        let mut sum = CMat3::identity();
        for k in 1..40 {
            term = term * a / C64::new(k as f64, 0.0);
            sum += term;
        }
        for _ in 0..s {
            sum = sum * sum;
        }
        sum
    }

    #[test]
    fn expm_matches_taylor_series() {
        let m = CMat3::new(
            c(0.3, 1.0), c(-2.0, 0.0), c(0.1, 0.0),
            c(0.0, 0.5), c(-1.0, 0.0), c(3.0, -1.0),
            c(0.5, 0.0), c(0.2, 0.0), c(-2.7, 4.0),
        );
        let a = expm(&m);
        let b = taylor_exp(&m);
        assert!(frobenius(&(a - b)) <= 1e-12 * frobenius(&b), "{}", frobenius(&(a - b)));
    }

    #[test]
    fn affine_propagation_matches_closed_form_for_double_integrator() {
        let a = Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0);
        let g = Vec3::new(0.0, 0.0, 0.0);
        let x0 = Vec3::new(1.0, 2.0, -0.5);
        let h = 3.0;
        let x = propagate_affine(&a, &g, &x0, h);
        let expect = Vec3::new(1.0 + 2.0 * h - 0.25 * h * h, 2.0 - 0.5 * h, -0.5);
        assert!((x - expect).norm() < 1e-12);

        // constant input on the last state
        let a2 = Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let g2 = Vec3::new(0.0, -2.0, 0.0);
        let x = propagate_affine(&a2, &g2, &Vec3::new(0.0, 5.0, 0.0), 2.0);
        assert!((x - Vec3::new(10.0 - 4.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rank_one_matrix_has_full_eigenbasis() {
        // only the third row is nonzero, like B·K·θ·Q
        let m = CMat3::new(
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.4, 0.1), c(1.2, -0.3), c(-0.9, 0.2),
        );
        let e = eigen3(&m).unwrap();
        let lambda = CMat3::from_diagonal(&CVec3::new(e.values[0], e.values[1], e.values[2]));
        assert!(frobenius(&(m * e.vectors - e.vectors * lambda)) < 1e-12);
        assert!(e.condition < 1e3);
        let nonzero = e.values.iter().filter(|v| v.norm() > 1e-12).count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn jordan_block_is_rejected() {
        let m = CMat3::new(
            c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0),
        );
        assert!(matches!(eigen3(&m), Err(Error::NearDefective { .. })));
    }

    #[test]
    fn null_vectors_annihilate() {
        let m = CMat3::new(
            c(1.0, 0.0), c(2.0, 1.0), c(3.0, 0.0),
            c(2.0, 0.0), c(4.0, 2.0), c(6.0, 0.0),
            c(0.0, 1.0), c(1.0, 0.0), c(-1.0, 0.0),
        );
        let v = right_null(&m);
        let u = left_null(&m);
        assert!((m * v).norm() < 1e-12);
        assert!((u.transpose() * m).norm() < 1e-12);
    }
}
