//! Per-branch solution of `W_k(BKθQ)·e^{W_k(BKθQ) + Aθ} = BKθ` for `Q_k`,
//! and the branch matrix `S_k = W_k(BKθQ_k)/θ + A`.

use nalgebra::{DMatrix, DVector};

use crate::dde::system::SystemMatrices;
use crate::error::{Error, Result};
use crate::lambert;
use crate::linalg::{self, c, CMat3, C64};

#[derive(Debug, Clone)]
pub struct BranchOptions {
    /// Acceptance tolerance on `‖F(Q)‖_F / max(1, ‖BKθ‖_F)`.
    pub tol_q: f64,
    pub max_iter: usize,
    /// Starting point; identity when `None`.
    pub q0: Option<CMat3>,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            tol_q: 1e-9,
            max_iter: 100,
            q0: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchSolution {
    pub k: i32,
    pub q: CMat3,
    pub s: CMat3,
    /// `‖W·e^{W+Aθ} − BKθ‖_F`.
    pub residual: f64,
    /// `‖S − A − BK·e^{−Sθ}‖_F`.
    pub characteristic_residual: f64,
    pub eigenvalues: [C64; 3],
    pub iterations: usize,
}

impl BranchSolution {
    pub fn rightmost(&self) -> C64 {
        *self
            .eigenvalues
            .iter()
            .max_by(|a, b| a.re.total_cmp(&b.re))
            .expect("three eigenvalues")
    }
}

struct Problem<'a> {
    k: i32,
    a_theta: CMat3,
    bk_theta: CMat3,
    sys: &'a SystemMatrices,
    theta: f64,
}

impl Problem<'_> {
    fn w(&self, q: &CMat3) -> Result<CMat3> {
        Ok(lambert::matrix_w(self.k, &(self.bk_theta * q))?.value)
    }

    fn residual(&self, q: &CMat3) -> Result<CMat3> {
        let w = self.w(q)?;
        Ok(w * linalg::expm(&(w + self.a_theta)) - self.bk_theta)
    }

    fn branch_matrix(&self, q: &CMat3) -> Result<CMat3> {
        Ok(self.w(q)? / c(self.theta, 0.0) + linalg::complexify(&self.sys.a))
    }
}

fn flatten(m: &CMat3) -> DVector<C64> {
    DVector::from_iterator(9, m.iter().copied())
}

fn unflatten(v: &DVector<C64>) -> CMat3 {
    CMat3::from_iterator(v.iter().copied())
}

pub fn characteristic_residual(sys: &SystemMatrices, theta: f64, s: &CMat3) -> f64 {
    let a = linalg::complexify(&sys.a);
    let bk = linalg::complexify(&sys.bk());
    linalg::frobenius(&(s - a - bk * linalg::expm(&(-s * c(theta, 0.0)))))
}

/// Damped Gauss–Newton (Levenberg–Marquardt) on the nine complex entries of Q.
///
/// Only the row `KθQ` influences the residual, so the Jacobian has rank three
/// and the damping term is what selects a step.
fn levenberg_marquardt(p: &Problem, q0: CMat3, opts: &BranchOptions) -> Result<(CMat3, f64, usize)> {
    let scale = linalg::frobenius(&p.bk_theta).max(1.0);
    let accept = opts.tol_q * scale;
    // keep polishing well past the acceptance tolerance; the characteristic
    // residual is the residual amplified by ‖e^{−Sθ}‖/θ
    let target = 1e-14 * scale;

    let mut q = q0;
    let mut f = flatten(&p.residual(&q)?);
    let mut r = f.norm();
    let mut mu = 1e-3;
    let mut iters = 0;
    while iters < opts.max_iter && r > target {
        iters += 1;
        let mut jac = DMatrix::<C64>::zeros(9, 9);
        for j in 0..9 {
            let h = 1e-7 * q[j].norm().max(1.0);
            let mut qh = q;
            qh[j] += c(h, 0.0);
            let fh = flatten(&p.residual(&qh)?);
            jac.set_column(j, &((fh - &f) / c(h, 0.0)));
        }
        let jh = jac.adjoint();
        let jtj = &jh * &jac;
        let rhs = -(&jh * &f);
        let mut improved = false;
        while mu <= 1e12 {
            let lhs = &jtj + DMatrix::<C64>::identity(9, 9) * c(mu, 0.0);
            let Some(delta) = lhs.lu().solve(&rhs) else {
                mu *= 10.0;
                continue;
            };
            let qn = q + unflatten(&delta);
            match p.residual(&qn) {
                Ok(fn_) => {
                    let fnv = flatten(&fn_);
                    let rn = fnv.norm();
                    if rn < r {
                        q = qn;
                        f = fnv;
                        r = rn;
                        mu = (mu / 10.0).max(1e-15);
                        improved = true;
                        break;
                    }
                }
                // a trial point can land on a near-defective matrix; shrink the step
                Err(Error::NearDefective { .. }) | Err(Error::LambertNoConvergence { .. }) => {}
                Err(e) => return Err(e),
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if r <= accept {
        Ok((q, r, iters))
    } else {
        Err(Error::BranchSolve {
            branch: p.k,
            residual: r,
        })
    }
}

fn finish(p: &Problem, q: CMat3, residual: f64, iterations: usize) -> Result<BranchSolution> {
    let s = p.branch_matrix(&q)?;
    let characteristic_residual = characteristic_residual(p.sys, p.theta, &s);
    let eigenvalues = linalg::eigenvalues(&s);
    Ok(BranchSolution {
        k: p.k,
        q,
        s,
        residual,
        characteristic_residual,
        eigenvalues,
        iterations,
    })
}

fn problem(sys: &SystemMatrices, theta: f64, k: i32) -> Result<Problem<'_>> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", format!("branch solve needs θ > 0, got {theta}")));
    }
    Ok(Problem {
        k,
        a_theta: linalg::complexify(&(sys.a * theta)),
        bk_theta: linalg::complexify(&(sys.bk() * theta)),
        sys,
        theta,
    })
}

pub fn solve_branch(sys: &SystemMatrices, theta: f64, k: i32) -> Result<BranchSolution> {
    solve_branch_with(sys, theta, k, &BranchOptions::default())
}

pub fn solve_branch_with(sys: &SystemMatrices, theta: f64, k: i32, opts: &BranchOptions) -> Result<BranchSolution> {
    let p = problem(sys, theta, k)?;
    let q0 = opts.q0.unwrap_or_else(CMat3::identity);
    let (q, r, it) = match levenberg_marquardt(&p, q0, opts) {
        Ok(found) => found,
        Err(e @ Error::BranchSolve { .. }) => continuation(sys, theta, k, opts).ok_or_else(|| Error::Branch {
            branch: k,
            source: Box::new(e),
        })?,
        Err(e) => {
            return Err(Error::Branch {
                branch: k,
                source: Box::new(e),
            })
        }
    };
    finish(&p, q, r, it)
}

/// Walks θ up from a small fraction of the target, starting each solve from
/// the previous `Q`. Used only when the direct solve stalls.
fn continuation(sys: &SystemMatrices, theta: f64, k: i32, opts: &BranchOptions) -> Option<(CMat3, f64, usize)> {
    for steps in [8usize, 32] {
        let mut q = opts.q0.unwrap_or_else(CMat3::identity);
        let mut total = 0;
        let mut ok = true;
        for j in 1..=steps {
            let p = problem(sys, theta * j as f64 / steps as f64, k).ok()?;
            match levenberg_marquardt(&p, q, opts) {
                Ok((qn, r, it)) => {
                    q = qn;
                    total += it;
                    if j == steps {
                        log::debug!("branch {k}: solved by continuation in θ over {steps} steps");
                        return Some((q, r, total));
                    }
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        debug_assert!(!ok);
    }
    None
}

/// Solves branches `-n..=n`. Branches `k > 0` start from `Q = I` and fall back
/// to the neighbouring branch's `Q`; branches `k < 0` are the complex
/// conjugates of `k > 0` (the system is real), checked against their own
/// defining equation and re-solved if the check fails.
pub fn solve_branches(sys: &SystemMatrices, theta: f64, n: usize, opts: &BranchOptions) -> Result<Vec<BranchSolution>> {
    let n = n as i32;
    let mut positive: Vec<BranchSolution> = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        let first = solve_branch_with(sys, theta, k, opts);
        let sol = match (first, positive.last()) {
            (Ok(s), _) => s,
            (Err(e), Some(prev)) => {
                let retry = BranchOptions {
                    q0: Some(prev.q),
                    ..opts.clone()
                };
                solve_branch_with(sys, theta, k, &retry).map_err(|_| e)?
            }
            (Err(e), None) => return Err(e),
        };
        positive.push(sol);
    }

    let mut out = Vec::with_capacity(2 * n as usize + 1);
    for k in (1..=n).rev() {
        let pos = &positive[k as usize];
        let p = problem(sys, theta, -k)?;
        let q = pos.q.map(|z| z.conj());
        let scale = linalg::frobenius(&p.bk_theta).max(1.0);
        let conj_ok = p
            .residual(&q)
            .map(|f| linalg::frobenius(&f))
            .ok()
            .filter(|r| *r <= opts.tol_q * scale);
        let sol = match conj_ok {
            Some(r) => finish(&p, q, r, 0)?,
            None => {
                log::debug!("branch {}: conjugate of branch {k} rejected, solving directly", -k);
                let retry = BranchOptions {
                    q0: Some(q),
                    ..opts.clone()
                };
                solve_branch_with(sys, theta, -k, &retry)?
            }
        };
        out.push(sol);
    }
    out.extend(positive);
    Ok(out)
}

/// Branch-`k` root of the scalar characteristic equation `s = a + b·e^{−sθ}`.
pub fn scalar_branch_root(a: f64, b: f64, theta: f64, k: i32) -> Result<C64> {
    if !(theta > 0.0) {
        return Err(Error::invalid("theta", "must be > 0"));
    }
    let y = c(b * theta * (-a * theta).exp(), 0.0);
    Ok(lambert::scalar_w(k, y)? / theta + a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dde::system::{build_system, ParamSet};

    fn newton_scalar(a: f64, b: f64, theta: f64, mut s: C64) -> C64 {
        for _ in 0..100 {
            let e = (-s * theta).exp();
            let f = s - a - e * b;
            let df = c(1.0, 0.0) + e * (b * theta);
            s -= f / df;
        }
        s
    }

    #[test]
    fn scalar_analog_matches_newton() {
        let (a, b, theta) = (-0.5, -1.2, 0.4);
        for k in -3..=3 {
            let s = scalar_branch_root(a, b, theta, k).unwrap();
            let root = newton_scalar(a, b, theta, s + c(1e-3, -1e-3));
            assert!((s - root).norm() < 1e-10, "k = {k}: {s} vs {root}");
            assert!((s - a - (-s * theta).exp() * b).norm() < 1e-10);
        }
    }

    #[test]
    fn reference_branches_satisfy_characteristic_equation() {
        let sys = build_system(&ParamSet::REFERENCE).unwrap();
        let sols = solve_branches(&sys, 0.3, 2, &BranchOptions::default()).unwrap();
        assert_eq!(sols.len(), 5);
        let bound = 1e-8 * linalg::frobenius(&linalg::complexify(&sys.a)).max(1.0);
        for s in &sols {
            assert!(s.characteristic_residual <= bound, "k = {}: {}", s.k, s.characteristic_residual);
        }
        for (neg, pos) in sols[..2].iter().zip(sols[3..].iter().rev()) {
            assert_eq!(neg.k, -pos.k);
            assert!(linalg::frobenius(&(neg.s - pos.s.map(|z| z.conj()))) < 1e-12);
        }
    }

    #[test]
    fn small_delay_approaches_delay_free_eigenvalues() {
        let sys = build_system(&ParamSet::REFERENCE).unwrap();
        let sol = solve_branch(&sys, 1e-4, 0).unwrap();
        let target = linalg::eigenvalues_real(&sys.a_plus_bk());
        for t in target {
            let d = sol
                .eigenvalues
                .iter()
                .map(|e| (e - t).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-2, "{t} not matched by {:?}", sol.eigenvalues);
        }
    }

    #[test]
    fn zero_delay_is_rejected() {
        let sys = build_system(&ParamSet::REFERENCE).unwrap();
        assert!(solve_branch(&sys, 0.0, 0).is_err());
    }
}
