//! Assembled analytical solution over branches `−N..N`.
//!
//! Every branch matrix `S_k` carries a few characteristic roots `s` of
//! `det Δ(s) = 0`, `Δ(s) = sI − A − BK·e^{−sθ}`. The response is built from the
//! distinct roots: each contributes `e^{st}` times its residue projector
//! `P_s = v uᵀ / (uᵀ Δ'(s) v)` applied to the initial function (free part) or
//! to `D` convolved with the input (forced part). The per-branch coefficients
//! `C_I_k` and `C_N_k` are the sums of those terms over the roots of branch k.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dde::branch::{solve_branches, BranchOptions, BranchSolution};
use crate::dde::forcing::PiecewiseConstant;
use crate::dde::system::SystemMatrices;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat3, CVec3, Vec3, C64};

pub const DEFAULT_BRANCHES: usize = 10;
/// Reconstruction tolerance for the collocation fit.
pub const TOL_C: f64 = 1e-6;
/// Largest imaginary residue accepted in a summed response.
pub const IM_TOL: f64 = 1e-4;

const ROOT_DEDUP: f64 = 1e-6;

/// 8-point Gauss–Legendre on [−1, 1].
const GL_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientMethod {
    /// Residue projection onto each characteristic root (default).
    Projection,
    /// Block collocation on the nodes `0, −θ/2N, …, −θ`; diagnostic only.
    Collocation,
}

#[derive(Debug, Clone)]
pub struct Mode {
    pub root: C64,
    pub projector: CMat3,
    /// Branch whose `S_k` produced the root.
    pub branch: i32,
    /// Added as the conjugate of a root that no branch produced directly.
    pub conjugate_closure: bool,
}

#[derive(Debug, Clone)]
pub struct SpectralSolution {
    pub theta: f64,
    pub n: usize,
    pub system: SystemMatrices,
    /// Ordered `−N..=N`.
    pub branches: Vec<BranchSolution>,
    pub modes: Vec<Mode>,
    /// `(Δ(0)⁻¹ + Σ P_s/s)·D`: static part of the truncated modes, added to
    /// the forced response.
    static_gain: Option<CVec3>,
}

fn delta(sys: &SystemMatrices, theta: f64, s: C64) -> CMat3 {
    let a = linalg::complexify(&sys.a);
    let bk = linalg::complexify(&sys.bk());
    CMat3::identity() * s - a - bk * (-s * theta).exp()
}

fn delta_prime(sys: &SystemMatrices, theta: f64, s: C64) -> CMat3 {
    let bk = linalg::complexify(&sys.bk());
    CMat3::identity() + bk * ((-s * theta).exp() * theta)
}

fn adjugate(m: &CMat3) -> CMat3 {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)];
    CMat3::new(
        cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2),
        -cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2),
        cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1),
    )
}

/// A few Newton steps on `det Δ(s)`, kept only if they stay on the same root.
fn polish_root(sys: &SystemMatrices, theta: f64, s0: C64) -> C64 {
    let mut s = s0;
    for _ in 0..6 {
        let d = delta(sys, theta, s);
        let f = d.determinant();
        let df = (adjugate(&d) * delta_prime(sys, theta, s)).trace();
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        if !(step.re.is_finite() && step.im.is_finite()) {
            break;
        }
        s -= step;
        if step.norm() <= 1e-15 * s.norm().max(1.0) {
            break;
        }
    }
    if (s - s0).norm() <= ROOT_DEDUP * s0.norm().max(1.0) {
        s
    } else {
        s0
    }
}

fn projector(sys: &SystemMatrices, theta: f64, s: C64) -> Result<CMat3> {
    let d = delta(sys, theta, s);
    let v = linalg::right_null(&d);
    let u = linalg::left_null(&d);
    let denom = (u.transpose() * delta_prime(sys, theta, s) * v)[(0, 0)];
    if denom.norm() <= 1e-10 {
        return Err(Error::RepeatedRoot { root: s });
    }
    Ok(v * u.transpose() / denom)
}

impl SpectralSolution {
    pub fn solve(sys: &SystemMatrices, theta: f64, n: usize) -> Result<Self> {
        Self::solve_with(sys, theta, n, &BranchOptions::default())
    }

    pub fn solve_with(sys: &SystemMatrices, theta: f64, n: usize, opts: &BranchOptions) -> Result<Self> {
        let branches = solve_branches(sys, theta, n, opts)?;
        let modes = collect_modes(sys, theta, &branches)?;

        let d0 = -(sys.a + sys.bk());
        let static_gain = d0.try_inverse().filter(|_| d0.determinant().abs() > 1e-12).map(|inv| {
            let mut g = linalg::complexify(&inv);
            for m in &modes {
                g += m.projector / m.root;
            }
            g * linalg::complexify_vec(&sys.d)
        });

        Ok(Self {
            theta,
            n,
            system: sys.clone(),
            branches,
            modes,
            static_gain,
        })
    }

    pub fn branch(&self, k: i32) -> Option<&BranchSolution> {
        self.branches.iter().find(|b| b.k == k)
    }

    /// Per-branch `C_N_k = Σ P_s` over the roots of branch k, ordered `−N..=N`.
    pub fn forced_coefficients(&self) -> Vec<(i32, CMat3)> {
        self.branches
            .iter()
            .map(|b| {
                let sum = self
                    .modes
                    .iter()
                    .filter(|m| m.branch == b.k)
                    .fold(CMat3::zeros(), |acc, m| acc + m.projector);
                (b.k, sum)
            })
            .collect()
    }

    /// Projection coefficients `c_s = P_s [x(0) + BK ∫_{−θ}^{0} e^{−s(τ+θ)} φ(τ) dτ]`.
    ///
    /// `kinks` lists points in `(−θ, 0)` where φ is not smooth; the quadrature
    /// splits there.
    pub fn free_coefficients(&self, history: &dyn Fn(f64) -> Vec3, x0: Vec3, kinks: &[f64]) -> FreeCoefficients {
        let theta = self.theta;
        let mut cuts: Vec<f64> = vec![-theta];
        cuts.extend(kinks.iter().copied().filter(|&k| k > -theta && k < 0.0));
        cuts.push(0.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

        let smax = self.modes.iter().map(|m| m.root.norm()).fold(1.0, f64::max);
        let mut nodes: Vec<(f64, f64, Vec3)> = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let panels = ((smax * (b - a)).ceil() as usize).max(4);
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + p as f64 * h;
                for (x, wt) in GL_X.iter().zip(GL_W.iter()) {
                    let tau = lo + 0.5 * h * (x + 1.0);
                    nodes.push((tau, 0.5 * h * wt, history(tau)));
                }
            }
        }

        let bk = linalg::complexify(&self.system.bk());
        let x0c = linalg::complexify_vec(&x0);
        let per_mode = self
            .modes
            .iter()
            .map(|m| {
                let mut acc = CVec3::zeros();
                for (tau, wt, phi) in &nodes {
                    let e = (-m.root * (tau + theta)).exp() * *wt;
                    acc += linalg::complexify_vec(phi) * e;
                }
                m.projector * (x0c + bk * acc)
            })
            .collect();
        FreeCoefficients { per_mode }
    }

    /// Block collocation fit of the free coefficients on the node grid
    /// `t_0 = 0` (value `x0`), `t_j = −jθ/2N` (value `φ(t_j)`).
    pub fn collocation_fit(&self, history: &dyn Fn(f64) -> Vec3, x0: Vec3) -> CollocationFit {
        let nb = self.branches.len();
        let nn = 2 * self.n + 1;
        let mut m = DMatrix::<C64>::zeros(3 * nn, 3 * nb);
        let mut rhs = DVector::<C64>::zeros(3 * nn);
        for j in 0..nn {
            let t = -(j as f64) * self.theta / (2 * self.n).max(1) as f64;
            let val = if j == 0 { x0 } else { history(t) };
            for r in 0..3 {
                rhs[3 * j + r] = c(val[r], 0.0);
            }
            for (col, b) in self.branches.iter().enumerate() {
                let e = linalg::expm(&(b.s * c(t, 0.0)));
                m.view_mut((3 * j, 3 * col), (3, 3)).copy_from(&e);
            }
        }
        let condition = linalg::condition_dense(&m);
        let least_squares = !(condition <= 1e10);
        let sol = if least_squares {
            None
        } else {
            linalg::solve_dense(&m, &rhs)
        };
        let sol = sol.unwrap_or_else(|| {
            nalgebra::SVD::new(m.clone(), true, true)
                .solve(&rhs, 1e-12)
                .expect("SVD requested with U and V")
        });
        let residual = (&m * &sol - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let coefficients = (0..nb)
            .map(|i| CVec3::new(sol[3 * i], sol[3 * i + 1], sol[3 * i + 2]))
            .collect();
        CollocationFit {
            coefficients,
            condition,
            residual,
            least_squares,
        }
    }

    /// Free plus forced response for history `φ` on `[−θ, 0]`, value `x0` at 0
    /// and input `forcing` on `(0, ∞)`.
    pub fn response(
        self: &Arc<Self>,
        history: &dyn Fn(f64) -> Vec3,
        x0: Vec3,
        kinks: &[f64],
        forcing: &PiecewiseConstant,
    ) -> DdeResponse {
        let free = self.free_coefficients(history, x0, kinks);
        DdeResponse {
            sol: Arc::clone(self),
            free: Free::Modal(free.per_mode),
            forcing: forcing.clipped_below(0.0),
        }
    }

    pub fn response_with(
        self: &Arc<Self>,
        method: CoefficientMethod,
        history: &dyn Fn(f64) -> Vec3,
        x0: Vec3,
        kinks: &[f64],
        forcing: &PiecewiseConstant,
    ) -> Result<DdeResponse> {
        match method {
            CoefficientMethod::Projection => Ok(self.response(history, x0, kinks, forcing)),
            CoefficientMethod::Collocation => {
                let fit = self.collocation_fit(history, x0);
                let scale = x0.amax().max(1.0);
                if !(fit.residual <= TOL_C * scale) {
                    return Err(Error::Collocation {
                        condition: fit.condition,
                        residual: fit.residual,
                    });
                }
                Ok(DdeResponse {
                    sol: Arc::clone(self),
                    free: Free::Branch(fit.coefficients),
                    forcing: forcing.clipped_below(0.0),
                })
            }
        }
    }

    /// Largest real part over the eigenvalues of the given branches.
    pub fn rightmost(&self) -> Option<(i32, C64)> {
        self.branches
            .iter()
            .map(|b| (b.k, b.rightmost()))
            .max_by(|a, b| a.1.re.total_cmp(&b.1.re))
    }
}

fn collect_modes(sys: &SystemMatrices, theta: f64, branches: &[BranchSolution]) -> Result<Vec<Mode>> {
    let mut order: Vec<&BranchSolution> = branches.iter().collect();
    order.sort_by_key(|b| (b.k.abs(), -b.k));
    let mut modes: Vec<Mode> = Vec::new();
    let known = |modes: &[Mode], s: C64| {
        modes
            .iter()
            .any(|m| (m.root - s).norm() <= ROOT_DEDUP * s.norm().max(1.0))
    };
    for b in order {
        for &ev in &b.eigenvalues {
            let s = polish_root(sys, theta, ev);
            if known(&modes, s) {
                continue;
            }
            let p = projector(sys, theta, s)?;
            modes.push(Mode {
                root: s,
                projector: p,
                branch: b.k,
                conjugate_closure: false,
            });
            let sc = s.conj();
            if s.im.abs() > 1e-9 && !known(&modes, sc) {
                modes.push(Mode {
                    root: sc,
                    projector: p.map(|z| z.conj()),
                    branch: -b.k,
                    conjugate_closure: true,
                });
            }
        }
    }
    Ok(modes)
}

#[derive(Debug, Clone)]
pub struct FreeCoefficients {
    /// Aligned with [`SpectralSolution::modes`].
    pub per_mode: Vec<CVec3>,
}

impl FreeCoefficients {
    /// Per-branch `C_I_k`, ordered like `sol.branches`.
    pub fn per_branch(&self, sol: &SpectralSolution) -> Vec<(i32, CVec3)> {
        sol.branches
            .iter()
            .map(|b| {
                let sum = sol
                    .modes
                    .iter()
                    .zip(&self.per_mode)
                    .filter(|(m, _)| m.branch == b.k)
                    .fold(CVec3::zeros(), |acc, (_, c)| acc + c);
                (b.k, sum)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct CollocationFit {
    /// Per-branch `C_I_k`, ordered like `sol.branches`.
    pub coefficients: Vec<CVec3>,
    pub condition: f64,
    /// Max-abs node reconstruction error.
    pub residual: f64,
    pub least_squares: bool,
}

#[derive(Debug, Clone)]
enum Free {
    Modal(Vec<CVec3>),
    Branch(Vec<CVec3>),
}

/// A response ready for evaluation at any `t ≥ 0`.
#[derive(Debug, Clone)]
pub struct DdeResponse {
    sol: Arc<SpectralSolution>,
    free: Free,
    forcing: PiecewiseConstant,
}

impl DdeResponse {
    pub fn solution(&self) -> &SpectralSolution {
        &self.sol
    }

    pub fn eval_complex(&self, t: f64) -> CVec3 {
        let sol = &*self.sol;
        let mut x = match &self.free {
            Free::Modal(cs) => sol
                .modes
                .iter()
                .zip(cs)
                .fold(CVec3::zeros(), |acc, (m, cv)| acc + cv * (m.root * t).exp()),
            Free::Branch(cs) => sol
                .branches
                .iter()
                .zip(cs)
                .fold(CVec3::zeros(), |acc, (b, cv)| acc + linalg::expm(&(b.s * c(t, 0.0))) * cv),
        };
        if !self.forcing.is_zero() && t > 0.0 {
            let d = linalg::complexify_vec(&sol.system.d);
            for m in &sol.modes {
                let mut g = c(0.0, 0.0);
                for p in self.forcing.pieces() {
                    let lo = p.lo.max(0.0);
                    let hi = p.hi.min(t);
                    if hi <= lo {
                        continue;
                    }
                    g += (((m.root * (t - lo)).exp() - (m.root * (t - hi)).exp()) / m.root) * p.value;
                }
                if g != c(0.0, 0.0) {
                    x += m.projector * d * g;
                }
            }
            if let Some(gain) = &sol.static_gain {
                x += gain * c(self.forcing.value(t), 0.0);
            }
        }
        x
    }

    /// Real state at `t`; fails if the imaginary residue exceeds [`IM_TOL`].
    pub fn eval(&self, t: f64) -> Result<Vec3> {
        let x = self.eval_complex(t);
        let residue = x.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if !(residue <= IM_TOL) {
            return Err(Error::ImaginaryResidue {
                residue,
                tolerance: IM_TOL,
                t,
            });
        }
        Ok(x.map(|z| z.re))
    }
}

/// Evaluates `resp` at `t`.
pub fn eval_response(resp: &DdeResponse, t: f64) -> Result<Vec3> {
    resp.eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dde::system::{build_system, ParamSet};

    fn reference(theta: f64, n: usize) -> Arc<SpectralSolution> {
        let sys = build_system(&ParamSet::REFERENCE).unwrap();
        Arc::new(SpectralSolution::solve(&sys, theta, n).unwrap())
    }

    #[test]
    fn roots_are_closed_under_conjugation() {
        let sol = reference(0.3, 3);
        for m in &sol.modes {
            let has_conj = sol
                .modes
                .iter()
                .any(|o| (o.root - m.root.conj()).norm() < 1e-6 * m.root.norm().max(1.0));
            assert!(has_conj, "{}", m.root);
            let d = delta(&sol.system, sol.theta, m.root).determinant();
            assert!(d.norm() < 1e-8 * m.root.norm().powi(3).max(1.0), "{} {}", m.root, d);
        }
    }

    #[test]
    fn zero_history_gives_zero_coefficients() {
        let sol = reference(0.3, 2);
        let free = sol.free_coefficients(&|_| Vec3::zeros(), Vec3::zeros(), &[]);
        assert!(free.per_mode.iter().all(|c| c.norm() == 0.0));
        let resp = sol.response(&|_| Vec3::zeros(), Vec3::zeros(), &[], &PiecewiseConstant::zero());
        for t in [0.0, 0.7, 3.0] {
            assert_eq!(resp.eval(t).unwrap(), Vec3::zeros());
        }
    }

    #[test]
    fn per_branch_sums_cover_every_mode() {
        let sol = reference(0.3, 2);
        let free = sol.free_coefficients(&|_| Vec3::new(1.0, 0.5, 0.0), Vec3::new(1.0, 0.5, 0.0), &[]);
        let total_modes: CVec3 = free.per_mode.iter().sum();
        let total_branches: CVec3 = free.per_branch(&sol).iter().map(|(_, c)| c).sum();
        assert!((total_modes - total_branches).norm() < 1e-12);
    }

    #[test]
    fn zero_forcing_leaves_only_the_free_response() {
        let sol = reference(0.2, 2);
        let h = |_t: f64| Vec3::new(0.5, -0.2, 0.1);
        let a = sol.response(&h, h(0.0), &[], &PiecewiseConstant::zero());
        let b = sol.response(&h, h(0.0), &[], &PiecewiseConstant::new([]));
        for t in [0.1, 1.0, 4.0] {
            assert_eq!(a.eval_complex(t), b.eval_complex(t));
        }
    }
}
