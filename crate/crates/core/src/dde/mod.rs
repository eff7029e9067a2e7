//! Delayed ACC dynamics `ẋ = A x + BK x(t − θ) + D a(t)`: system matrices,
//! Lambert-W branch solutions, the assembled analytical response and a
//! time-stepping reference integrator.

pub mod branch;
pub mod forcing;
pub mod oracle;
pub mod spectral;
pub mod system;

pub use branch::{
    characteristic_residual, scalar_branch_root, solve_branch, solve_branch_with, solve_branches, BranchOptions,
    BranchSolution,
};
pub use forcing::{Piece, PiecewiseConstant};
pub use oracle::{integrate_oracle, Sampled};
pub use spectral::{
    eval_response, CoefficientMethod, CollocationFit, DdeResponse, FreeCoefficients, Mode, SpectralSolution,
    DEFAULT_BRANCHES, IM_TOL, TOL_C,
};
pub use system::{build_system, ParamSet, SystemMatrices};
