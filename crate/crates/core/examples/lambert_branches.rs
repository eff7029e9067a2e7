//! Scalar Lambert W on several branches, the two real branches meeting at
//! −1/e, and a matrix W on the rank-one feedback matrix of the reference set.

use acc_cutin::dde::{build_system, ParamSet};
use acc_cutin::lambert::{matrix_w, scalar_w};
use acc_cutin::linalg::{c, complexify};

fn main() -> acc_cutin::Result<()> {
    let e_inv = -(-1.0f64).exp();
    println!("w_0(-1/e) = {}, w_-1(-1/e) = {}", scalar_w(0, c(e_inv, 0.0))?, scalar_w(-1, c(e_inv, 0.0))?);

    println!("{:>8} {:>4} {:>24} {:>10}", "y", "k", "w_k(y)", "|we^w-y|");
    for y in [c(-0.2, 0.0), c(1.0, 0.0), c(-3.0, 2.0), c(250.0, -40.0)] {
        for k in -2..=2 {
            let w = scalar_w(k, y)?;
            let back = (w * w.exp() - y).norm();
            println!("{:>8.2} {k:>4} {:>24.6} {back:>10.1e}", y.re, w);
        }
    }

    let sys = build_system(&ParamSet::REFERENCE)?;
    let m = complexify(&(sys.bk() * 0.3));
    for k in [0, 1] {
        let w = matrix_w(k, &m)?;
        println!("W_{k}(BKθ): eigenvalues {:.4} {:.4} {:.4}", w.eigenvalues[0], w.eigenvalues[1], w.eigenvalues[2]);
    }
    Ok(())
}
