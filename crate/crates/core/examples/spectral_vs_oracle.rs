//! Analytical DDE response against method-of-steps integration, for the
//! cut-in acceleration profile as input and a growing number of branches.

use std::sync::Arc;

use acc_cutin::dde::{build_system, integrate_oracle, ParamSet, SpectralSolution};
use acc_cutin::linalg::Vec3;
use acc_cutin::scenario::CutInProfile;

fn main() -> acc_cutin::Result<()> {
    let theta = 0.3;
    let sys = build_system(&ParamSet::REFERENCE)?;
    let forcing = CutInProfile::default().forcing();
    let history = |_t: f64| Vec3::new(2.0, -1.0, 0.0);
    let x0 = history(0.0);
    let oracle = integrate_oracle(&sys, theta, &history, x0, &|t| forcing.value(t), 10.0, 0.01)?;

    for n in [2, 5, 10] {
        let sol = Arc::new(SpectralSolution::solve(&sys, theta, n)?);
        let resp = sol.response(&history, x0, &[], &forcing);
        let mut worst: f64 = 0.0;
        for (t, x) in oracle.times.iter().zip(&oracle.states).skip(1) {
            worst = worst.max((resp.eval(*t)? - x).amax());
        }
        let (k, s) = sol.rightmost().expect("branches");
        println!(
            "N = {n:>2}: {} modes, rightmost root {s:.4} (branch {k}), max error {worst:.2e}",
            sol.modes.len()
        );
    }
    Ok(())
}
