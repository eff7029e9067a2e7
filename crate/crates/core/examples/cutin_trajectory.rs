//! reference cut-in under full feedback for several sensing delays, plus the
//! high-risk case under worst-case braking. Writes one trajectory CSV per
//! run into the directory given as the first argument (default: a temp dir).

use acc_cutin::dde::ParamSet;
use acc_cutin::scenario::{min_gap, InitialState, Mode, ScenarioConfig, ScenarioRun};

fn main() -> acc_cutin::Result<()> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let p = ParamSet::REFERENCE;

    println!("full feedback, reference start");
    for theta in [0.0, 0.1, 0.2, 0.3] {
        let cfg = ScenarioConfig { theta, ..Default::default() };
        let run = ScenarioRun::new(&cfg, &p)?;
        let tr = run.sample()?;
        let g = min_gap(&tr);
        println!(
            "  θ = {theta:.1}: min gap {:7.3} m at t = {:5.2} s ({} engine)",
            g.value,
            g.time,
            run.engine()
        );
        tr.save(&out.join(format!("trajectory_ff_theta{theta:.1}.csv")))?;
    }

    println!("worst-case braking, high-risk start");
    for (theta, phi) in [(0.0, 0.0), (0.3, 0.0), (0.3, 0.3), (0.3, 1.0)] {
        let cfg = ScenarioConfig {
            theta,
            phi,
            mode: Mode::WorstCaseBraking,
            initial: InitialState::HIGH_RISK,
            ..Default::default()
        };
        let tr = ScenarioRun::new(&cfg, &p)?.sample()?;
        let g = min_gap(&tr);
        println!(
            "  θ = {theta:.1}, φ = {phi:.1}: min gap {:7.3} m{}",
            g.value,
            if g.collision { "  collision" } else { "" }
        );
    }
    Ok(())
}
