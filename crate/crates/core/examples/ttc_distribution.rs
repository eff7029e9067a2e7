//! Inverse time-to-collision over a population for the high-risk cut-in,
//! without and with sensing delay.

use acc_cutin::commands::synthetic_stable;
use acc_cutin::safety::{aggregate, high_risk_template, write_distribution};
use acc_cutin::scenario::ScenarioConfig;

fn main() -> acc_cutin::Result<()> {
    let pop = synthetic_stable(30, 3)?;
    for theta in [0.0, 0.3] {
        let cfg = ScenarioConfig { theta, ..high_risk_template() };
        let agg = aggregate(&pop, &cfg, 1)?;
        let above: usize = agg.inverses.iter().filter(|x| **x > 0.0).count();
        println!(
            "θ = {theta}: M = {}, E[1/t*] = {:.4} 1/s, P(collision) = {:.2}, {above} sets with 1/t* > 0, C(0.2) = {:.2}",
            agg.m, agg.expectation_inverse_ttc, agg.collision_probability, agg.cdf[20].1
        );
        if theta > 0.0 {
            let mut buf = Vec::new();
            write_distribution(&agg, &mut buf)?;
            let text = String::from_utf8(buf).expect("utf8");
            for line in text.lines().filter(|l| !l.ends_with(",0")) {
                println!("  {line}");
            }
        }
    }
    Ok(())
}
