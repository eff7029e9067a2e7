//! Collision probability of a stable synthetic population over the cut-in
//! deviations and over delay × anticipation, with the heatmaps written as
//! CSV into the directory given as the first argument (default: temp dir).

use acc_cutin::commands::synthetic_stable;
use acc_cutin::safety::{high_risk_template, sweep, Axis, AxisRange, SweepGrid};

fn main() -> acc_cutin::Result<()> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let pop = synthetic_stable(20, 7)?;
    let template = high_risk_template();

    for theta in [0.0, 0.3] {
        let grid = SweepGrid::new(vec![
            AxisRange::fixed(Axis::Theta, theta),
            AxisRange::new(Axis::DsC, -5.0, 0.0, 1.0)?,
            AxisRange::new(Axis::DvC, -5.0, 0.0, 1.0)?,
        ])?;
        let r = sweep(&grid, &template, &pop, 1)?;
        println!("θ = {theta}: collision probability, rows Δs_c = -5..0, columns Δv_c = -5..0");
        for row in r.cells.chunks(6) {
            let line: Vec<String> = row
                .iter()
                .map(|c| format!("{:4.2}", c.aggregate.as_ref().map_or(f64::NAN, |a| a.collision_probability)))
                .collect();
            println!("  {}", line.join(" "));
        }
        r.save(&out.join(format!("heatmap_cutin_theta{theta}.csv")))?;
    }

    let grid = SweepGrid::new(vec![
        AxisRange::new(Axis::Theta, 0.0, 0.3, 0.1)?,
        AxisRange::new(Axis::Phi, 0.0, 1.0, 0.5)?,
    ])?;
    let template = acc_cutin::scenario::ScenarioConfig { anticipation_success_prob: 0.997, ..template };
    let r = sweep(&grid, &template, &pop, 1)?;
    for c in &r.cells {
        let a = c.aggregate.as_ref().expect("no failures");
        println!("θ = {:.1}, φ = {:.1}: P = {:.2}, E[1/t*] = {:.4}", c.coords[0], c.coords[1], a.collision_probability, a.expectation_inverse_ttc);
    }
    r.save(&out.join("heatmap_delay_anticipation.csv"))?;
    Ok(())
}
