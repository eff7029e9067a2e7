//! The cut-in timeline: a follower tracks its leader, a vehicle cuts in
//! between them at `t = 0`, and from the switch time `max(t^l, θ − φ)` the
//! follower reacts to the new vehicle.

mod config;
mod engine;

use std::path::Path;

pub use config::{cutin_accel, CutInProfile, EnginePreference, InitialState, Mode, ScenarioConfig};
pub use engine::{Engine, Kin, ScenarioRun, SolverCache};

use crate::dde::ParamSet;
use crate::error::Result;

pub const TRAJECTORY_HEADER: [&str; 13] = [
    "t", "p_l", "v_l", "a_l", "p_c", "v_c", "a_c", "p_f", "v_f", "a_f", "ds_c", "dv_c", "gap",
];

/// Uniformly sampled scenario on the cut-in clock.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub leader: Vec<Kin>,
    pub cutin: Vec<Kin>,
    pub follower: Vec<Kin>,
    pub ds_c: Vec<f64>,
    pub dv_c: Vec<f64>,
    pub gap: Vec<f64>,
    pub engine: Engine,
    pub switch_time: f64,
    pub tl_start: f64,
}

impl Trajectory {
    fn with_capacity(n: usize, run: &ScenarioRun) -> Self {
        Self {
            t: Vec::with_capacity(n),
            leader: Vec::with_capacity(n),
            cutin: Vec::with_capacity(n),
            follower: Vec::with_capacity(n),
            ds_c: Vec::with_capacity(n),
            dv_c: Vec::with_capacity(n),
            gap: Vec::with_capacity(n),
            engine: run.engine(),
            switch_time: run.switch_time(),
            tl_start: run.config().tl_start,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Writes the trajectory with `t` on the plotting clock, whose zero is the
    /// start of the window (so the cut-in sits at `−t^l`).
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(TRAJECTORY_HEADER)?;
        for i in 0..self.len() {
            let (l, c, f) = (self.leader[i], self.cutin[i], self.follower[i]);
            let row = [
                self.t[i] - self.tl_start,
                l.p,
                l.v,
                l.a,
                c.p,
                c.v,
                c.a,
                f.p,
                f.v,
                f.a,
                self.ds_c[i],
                self.dv_c[i],
                self.gap[i],
            ];
            out.write_record(row.iter().map(|x| x.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::commands::write_atomic(path, |f| self.write_csv(f))
    }
}

/// Smallest gap from the cut-in instant on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinGap {
    pub value: f64,
    /// Cut-in clock.
    pub time: f64,
    /// The gap reached zero somewhere.
    pub collision: bool,
}

/// Minimum of the sampled gap over `t ≥ 0`, refined by a parabola through
/// the smallest sample and its neighbours.
pub fn min_gap(traj: &Trajectory) -> MinGap {
    let idx: Vec<usize> = (0..traj.len()).filter(|&i| traj.t[i] >= -1e-12).collect();
    let Some(&best) = idx.iter().min_by(|&&a, &&b| traj.gap[a].total_cmp(&traj.gap[b])) else {
        return MinGap { value: f64::NAN, time: f64::NAN, collision: false };
    };
    let mut value = traj.gap[best];
    let mut time = traj.t[best];
    if best > idx[0] && best + 1 < traj.len() {
        let (y0, y1, y2) = (traj.gap[best - 1], traj.gap[best], traj.gap[best + 1]);
        let curv = y0 - 2.0 * y1 + y2;
        if curv > 0.0 {
            let d = 0.5 * (y0 - y2) / curv;
            let refined = y1 - 0.25 * (y0 - y2) * d;
            if refined < value {
                value = refined;
                time += d * (traj.t[best + 1] - traj.t[best]);
            }
        }
    }
    MinGap { value, time, collision: value <= 0.0 }
}

/// Runs a scenario and samples it every `dt`.
pub fn simulate(cfg: &ScenarioConfig, p: &ParamSet) -> Result<Trajectory> {
    ScenarioRun::new(cfg, p)?.sample()
}

pub fn simulate_with(cfg: &ScenarioConfig, p: &ParamSet, cache: &SolverCache) -> Result<Trajectory> {
    ScenarioRun::with_cache(cfg, p, cache)?.sample()
}
