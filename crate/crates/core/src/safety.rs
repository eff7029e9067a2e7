//! Time-to-collision statistics over parameter populations and sweeps of the
//! initial cut-in conditions, delay and anticipation.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dde::ParamSet;
use crate::error::{Error, Result};
use crate::params::Population;
use crate::scenario::{InitialState, Mode, ScenarioConfig, ScenarioRun, SolverCache};

/// Bisection stops once the bracket is this narrow, s.
pub const TTC_TOL: f64 = 1e-4;
pub const GAMMA_STEP: f64 = 0.01;
pub const GAMMA_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TtcResult {
    /// Earliest collision time after the cut-in, `+∞` if none.
    pub t_c_star: f64,
    /// `1/t_c_star`, or 0 when there is no collision.
    pub inverse: f64,
    pub param_index: usize,
}

impl TtcResult {
    pub fn new(t_c_star: f64, param_index: usize) -> Self {
        let inverse = if t_c_star.is_finite() { 1.0 / t_c_star } else { 0.0 };
        Self { t_c_star, inverse, param_index }
    }

    pub fn collides(&self) -> bool {
        self.t_c_star.is_finite()
    }
}

/// The scenario configuration used for TTC unless told otherwise:
/// worst-case braking after the switch.
pub fn ttc_config(base: &ScenarioConfig) -> ScenarioConfig {
    ScenarioConfig { mode: Mode::WorstCaseBraking, ..base.clone() }
}

pub fn time_to_collision(cfg: &ScenarioConfig, p: &ParamSet) -> Result<TtcResult> {
    time_to_collision_with(cfg, p, 0, &SolverCache::new())
}

/// Scans the gap every `dt` from the cut-in to the horizon and bisects the
/// first sign change. Stops early once the cut-in profile is over and the
/// follower is behind equilibrium spacing and not closing in.
pub fn time_to_collision_with(cfg: &ScenarioConfig, p: &ParamSet, index: usize, cache: &SolverCache) -> Result<TtcResult> {
    let run = ScenarioRun::with_cache(cfg, p, cache)?;
    let g0 = run.gap(0.0)?;
    if g0 <= 0.0 {
        return Err(Error::invalid("gap", format!("gap at the cut-in must be positive, got {g0}")));
    }
    let n = (cfg.horizon / cfg.dt).ceil() as usize;
    let mut prev = 0.0;
    for i in 1..=n {
        let t = (i as f64 * cfg.dt).min(cfg.horizon);
        if run.gap(t)? <= 0.0 {
            let (mut lo, mut hi) = (prev, t);
            while hi - lo > TTC_TOL {
                let mid = 0.5 * (lo + hi);
                if run.gap(mid)? <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(TtcResult::new(hi, index));
        }
        if t > cfg.profile.t2 {
            let x = run.x_c(t)?;
            if x[0] >= 0.0 && x[1] >= 0.0 {
                break;
            }
        }
        prev = t;
    }
    Ok(TtcResult::new(f64::INFINITY, index))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SafetyAggregate {
    #[serde(rename = "M")]
    pub m: usize,
    pub expectation_inverse_ttc: f64,
    pub collision_probability: f64,
    /// `(γ, fraction of sets with inverse TTC ≤ γ)`; ends at 1.
    pub cdf: Vec<(f64, f64)>,
    pub inverses: Vec<f64>,
}

/// `0, 0.01, …, 1.0`.
pub fn default_gamma_grid() -> Vec<f64> {
    let n = (GAMMA_MAX / GAMMA_STEP).round() as usize;
    (0..=n).map(|i| i as f64 * GAMMA_STEP).collect()
}

pub fn aggregate_ttc(results: &[TtcResult], gammas: &[f64]) -> Result<SafetyAggregate> {
    if results.is_empty() {
        return Err(Error::invalid("population", "needs at least one TTC result"));
    }
    let m = results.len();
    let inverses: Vec<f64> = results.iter().map(|r| r.inverse).collect();
    let expectation_inverse_ttc = inverses.iter().sum::<f64>() / m as f64;
    let collision_probability = results.iter().filter(|r| r.collides()).count() as f64 / m as f64;
    let mut grid = gammas.to_vec();
    let top = inverses.iter().copied().fold(0.0, f64::max);
    // close the CDF at 1 when some inverse lies beyond the supplied grid
    if grid.last().is_none_or(|&g| g < top) {
        grid.push(top);
    }
    let cdf = grid
        .iter()
        .map(|&g| (g, inverses.iter().filter(|&&x| x <= g).count() as f64 / m as f64))
        .collect();
    Ok(SafetyAggregate {
        m,
        expectation_inverse_ttc,
        collision_probability,
        cdf,
        inverses,
    })
}

/// TTC for every set of the population; the first failure aborts.
pub fn population_ttc(pop: &Population, cfg: &ScenarioConfig, seed: u64, cache: &SolverCache) -> Result<Vec<TtcResult>> {
    pop.sets
        .par_iter()
        .enumerate()
        .map(|(i, (id, p))| {
            let mut rng = trial_rng(seed, 0, i as u64, 0);
            let c = ScenarioConfig {
                phi: anticipation_outcome(cfg.anticipation_success_prob, &mut rng, cfg.phi),
                ..cfg.clone()
            };
            time_to_collision_with(&c, p, i, cache).map_err(|e| Error::ParamSet {
                id: id.clone(),
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn aggregate(pop: &Population, cfg: &ScenarioConfig, seed: u64) -> Result<SafetyAggregate> {
    let ttc = population_ttc(pop, cfg, seed, &SolverCache::new())?;
    aggregate_ttc(&ttc, &default_gamma_grid())
}

/// Per-trial generator keyed by `(seed, cell, param, trial)`: every key gets
/// its own ChaCha stream, so results do not depend on evaluation order.
pub fn trial_rng(seed: u64, cell: u64, param: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell << 32 | (param & 0xffff_ffff));
    rng.set_word_pos(u128::from(trial) << 8);
    rng
}

/// Effective anticipation for one trial: `phi` with probability
/// `success_prob`, otherwise 0.
pub fn anticipation_outcome<R: Rng>(success_prob: f64, rng: &mut R, phi: f64) -> f64 {
    if success_prob >= 1.0 {
        return phi;
    }
    if rng.random::<f64>() < success_prob {
        phi
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    DsC,
    DvC,
    DsL,
    DvL,
    Theta,
    Phi,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::DsC => "ds_c",
            Axis::DvC => "dv_c",
            Axis::DsL => "ds_l",
            Axis::DvL => "dv_l",
            Axis::Theta => "theta",
            Axis::Phi => "phi",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ds_c" => Axis::DsC,
            "dv_c" => Axis::DvC,
            "ds_l" => Axis::DsL,
            "dv_l" => Axis::DvL,
            "theta" => Axis::Theta,
            "phi" => Axis::Phi,
            other => return Err(Error::invalid("axis", format!("unknown axis {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisRange {
    pub axis: Axis,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn new(axis: Axis, lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid(axis.name(), format!("step must be > 0, got {step}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(axis.name(), format!("need lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(Self { axis, lo, hi, step })
    }

    pub fn fixed(axis: Axis, value: f64) -> Self {
        Self { axis, lo: value, hi: value, step: 1.0 }
    }

    /// Both endpoints included; values are `lo + i·step` rounded to 1e-9 so
    /// coordinates print cleanly.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.lo + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub axes: Vec<AxisRange>,
}

impl SweepGrid {
    pub fn new(axes: Vec<AxisRange>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::invalid("grid", "needs at least one axis"));
        }
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].iter().any(|b| b.axis == a.axis) {
                return Err(Error::invalid("grid", format!("axis {} given twice", a.axis.name())));
            }
        }
        Ok(Self { axes })
    }

    /// Full factorial, first axis outermost.
    pub fn cells(&self) -> Vec<Vec<f64>> {
        let mut cells = vec![vec![]];
        for a in &self.axes {
            let vals = a.values();
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    vals.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push(*v);
                        c
                    })
                })
                .collect();
        }
        cells
    }
}

/// The template with the cell's coordinates applied, for one parameter set.
pub fn cell_config(template: &ScenarioConfig, axes: &[Axis], coords: &[f64], p: &ParamSet) -> ScenarioConfig {
    let mut cfg = template.clone();
    let touches_deviation = axes.iter().any(|a| matches!(a, Axis::DsC | Axis::DvC | Axis::DsL | Axis::DvL));
    if touches_deviation {
        cfg.initial = template.initial.with_deviations(p, template.tl_start, |d| {
            for (a, v) in axes.iter().zip(coords) {
                match a {
                    Axis::DsL => d[0] = *v,
                    Axis::DvL => d[1] = *v,
                    Axis::DsC => d[2] = *v,
                    Axis::DvC => d[3] = *v,
                    _ => {}
                }
            }
        });
    }
    for (a, v) in axes.iter().zip(coords) {
        match a {
            Axis::Theta => cfg.theta = *v,
            Axis::Phi => cfg.phi = *v,
            _ => {}
        }
    }
    cfg
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub coords: Vec<f64>,
    /// Over the sets that succeeded; `None` if none did.
    pub aggregate: Option<SafetyAggregate>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axes: Vec<Axis>,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, coords: &[f64]) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.coords.iter().zip(coords).all(|(a, b)| (a - b).abs() < 1e-9))
    }

    pub fn probability(&self, coords: &[f64]) -> Option<f64> {
        self.cell(coords)?.aggregate.as_ref().map(|a| a.collision_probability)
    }

    /// Axis coordinates, `M`, collision probability, mean inverse TTC, error
    /// count and the first error per cell.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = self.axes.iter().map(Axis::name).collect();
        header.extend(["M", "collision_probability", "expectation_inverse_ttc", "errors", "error"]);
        out.write_record(&header)?;
        for c in &self.cells {
            let mut rec: Vec<String> = c.coords.iter().map(|v| v.to_string()).collect();
            match &c.aggregate {
                Some(a) => rec.extend([
                    a.m.to_string(),
                    a.collision_probability.to_string(),
                    a.expectation_inverse_ttc.to_string(),
                ]),
                None => rec.extend(["0".into(), String::new(), String::new()]),
            }
            rec.push(c.errors.len().to_string());
            rec.push(c.errors.first().cloned().unwrap_or_default());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::commands::write_atomic(path, |f| self.write_csv(f))
    }
}

/// Evaluates every cell for every set in parallel. Anticipation outcomes are
/// drawn from [`trial_rng`] keyed by cell and set, so the table is identical
/// for any thread count.
pub fn sweep(grid: &SweepGrid, template: &ScenarioConfig, pop: &Population, seed: u64) -> Result<SweepResult> {
    template.validate()?;
    if pop.is_empty() {
        return Err(Error::invalid("population", "is empty"));
    }
    let axes: Vec<Axis> = grid.axes.iter().map(|a| a.axis).collect();
    let cells = grid.cells();
    let cache = SolverCache::new();
    let m = pop.len();
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..m).map(move |i| (c, i))).collect();
    let results: Vec<std::result::Result<TtcResult, String>> = jobs
        .par_iter()
        .map(|&(c, i)| {
            let (id, p) = &pop.sets[i];
            let mut cfg = cell_config(template, &axes, &cells[c], p);
            let mut rng = trial_rng(seed, c as u64, i as u64, 0);
            cfg.phi = anticipation_outcome(cfg.anticipation_success_prob, &mut rng, cfg.phi);
            time_to_collision_with(&cfg, p, i, &cache).map_err(|e| format!("{id}: {e}"))
        })
        .collect();
    let gammas = default_gamma_grid();
    let mut out = Vec::with_capacity(cells.len());
    for (c, coords) in cells.into_iter().enumerate() {
        let chunk = &results[c * m..(c + 1) * m];
        let ok: Vec<TtcResult> = chunk.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
        let errors: Vec<String> = chunk.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
        let aggregate = if ok.is_empty() { None } else { Some(aggregate_ttc(&ok, &gammas)?) };
        out.push(SweepCell { coords, aggregate, errors });
    }
    Ok(SweepResult { axes, cells: out })
}

/// Inverse-TTC distribution: per γ the CDF value and the number of sets whose
/// inverse TTC falls in `(γ − step, γ]` (exactly 0 for the first row).
pub fn write_distribution<W: std::io::Write>(agg: &SafetyAggregate, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["gamma", "cdf", "count"])?;
    let mut prev: Option<f64> = None;
    for &(g, c) in &agg.cdf {
        let count = agg
            .inverses
            .iter()
            .filter(|&&x| match prev {
                None => x <= g,
                Some(p) => x > p && x <= g,
            })
            .count();
        out.write_record([g.to_string(), c.to_string(), count.to_string()])?;
        prev = Some(g);
    }
    out.flush()?;
    Ok(())
}

/// The high-risk starting point used by the cut-in and leader sweeps.
pub fn high_risk_template() -> ScenarioConfig {
    ttc_config(&ScenarioConfig { initial: InitialState::HIGH_RISK, ..Default::default() })
}
