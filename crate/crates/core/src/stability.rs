//! Asymptotic stability of parameter sets, with and without sensing delay.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::dde::{build_system, integrate_oracle, solve_branches, BranchOptions, ParamSet};
use crate::error::{Error, Result};
use crate::linalg::{self, Vec3, C64};
use crate::params::Population;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    NoDelayEig,
    LambertBranches,
    OracleGrowth,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::NoDelayEig => "no_delay_eig",
            Method::LambertBranches => "lambert_branches",
            Method::OracleGrowth => "oracle_growth",
        })
    }
}

#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub rightmost_real_part: f64,
    /// `(branch, eigenvalue)` pairs attaining the rightmost real part; the
    /// branch is 0 for the delay-free and oracle methods.
    pub witnesses: Vec<(i32, C64)>,
    pub method: Method,
}

fn verdict(candidates: Vec<(i32, C64)>, margin: f64, method: Method) -> StabilityVerdict {
    let rightmost = candidates
        .iter()
        .map(|(_, e)| e.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * rightmost.abs().max(1.0);
    let witnesses = candidates
        .into_iter()
        .filter(|(_, e)| e.re >= rightmost - tol)
        .collect();
    StabilityVerdict {
        stable: rightmost < -margin,
        rightmost_real_part: rightmost,
        witnesses,
        method,
    }
}

/// Eigenvalues of `A + BK`.
pub fn stable_no_delay(p: &ParamSet) -> Result<StabilityVerdict> {
    stable_no_delay_with(p, 0.0)
}

pub fn stable_no_delay_with(p: &ParamSet, margin: f64) -> Result<StabilityVerdict> {
    let sys = build_system(p)?;
    let ev = linalg::eigenvalues_real(&sys.a_plus_bk());
    Ok(verdict(ev.iter().map(|e| (0, *e)).collect(), margin, Method::NoDelayEig))
}

/// Rightmost eigenvalue over `S_0`, `S_1`, `S_{−1}`.
pub fn stable_with_delay(p: &ParamSet, theta: f64) -> Result<StabilityVerdict> {
    stable_with_delay_with(p, theta, 0.0)
}

pub fn stable_with_delay_with(p: &ParamSet, theta: f64, margin: f64) -> Result<StabilityVerdict> {
    if !(theta > 0.0) {
        return Err(Error::invalid("theta", format!("delayed verdict needs θ > 0, got {theta}")));
    }
    let sys = build_system(p)?;
    let branches = solve_branches(&sys, theta, 1, &BranchOptions::default())?;
    let candidates = branches
        .iter()
        .flat_map(|b| b.eigenvalues.iter().map(move |e| (b.k, *e)))
        .collect();
    Ok(verdict(candidates, margin, Method::LambertBranches))
}

/// Dispatches on θ: the delay-free test at θ = 0, the branch test otherwise.
pub fn classify(p: &ParamSet, theta: f64) -> Result<StabilityVerdict> {
    if theta == 0.0 {
        stable_no_delay(p)
    } else {
        stable_with_delay(p, theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, Copy)]
pub struct GrowthEstimate {
    pub class: Growth,
    /// Fitted exponential rate of `‖x‖`, 1/s.
    pub rate: f64,
}

pub const GROWTH_HORIZON: f64 = 200.0;
pub const GROWTH_THRESHOLD: f64 = 1e-3;

/// Integrates a unit spacing perturbation for 200 s and fits the growth rate
/// of the log-envelope over the last 100 s (four 25 s windows).
pub fn oracle_growth(p: &ParamSet, theta: f64) -> Result<GrowthEstimate> {
    let sys = build_system(p)?;
    let x0 = Vec3::new(1.0, 0.0, 0.0);
    let dt = 0.01;
    let out = integrate_oracle(&sys, theta, &|_| x0, x0, &|_| 0.0, GROWTH_HORIZON, dt)?;
    let mut peaks = Vec::with_capacity(4);
    for w in 0..4 {
        let lo = 100.0 + 25.0 * w as f64;
        let hi = lo + 25.0;
        let peak = out
            .times
            .iter()
            .zip(&out.states)
            .filter(|(t, _)| **t >= lo - 1e-9 && **t <= hi + 1e-9)
            .map(|(_, x)| x.norm())
            .fold(0.0, f64::max);
        peaks.push((lo + 12.5, peak));
    }
    if peaks.iter().any(|(_, p)| !p.is_finite()) {
        return Ok(GrowthEstimate {
            class: Growth::Unstable,
            rate: f64::INFINITY,
        });
    }
    if peaks.iter().any(|(_, p)| *p < 1e-280) {
        return Ok(GrowthEstimate {
            class: Growth::Stable,
            rate: f64::NEG_INFINITY,
        });
    }
    // least-squares slope of log peak against window centre
    let n = peaks.len() as f64;
    let mt = peaks.iter().map(|(t, _)| t).sum::<f64>() / n;
    let my = peaks.iter().map(|(_, p)| p.ln()).sum::<f64>() / n;
    let num: f64 = peaks.iter().map(|(t, p)| (t - mt) * (p.ln() - my)).sum();
    let den: f64 = peaks.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    let rate = num / den;
    let class = if rate > GROWTH_THRESHOLD {
        Growth::Unstable
    } else if rate < -GROWTH_THRESHOLD {
        Growth::Stable
    } else {
        Growth::Marginal
    };
    Ok(GrowthEstimate { class, rate })
}

#[derive(Debug, Clone)]
pub struct ScanRow {
    pub id: String,
    pub params: ParamSet,
    pub outcome: std::result::Result<StabilityVerdict, String>,
}

#[derive(Debug, Clone)]
pub struct StabilityScan {
    pub theta: f64,
    pub rows: Vec<ScanRow>,
}

impl StabilityScan {
    pub fn stable(&self) -> impl Iterator<Item = &ScanRow> {
        self.rows.iter().filter(|r| matches!(&r.outcome, Ok(v) if v.stable))
    }

    pub fn unstable(&self) -> impl Iterator<Item = &ScanRow> {
        self.rows.iter().filter(|r| matches!(&r.outcome, Ok(v) if !v.stable))
    }

    pub fn failed(&self) -> impl Iterator<Item = &ScanRow> {
        self.rows.iter().filter(|r| r.outcome.is_err())
    }

    /// `(stable, unstable, failed)`.
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.stable().count(), self.unstable().count(), self.failed().count())
    }

    /// One row per set: id, parameters, verdict, rightmost real part, method, error.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["id", "ks", "kv", "ka", "tau", "l", "TL", "verdict", "rightmost_re", "method", "error"])?;
        for r in &self.rows {
            let p = &r.params;
            let mut rec = vec![
                r.id.clone(),
                p.ks.to_string(),
                p.kv.to_string(),
                p.ka.to_string(),
                p.tau.to_string(),
                p.l.to_string(),
                p.tl.to_string(),
            ];
            match &r.outcome {
                Ok(v) => rec.extend([
                    if v.stable { "stable" } else { "unstable" }.to_string(),
                    v.rightmost_real_part.to_string(),
                    v.method.to_string(),
                    String::new(),
                ]),
                Err(e) => rec.extend(["failed".to_string(), String::new(), String::new(), e.clone()]),
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::commands::write_atomic(path, |f| self.write_csv(f))
    }
}

/// Classifies every set of the population at θ in parallel; failures are
/// recorded per row and never abort the scan.
pub fn stability_scan(pop: &Population, theta: f64) -> Result<StabilityScan> {
    if pop.sets.is_empty() {
        return Err(Error::invalid("population", "is empty"));
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", format!("must be >= 0, got {theta}")));
    }
    let rows = pop
        .sets
        .par_iter()
        .map(|(id, p)| ScanRow {
            id: id.clone(),
            params: *p,
            outcome: classify(p, theta).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(StabilityScan { theta, rows })
}
