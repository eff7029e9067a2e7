use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::dde::oracle::{method_of_steps, Sampled};
use crate::dde::{build_system, ParamSet, PiecewiseConstant, SpectralSolution, SystemMatrices};
use crate::error::Result;
use crate::linalg::{propagate_affine, Mat3, Vec3};

use super::config::{cutin_accel, EnginePreference, Mode, Resolved, ScenarioConfig};

/// Position, speed and acceleration of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kin {
    pub p: f64,
    pub v: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Matrix exponentials and the spectral DDE solution.
    Analytic,
    /// Fixed-step RK4 on the follower's absolute state.
    Stepped,
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Analytic => "analytic",
            Engine::Stepped => "stepped",
        })
    }
}

type CacheKey = ([u64; 6], u64, usize);

/// Spectral solutions shared across runs, keyed by parameters, θ and N.
/// Failed solves are remembered too.
#[derive(Debug, Default)]
pub struct SolverCache {
    map: Mutex<HashMap<CacheKey, std::result::Result<Arc<SpectralSolution>, String>>>,
}

impl SolverCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, p: &ParamSet, theta: f64, n: usize) -> std::result::Result<Arc<SpectralSolution>, String> {
        let key = (
            [p.ks, p.kv, p.ka, p.tau, p.l, p.tl].map(f64::to_bits),
            theta.to_bits(),
            n,
        );
        if let Some(hit) = self.map.lock().unwrap().get(&key) {
            return hit.clone();
        }
        // solved outside the lock; a duplicate solve on a race is harmless
        let solved = build_system(p)
            .and_then(|sys| SpectralSolution::solve(&sys, theta, n))
            .map(Arc::new)
            .map_err(|e| e.to_string());
        self.map.lock().unwrap().entry(key).or_insert(solved).clone()
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Exact solution of `x' = M x + g(t)` with `g` constant between breakpoints.
#[derive(Debug, Clone)]
struct AffinePath {
    m: Mat3,
    /// `(start, state at start, g)` per segment.
    segs: Vec<(f64, Vec3, Vec3)>,
}

impl AffinePath {
    fn new(m: Mat3, t0: f64, x0: Vec3, breakpoints: &[f64], g: impl Fn(f64) -> Vec3) -> Self {
        let mut starts = vec![t0];
        starts.extend(breakpoints.iter().copied().filter(|b| *b > t0));
        starts.sort_by(f64::total_cmp);
        starts.dedup();
        let mut segs = Vec::with_capacity(starts.len());
        let mut x = x0;
        for (i, &s) in starts.iter().enumerate() {
            let probe = match starts.get(i + 1) {
                Some(&e) => 0.5 * (s + e),
                None => s + 1.0,
            };
            let gi = g(probe);
            segs.push((s, x, gi));
            if let Some(&e) = starts.get(i + 1) {
                x = propagate_affine(&m, &gi, &x, e - s);
            }
        }
        Self { m, segs }
    }

    fn at(&self, t: f64) -> Vec3 {
        let i = self.segs.partition_point(|s| s.0 <= t).saturating_sub(1);
        let (s, x, g) = &self.segs[i];
        if t <= *s {
            return *x;
        }
        propagate_affine(&self.m, g, x, t - s)
    }
}

#[derive(Debug, Clone)]
enum Path {
    Spectral { resp: crate::dde::DdeResponse, origin: f64 },
    Affine(AffinePath),
}

impl Path {
    fn at(&self, t: f64) -> Result<Vec3> {
        match self {
            Path::Spectral { resp, origin } => resp.eval(t - origin),
            Path::Affine(a) => Ok(a.at(t)),
        }
    }
}

#[derive(Debug, Clone)]
enum Body {
    Analytic { phase1: Option<Path>, phase2: Path },
    /// Follower `(p, v, a)` on a fine uniform grid.
    Stepped(Sampled),
}

/// Vehicle motions that do not depend on the follower.
#[derive(Debug, Clone)]
struct Exogenous {
    tl: f64,
    init: Resolved,
    leader: PiecewiseConstant,
    cutin: PiecewiseConstant,
    profile: super::config::CutInProfile,
}

impl Exogenous {
    fn leader(&self, t: f64) -> Kin {
        let i = &self.init;
        if t <= self.tl {
            return Kin { p: i.p_l + i.v_l * (t - self.tl), v: i.v_l, a: 0.0 };
        }
        let (dv, dp) = self.leader.integrate(self.tl, t);
        Kin {
            p: i.p_l + i.v_l * (t - self.tl) + dp,
            v: i.v_l + dv,
            a: self.leader.value(t),
        }
    }

    fn cutin(&self, t: f64) -> Kin {
        let i = &self.init;
        if t <= 0.0 {
            return Kin { p: i.p_c + i.v_c * t, v: i.v_c, a: 0.0 };
        }
        let (dv, dp) = self.cutin.integrate(0.0, t);
        Kin {
            p: i.p_c + i.v_c * t + dp,
            v: i.v_c + dv,
            a: cutin_accel(&self.profile, t),
        }
    }
}

/// Deviation of the follower from equilibrium behind `front`.
fn relative(front: Kin, f: Kin, p: &ParamSet) -> Vec3 {
    Vec3::new(front.p - f.p - f.v * p.tau - p.l, front.v - f.v, f.a)
}

/// Inverse of [`relative`].
fn follower_from(front: Kin, x: &Vec3, p: &ParamSet) -> Kin {
    let v = front.v - x[1];
    Kin {
        p: front.p - x[0] - v * p.tau - p.l,
        v,
        a: x[2],
    }
}

/// A resolved cut-in scenario that can be evaluated at any time on the
/// cut-in clock (cut-in at `t = 0`, window opening at `t^l < 0`).
///
/// Before the switch time the follower tracks the original leader through
/// the delayed loop. From the switch on it either tracks the cut-in vehicle
/// or applies the braking bound. Before `t^l` everything moves at constant
/// speed and the follower holds its initial deviation.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    cfg: ScenarioConfig,
    params: ParamSet,
    exo: Exogenous,
    xl0: Vec3,
    t_s: f64,
    body: Body,
    fallback_reason: Option<String>,
}

impl ScenarioRun {
    pub fn new(cfg: &ScenarioConfig, p: &ParamSet) -> Result<Self> {
        Self::with_cache(cfg, p, &SolverCache::new())
    }

    pub fn with_cache(cfg: &ScenarioConfig, p: &ParamSet, cache: &SolverCache) -> Result<Self> {
        cfg.validate()?;
        p.validate()?;
        let sys = build_system(p)?;
        let init = cfg.resolve_initial(p)?;
        let exo = Exogenous {
            tl: cfg.tl_start,
            init,
            leader: cfg.leader_forcing.clipped_below(cfg.tl_start),
            cutin: cfg.profile.forcing(),
            profile: cfg.profile,
        };
        let xl0 = Vec3::new(init.p_l - init.p_f - init.v_f * p.tau - p.l, init.v_l - init.v_f, init.a_f);
        let mut run = ScenarioRun {
            cfg: cfg.clone(),
            params: *p,
            exo,
            xl0,
            t_s: cfg.switch_time(),
            body: Body::Stepped(Sampled { times: vec![], states: vec![] }),
            fallback_reason: None,
        };
        let reason = match cfg.engine {
            EnginePreference::Stepped => Some("stepped engine requested".to_string()),
            EnginePreference::Auto => match run.analytic_body(&sys, cache) {
                Ok(body) => {
                    run.body = body;
                    match run.saturation_check() {
                        Ok(None) => return Ok(run),
                        Ok(Some(r)) => Some(r),
                        Err(e) => Some(format!("analytic evaluation failed: {e}")),
                    }
                }
                Err(e) => {
                    log::info!("spectral solution unavailable, integrating instead: {e}");
                    Some(format!("spectral solution unavailable: {e}"))
                }
            },
        };
        run.body = Body::Stepped(run.stepped(&sys));
        run.fallback_reason = reason;
        Ok(run)
    }

    fn analytic_body(&self, sys: &SystemMatrices, cache: &SolverCache) -> Result<Body> {
        let cfg = &self.cfg;
        let theta = cfg.theta;
        let tl = cfg.tl_start;
        let spectral = |label: &str| {
            cache
                .get(&self.params, theta, cfg.branches)
                .map_err(|e| crate::Error::Config(format!("{label}: {e}")))
        };

        let phase1 = if self.t_s > tl {
            let d = sys.d;
            Some(if theta == 0.0 {
                let leader = self.exo.leader.clone();
                Path::Affine(AffinePath::new(sys.a_plus_bk(), tl, self.xl0, &leader.breakpoints(), |t| {
                    d * leader.value(t)
                }))
            } else {
                let sol = spectral("leader phase")?;
                let xl0 = self.xl0;
                let resp = sol.response(&|_| xl0, xl0, &[], &self.exo.leader.shifted(tl));
                Path::Spectral { resp, origin: tl }
            })
        } else {
            None
        };

        let hist = |t: f64| -> Result<Vec3> { self.x_c_before_switch(phase1.as_ref(), t) };
        let xs = hist(self.t_s)?;
        let bps = self.exo.cutin.breakpoints();
        let profile = cfg.profile;
        let d = sys.d;
        let phase2 = match cfg.mode {
            Mode::WorstCaseBraking => {
                let g0 = sys.b * cfg.ufb;
                Path::Affine(AffinePath::new(sys.a, self.t_s, xs, &bps, |t| g0 + d * cutin_accel(&profile, t)))
            }
            Mode::FullFeedback if theta == 0.0 => Path::Affine(AffinePath::new(sys.a_plus_bk(), self.t_s, xs, &bps, |t| {
                d * cutin_accel(&profile, t)
            })),
            Mode::FullFeedback => {
                let sol = spectral("cut-in phase")?;
                // derivative jumps of the history inside the delay window
                let mut kinks: Vec<f64> = (0..)
                    .map(|j| tl + j as f64 * theta)
                    .take_while(|k| *k < self.t_s)
                    .chain(bps.iter().copied())
                    .chain(self.exo.leader.breakpoints())
                    .map(|k| k - self.t_s)
                    .filter(|k| *k > -theta && *k < 0.0)
                    .collect();
                kinks.sort_by(f64::total_cmp);
                kinks.dedup();
                let err = std::cell::RefCell::new(None);
                let h = |tau: f64| match hist(self.t_s + tau) {
                    Ok(x) => x,
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e.to_string());
                        Vec3::zeros()
                    }
                };
                let resp = sol.response(&h, xs, &kinks, &self.exo.cutin.shifted(self.t_s));
                if let Some(e) = err.into_inner() {
                    return Err(crate::Error::Config(format!("history evaluation failed: {e}")));
                }
                Path::Spectral { resp, origin: self.t_s }
            }
        };
        Ok(Body::Analytic { phase1, phase2 })
    }

    /// `x_l` before the switch, frozen before `t^l`.
    fn x_l_leader_phase(&self, phase1: Option<&Path>, t: f64) -> Result<Vec3> {
        match phase1 {
            Some(p) if t > self.cfg.tl_start => p.at(t),
            _ => Ok(self.xl0),
        }
    }

    /// `x_c` before the switch: the follower still tracks the original leader.
    fn x_c_before_switch(&self, phase1: Option<&Path>, t: f64) -> Result<Vec3> {
        let xl = self.x_l_leader_phase(phase1, t)?;
        let f = follower_from(self.exo.leader(t), &xl, &self.params);
        Ok(relative(self.exo.cutin(t), f, &self.params))
    }

    /// Reason to abandon the closed form when the full-feedback demand leaves
    /// `[ufb, umax]` anywhere in the window.
    fn saturation_check(&self) -> Result<Option<String>> {
        if !(self.cfg.mode == Mode::FullFeedback && self.cfg.saturate) {
            return Ok(None);
        }
        let k = self.params.gains();
        let h = self.cfg.dt.min(0.01);
        let n = ((self.cfg.horizon - self.cfg.tl_start) / h).ceil() as usize;
        for i in 0..=n {
            let t = (self.cfg.tl_start + i as f64 * h).min(self.cfg.horizon);
            let x = self.feedback_state(t - self.cfg.theta, t >= self.t_s)?;
            let u = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
            if u < self.cfg.ufb - 1e-12 || u > self.cfg.umax + 1e-12 {
                return Ok(Some(format!("demand {u:.3} m/s² saturates at t = {t:.2} s")));
            }
        }
        Ok(None)
    }

    /// State fed back at `t + θ`: relative to the leader before the switch,
    /// to the cut-in vehicle after.
    fn feedback_state(&self, td: f64, after_switch: bool) -> Result<Vec3> {
        let f = self.follower(td)?;
        let front = if after_switch { self.exo.cutin(td) } else { self.exo.leader(td) };
        Ok(relative(front, f, &self.params))
    }

    fn stepped(&self, sys: &SystemMatrices) -> Sampled {
        let cfg = &self.cfg;
        let p = self.params;
        let sub = (cfg.dt / 0.01 - 1e-9).ceil().max(1.0);
        let h = cfg.dt / sub;
        let k = sys.k;
        let exo = &self.exo;
        let xl0 = self.xl0;
        let t_s = self.t_s;
        let before = |t: f64| follower_from(exo.leader(t), &xl0, &p);
        let f0 = before(cfg.tl_start);
        let rhs = |_t: f64, ti: f64, y: &Vec3, yd: &Vec3, td: f64| {
            let after = ti >= t_s;
            let fd = Kin { p: yd[0], v: yd[1], a: yd[2] };
            let u = if after && cfg.mode == Mode::WorstCaseBraking {
                cfg.ufb
            } else {
                let front = if after { exo.cutin(td) } else { exo.leader(td) };
                let u = (k * relative(front, fd, &p))[0];
                if cfg.mode == Mode::FullFeedback && cfg.saturate {
                    u.clamp(cfg.ufb, cfg.umax)
                } else {
                    u
                }
            };
            Vec3::new(y[1], y[2], (u - y[2]) / p.tl)
        };
        let before_vec = |t: f64| {
            let f = before(t);
            Vec3::new(f.p, f.v, f.a)
        };
        method_of_steps(
            Vec3::new(f0.p, f0.v, f0.a),
            cfg.tl_start,
            cfg.horizon - cfg.tl_start,
            h,
            cfg.theta,
            &before_vec,
            &rhs,
        )
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn switch_time(&self) -> f64 {
        self.t_s
    }

    pub fn engine(&self) -> Engine {
        match self.body {
            Body::Analytic { .. } => Engine::Analytic,
            Body::Stepped(_) => Engine::Stepped,
        }
    }

    /// Why the stepped engine was used, if it was.
    pub fn fallback_reason(&self) -> Option<&str> {
        self.fallback_reason.as_deref()
    }

    pub fn leader(&self, t: f64) -> Kin {
        self.exo.leader(t)
    }

    pub fn cutin(&self, t: f64) -> Kin {
        self.exo.cutin(t)
    }

    pub fn follower(&self, t: f64) -> Result<Kin> {
        if t < self.cfg.tl_start {
            return Ok(follower_from(self.exo.leader(t), &self.xl0, &self.params));
        }
        match &self.body {
            Body::Analytic { phase1, phase2 } => {
                if t < self.t_s {
                    let xl = self.x_l_leader_phase(phase1.as_ref(), t)?;
                    Ok(follower_from(self.exo.leader(t), &xl, &self.params))
                } else {
                    let xc = phase2.at(t)?;
                    Ok(follower_from(self.exo.cutin(t), &xc, &self.params))
                }
            }
            Body::Stepped(s) => Ok(hermite(s, t)),
        }
    }

    /// `x_l(t)`: deviation from equilibrium behind the original leader.
    pub fn x_l(&self, t: f64) -> Result<Vec3> {
        Ok(relative(self.exo.leader(t), self.follower(t)?, &self.params))
    }

    /// `x_c(t)`: deviation from equilibrium behind the cut-in vehicle.
    pub fn x_c(&self, t: f64) -> Result<Vec3> {
        if let Body::Analytic { phase2, .. } = &self.body {
            if t >= self.t_s {
                return phase2.at(t);
            }
        }
        Ok(relative(self.exo.cutin(t), self.follower(t)?, &self.params))
    }

    /// Bumper-to-bumper distance to the cut-in vehicle, `p_c − p_f − l'`.
    pub fn gap(&self, t: f64) -> Result<f64> {
        Ok(self.exo.cutin(t).p - self.follower(t)?.p - self.cfg.lprime)
    }

    /// Samples `t^l, t^l + Δt, …` up to the horizon.
    pub fn sample(&self) -> Result<super::Trajectory> {
        let cfg = &self.cfg;
        let n = ((cfg.horizon - cfg.tl_start) / cfg.dt + 1e-9).floor() as usize;
        let mut tr = super::Trajectory::with_capacity(n + 1, self);
        for i in 0..=n {
            let t = cfg.tl_start + i as f64 * cfg.dt;
            let f = self.follower(t)?;
            let l = self.exo.leader(t);
            let c = self.exo.cutin(t);
            let xc = relative(c, f, &self.params);
            tr.t.push(t);
            tr.leader.push(l);
            tr.cutin.push(c);
            tr.follower.push(f);
            tr.ds_c.push(xc[0]);
            tr.dv_c.push(xc[1]);
            tr.gap.push(c.p - f.p - cfg.lprime);
        }
        Ok(tr)
    }
}

/// Cubic Hermite in position (using speed as its slope), linear in speed and
/// acceleration.
fn hermite(s: &Sampled, t: f64) -> Kin {
    let n = s.times.len();
    let h = s.times[1] - s.times[0];
    let x = ((t - s.times[0]) / h).max(0.0);
    let i = (x.floor() as usize).min(n - 2);
    let u = (x - i as f64).min(1.0);
    let (a, b) = (s.states[i], s.states[i + 1]);
    let h00 = 2.0 * u.powi(3) - 3.0 * u * u + 1.0;
    let h10 = u.powi(3) - 2.0 * u * u + u;
    let h01 = -2.0 * u.powi(3) + 3.0 * u * u;
    let h11 = u.powi(3) - u * u;
    Kin {
        p: h00 * a[0] + h10 * h * a[1] + h01 * b[0] + h11 * h * b[1],
        v: a[1] * (1.0 - u) + b[1] * u,
        a: a[2] * (1.0 - u) + b[2] * u,
    }
}
