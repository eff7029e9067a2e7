use serde::{Deserialize, Serialize};

use crate::dde::{ParamSet, Piece, PiecewiseConstant, DEFAULT_BRANCHES};
use crate::error::{Error, Result};

/// Cut-in vehicle acceleration after it enters the lane: `a1` on `(0, t1]`,
/// `a2` on `(t1, t2)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutInProfile {
    pub a1: f64,
    pub t1: f64,
    pub a2: f64,
    pub t2: f64,
}

impl Default for CutInProfile {
    fn default() -> Self {
        Self {
            a1: -2.0,
            t1: 2.0,
            a2: 2.0,
            t2: 5.0,
        }
    }
}

impl CutInProfile {
    /// Same timing, no velocity dip.
    pub fn flat(&self) -> Self {
        Self {
            a1: 0.0,
            a2: 0.0,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (n, v) in [("a1", self.a1), ("t1", self.t1), ("a2", self.a2), ("t2", self.t2)] {
            if !v.is_finite() {
                return Err(Error::invalid(n, format!("must be finite, got {v}")));
            }
        }
        if !(0.0 < self.t1 && self.t1 < self.t2) {
            return Err(Error::invalid("t1", format!("need 0 < t1 < t2, got t1 = {}, t2 = {}", self.t1, self.t2)));
        }
        Ok(())
    }

    /// The profile as an input on the cut-in clock.
    pub fn forcing(&self) -> PiecewiseConstant {
        PiecewiseConstant::new([
            Piece { lo: 0.0, hi: self.t1, value: self.a1 },
            Piece { lo: self.t1, hi: self.t2, value: self.a2 },
        ])
    }
}

/// Acceleration of the cut-in vehicle at time `t` after the cut-in.
pub fn cutin_accel(profile: &CutInProfile, t: f64) -> f64 {
    if 0.0 < t && t <= profile.t1 {
        profile.a1
    } else if profile.t1 < t && t < profile.t2 {
        profile.a2
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Delayed feedback on the cut-in vehicle after the switch.
    FullFeedback,
    /// Constant braking demand `ufb` after the switch.
    WorstCaseBraking,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_feedback" | "ff" | "full-feedback" => Ok(Mode::FullFeedback),
            "worst_case_braking" | "wcb" | "worst-case-braking" => Ok(Mode::WorstCaseBraking),
            other => Err(Error::invalid(
                "mode",
                format!("expected full_feedback or worst_case_braking, got {other:?}"),
            )),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::FullFeedback => "full_feedback",
            Mode::WorstCaseBraking => "worst_case_braking",
        })
    }
}

/// Initial conditions. Leader and follower are given at the start of the
/// analysis window `t^l`; the cut-in vehicle drives at constant speed until
/// it enters the lane at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum InitialState {
    /// Absolute positions and speeds; `p_c`, `v_c` at the cut-in instant.
    Kinematics {
        p_l: f64,
        v_l: f64,
        p_f: f64,
        v_f: f64,
        a_f: f64,
        p_c: f64,
        v_c: f64,
    },
    /// Deviations from equilibrium at `t^l` for both pairs.
    Deviations {
        ds_l: f64,
        dv_l: f64,
        ds_c: f64,
        dv_c: f64,
        v_f: f64,
        a_f: f64,
    },
}

impl InitialState {
    pub const REFERENCE: InitialState = InitialState::Kinematics {
        p_l: 100.0,
        v_l: 20.0,
        p_f: 50.0,
        v_f: 20.0,
        a_f: 0.0,
        p_c: 110.0,
        v_c: 20.0,
    };

    /// The high-risk cut-in: leader ahead and faster, cut-in closer and slower.
    pub const HIGH_RISK: InitialState = InitialState::Deviations {
        ds_l: 5.0,
        dv_l: 5.0,
        ds_c: -5.0,
        dv_c: -5.0,
        v_f: 20.0,
        a_f: 0.0,
    };

    pub fn equilibrium(v_f: f64) -> Self {
        InitialState::Deviations {
            ds_l: 0.0,
            dv_l: 0.0,
            ds_c: 0.0,
            dv_c: 0.0,
            v_f,
            a_f: 0.0,
        }
    }

    /// Converts to the deviation form, replacing one or more deviations.
    pub fn with_deviations(self, p: &ParamSet, tl_start: f64, f: impl FnOnce(&mut [f64; 4])) -> Self {
        let k = self.resolve(p, tl_start);
        let s = p.equilibrium_spacing(k.v_f);
        let p_c_tl = k.p_c + k.v_c * tl_start;
        let mut d = [k.p_l - k.p_f - s, k.v_l - k.v_f, p_c_tl - k.p_f - s, k.v_c - k.v_f];
        f(&mut d);
        InitialState::Deviations {
            ds_l: d[0],
            dv_l: d[1],
            ds_c: d[2],
            dv_c: d[3],
            v_f: k.v_f,
            a_f: k.a_f,
        }
    }

    pub(crate) fn resolve(&self, p: &ParamSet, tl_start: f64) -> Resolved {
        match *self {
            InitialState::Kinematics { p_l, v_l, p_f, v_f, a_f, p_c, v_c } => Resolved { p_l, v_l, p_f, v_f, a_f, p_c, v_c },
            InitialState::Deviations { ds_l, dv_l, ds_c, dv_c, v_f, a_f } => {
                let s = p.equilibrium_spacing(v_f);
                let v_c = v_f + dv_c;
                Resolved {
                    p_l: s + ds_l,
                    v_l: v_f + dv_l,
                    p_f: 0.0,
                    v_f,
                    a_f,
                    // constant speed from t^l to the cut-in instant
                    p_c: s + ds_c - v_c * tl_start,
                    v_c,
                }
            }
        }
    }
}

/// Absolute initial kinematics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Resolved {
    pub p_l: f64,
    pub v_l: f64,
    pub p_f: f64,
    pub v_f: f64,
    pub a_f: f64,
    pub p_c: f64,
    pub v_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Sensing delay θ, s.
    pub theta: f64,
    /// Anticipation φ, s.
    pub phi: f64,
    /// Start of the analysis window `t^l` (negative), s.
    pub tl_start: f64,
    /// Braking bound `u_f^b`, m/s².
    pub ufb: f64,
    /// Upper demand bound in full-feedback mode, m/s².
    pub umax: f64,
    /// Clamp the full-feedback demand to `[ufb, umax]`.
    pub saturate: bool,
    pub profile: CutInProfile,
    /// Vehicle length l', m.
    pub lprime: f64,
    /// Output sampling step, s.
    pub dt: f64,
    /// End of the simulation on the cut-in clock, s.
    pub horizon: f64,
    pub mode: Mode,
    pub initial: InitialState,
    /// Original leader acceleration on the cut-in clock.
    pub leader_forcing: PiecewiseConstant,
    /// Probability that an anticipated cut-in is predicted correctly.
    pub anticipation_success_prob: f64,
    /// Branch half-count N of the analytical solution.
    pub branches: usize,
    pub engine: EnginePreference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnginePreference {
    /// Closed form where possible, stepped integration when the demand
    /// saturates or the spectral solve fails.
    #[default]
    Auto,
    Stepped,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            theta: 0.0,
            phi: 0.0,
            tl_start: -1.0,
            ufb: -5.0,
            umax: 2.0,
            saturate: true,
            profile: CutInProfile::default(),
            lprime: 3.0,
            dt: 0.1,
            horizon: 60.0,
            mode: Mode::FullFeedback,
            initial: InitialState::REFERENCE,
            leader_forcing: PiecewiseConstant::zero(),
            anticipation_success_prob: 1.0,
            branches: DEFAULT_BRANCHES,
            engine: EnginePreference::Auto,
        }
    }
}

impl ScenarioConfig {
    /// Switch time `max(t^l, θ − φ)`.
    pub fn switch_time(&self) -> f64 {
        (self.theta - self.phi).max(self.tl_start)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("theta", self.theta),
            ("phi", self.phi),
            ("tl_start", self.tl_start),
            ("ufb", self.ufb),
            ("umax", self.umax),
            ("lprime", self.lprime),
            ("dt", self.dt),
            ("horizon", self.horizon),
            ("anticipation_success_prob", self.anticipation_success_prob),
        ];
        for (n, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(n, format!("must be finite, got {v}")));
            }
        }
        if self.theta < 0.0 {
            return Err(Error::invalid("theta", format!("must be >= 0, got {}", self.theta)));
        }
        if self.phi < 0.0 {
            return Err(Error::invalid("phi", format!("must be >= 0, got {}", self.phi)));
        }
        if self.tl_start >= 0.0 {
            return Err(Error::invalid("tl_start", format!("must be < 0, got {}", self.tl_start)));
        }
        if self.ufb > 0.0 {
            return Err(Error::invalid("ufb", format!("must be <= 0, got {}", self.ufb)));
        }
        if self.saturate && self.umax < self.ufb {
            return Err(Error::invalid("umax", format!("must be >= ufb, got {}", self.umax)));
        }
        if self.dt <= 0.0 {
            return Err(Error::invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if self.lprime <= 0.0 {
            return Err(Error::invalid("lprime", format!("must be > 0, got {}", self.lprime)));
        }
        if self.horizon <= 0.0 {
            return Err(Error::invalid("horizon", format!("must be > 0, got {}", self.horizon)));
        }
        if !(0.0..=1.0).contains(&self.anticipation_success_prob) {
            return Err(Error::invalid(
                "anticipation_success_prob",
                format!("must be in [0, 1], got {}", self.anticipation_success_prob),
            ));
        }
        if self.branches == 0 {
            return Err(Error::invalid("branches", "must be >= 1"));
        }
        self.profile.validate()?;
        Ok(())
    }

    /// Validates the initial state against a parameter set.
    pub(crate) fn resolve_initial(&self, p: &ParamSet) -> Result<Resolved> {
        let r = self.initial.resolve(p, self.tl_start);
        for (n, v) in [
            ("p_l", r.p_l),
            ("v_l", r.v_l),
            ("p_f", r.p_f),
            ("v_f", r.v_f),
            ("a_f", r.a_f),
            ("p_c", r.p_c),
            ("v_c", r.v_c),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(n, format!("must be finite, got {v}")));
            }
        }
        if r.p_l - r.p_f <= 0.0 {
            return Err(Error::invalid("p_l", "leader must start ahead of the follower"));
        }
        if r.p_c + r.v_c * self.tl_start - r.p_f <= 0.0 {
            return Err(Error::invalid("p_c", "cut-in vehicle must start ahead of the follower"));
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values_at_boundaries() {
        let p = CutInProfile::default();
        assert_eq!(cutin_accel(&p, 1.0), -2.0);
        assert_eq!(cutin_accel(&p, 3.0), 2.0);
        assert_eq!(cutin_accel(&p, 0.0), 0.0);
        assert_eq!(cutin_accel(&p, 6.0), 0.0);
        assert_eq!(cutin_accel(&p, 2.0), -2.0);
        assert_eq!(cutin_accel(&p, 5.0), 0.0);
    }

    #[test]
    fn switch_time_is_clamped_to_window() {
        let mut c = ScenarioConfig { theta: 0.3, ..Default::default() };
        assert_eq!(c.switch_time(), 0.3);
        c.phi = 1.0;
        assert!((c.switch_time() + 0.7).abs() < 1e-15);
        c.phi = 5.0;
        assert_eq!(c.switch_time(), -1.0);
    }

    #[test]
    fn deviations_round_trip_through_kinematics() {
        let p = ParamSet::REFERENCE;
        let d = InitialState::HIGH_RISK;
        let k = d.resolve(&p, -1.0);
        let s = p.equilibrium_spacing(20.0);
        assert!((k.p_l - k.p_f - s - 5.0).abs() < 1e-12);
        // cut-in deviation at t^l from its constant-speed past
        assert!((k.p_c - 15.0 - k.p_f - s + 5.0).abs() < 1e-12);
        let back = InitialState::REFERENCE.with_deviations(&p, -1.0, |_| {});
        let r = back.resolve(&p, -1.0);
        let orig = InitialState::REFERENCE.resolve(&p, -1.0);
        assert!((r.p_c - r.p_f - (orig.p_c - orig.p_f)).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            ScenarioConfig { theta: -0.1, ..Default::default() },
            ScenarioConfig { tl_start: 0.0, ..Default::default() },
            ScenarioConfig { dt: 0.0, ..Default::default() },
            ScenarioConfig { lprime: 0.0, ..Default::default() },
            ScenarioConfig { ufb: 1.0, ..Default::default() },
            ScenarioConfig { anticipation_success_prob: 1.5, ..Default::default() },
            ScenarioConfig {
                profile: CutInProfile { t1: 3.0, t2: 2.0, ..Default::default() },
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        assert!(ScenarioConfig::default().validate().is_ok());
        assert!("wcb".parse::<Mode>().is_ok() && "nope".parse::<Mode>().is_err());
    }
}
