use nalgebra::RowVector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};

/// One ACC control-parameter tuple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    /// Spacing-deviation gain, 1/s².
    pub ks: f64,
    /// Speed-difference gain, 1/s.
    pub kv: f64,
    /// Acceleration gain.
    pub ka: f64,
    /// Desired time gap τ*, s.
    pub tau: f64,
    /// Standstill distance, m.
    pub l: f64,
    /// Actuation lag T_L, s.
    pub tl: f64,
}

impl ParamSet {
    /// The reference parameter set used throughout the examples.
    pub const REFERENCE: ParamSet = ParamSet {
        ks: 0.26,
        kv: 0.71,
        ka: -1.31,
        tau: 1.18,
        l: 7.64,
        tl: 0.37,
    };

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("ks", self.ks),
            ("kv", self.kv),
            ("ka", self.ka),
            ("tau", self.tau),
            ("l", self.l),
            ("TL", self.tl),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.tau <= 0.0 {
            return Err(Error::invalid("tau", format!("must be > 0, got {}", self.tau)));
        }
        if self.tl <= 0.0 {
            return Err(Error::invalid("TL", format!("must be > 0, got {}", self.tl)));
        }
        if self.l < 0.0 {
            return Err(Error::invalid("l", format!("must be >= 0, got {}", self.l)));
        }
        Ok(())
    }

    /// Equilibrium spacing `v·τ* + l` at speed `v`.
    pub fn equilibrium_spacing(&self, v: f64) -> f64 {
        v * self.tau + self.l
    }

    pub fn gains(&self) -> [f64; 3] {
        [self.ks, self.kv, self.ka]
    }
}

/// `ẋ = A x + B u + D a` with `u = K x(t − θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub a: Mat3,
    pub b: Vec3,
    pub d: Vec3,
    pub k: RowVector3<f64>,
}

impl SystemMatrices {
    pub fn bk(&self) -> Mat3 {
        self.b * self.k
    }

    /// Closed loop matrix without delay.
    pub fn a_plus_bk(&self) -> Mat3 {
        self.a + self.bk()
    }
}

pub fn build_system(p: &ParamSet) -> Result<SystemMatrices> {
    p.validate()?;
    Ok(SystemMatrices {
        a: Mat3::new(
            0.0, 1.0, -p.tau,
            0.0, 0.0, -1.0,
            0.0, 0.0, -1.0 / p.tl,
        ),
        b: Vec3::new(0.0, 0.0, 1.0 / p.tl),
        d: Vec3::new(0.0, 1.0, 0.0),
        k: RowVector3::new(p.ks, p.kv, p.ka),
    })
}
