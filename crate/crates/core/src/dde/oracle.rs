//! Method-of-steps RK4 for delayed systems.

use crate::dde::system::SystemMatrices;
use crate::error::{Error, Result};
use crate::linalg::Vec3;

/// Sampled solution on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub times: Vec<f64>,
    pub states: Vec<Vec3>,
}

impl Sampled {
    /// Linear interpolation, clamped to the recorded range.
    pub fn at(&self, t: f64) -> Vec3 {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return self.states[0];
        }
        if t >= self.times[n - 1] {
            return self.states[n - 1];
        }
        let h = self.times[1] - self.times[0];
        let s = (t - self.times[0]) / h;
        let i = (s.floor() as usize).min(n - 2);
        let f = s - i as f64;
        self.states[i] * (1.0 - f) + self.states[i + 1] * f
    }
}

/// Right-hand side `f(t, t_input, x, x(t − θ), t − θ)`. `t_input` is where a
/// discontinuous input should be sampled: nudged into the current step at its
/// ends so inputs that jump on grid points are integrated one-sidedly.
pub(crate) trait DelayedRhs {
    fn eval(&self, t: f64, t_input: f64, x: &Vec3, xd: &Vec3, td: f64) -> Vec3;
}

impl<F: Fn(f64, f64, &Vec3, &Vec3, f64) -> Vec3> DelayedRhs for F {
    fn eval(&self, t: f64, t_input: f64, x: &Vec3, xd: &Vec3, td: f64) -> Vec3 {
        self(t, t_input, x, xd, td)
    }
}

/// Integrates from `t0` with `x(t0) = x0` over `horizon`, reporting every `dt`.
/// `before(t)` supplies the state for `t < t0`. The internal step is `dt`,
/// subdivided when `0 < θ < dt` so every delayed lookup hits stored data.
pub(crate) fn method_of_steps(
    x0: Vec3,
    t0: f64,
    horizon: f64,
    dt: f64,
    theta: f64,
    before: &dyn Fn(f64) -> Vec3,
    rhs: &dyn DelayedRhs,
) -> Sampled {
    let steps = (horizon / dt).round() as usize;
    let sub = if theta > 0.0 && theta < dt {
        (dt / theta).ceil() as usize
    } else {
        1
    };
    let h = dt / sub as f64;
    let eps = 1e-9 * h;

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    // fine buffer for delayed lookups
    let mut buf: Vec<Vec3> = Vec::with_capacity(steps * sub + 1);
    buf.push(x0);
    times.push(t0);
    states.push(x0);

    let lookup = |buf: &Vec<Vec3>, td: f64, x_now: &Vec3, t_now: f64| -> Vec3 {
        if theta == 0.0 {
            return *x_now;
        }
        if td < t0 {
            return before(td);
        }
        let s = (td - t0) / h;
        let i = s.floor() as usize;
        if i + 1 >= buf.len() {
            // only reachable through rounding at the newest point
            debug_assert!(td <= t_now + 1e-9);
            return buf[buf.len() - 1];
        }
        let f = s - i as f64;
        buf[i] * (1.0 - f) + buf[i + 1] * f
    };

    let mut x = x0;
    for n in 0..steps * sub {
        let t = t0 + n as f64 * h;
        let f = |tt: f64, ti: f64, xx: &Vec3| {
            let td = tt - theta;
            let xd = lookup(&buf, td, xx, t);
            rhs.eval(tt, ti, xx, &xd, td)
        };
        let k1 = f(t, t + eps, &x);
        let k2 = f(t + 0.5 * h, t + 0.5 * h, &(x + k1 * (0.5 * h)));
        let k3 = f(t + 0.5 * h, t + 0.5 * h, &(x + k2 * (0.5 * h)));
        let k4 = f(t + h, t + h - eps, &(x + k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        buf.push(x);
        if (n + 1) % sub == 0 {
            times.push(t0 + ((n + 1) / sub) as f64 * dt);
            states.push(x);
        }
    }
    Sampled { times, states }
}

/// Reference integration of `ẋ = A x + BK x(t − θ) + D a(t)` from `t = 0`
/// with history `φ` on `[−θ, 0)` and `x(0) = x0`.
pub fn integrate_oracle(
    sys: &SystemMatrices,
    theta: f64,
    history: &dyn Fn(f64) -> Vec3,
    x0: Vec3,
    forcing: &dyn Fn(f64) -> f64,
    horizon: f64,
    dt: f64,
) -> Result<Sampled> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", format!("must be >= 0, got {theta}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("horizon", format!("must be >= 0, got {horizon}")));
    }
    let a = sys.a;
    let bk = sys.bk();
    let d = sys.d;
    let rhs = move |_t: f64, ti: f64, x: &Vec3, xd: &Vec3, _td: f64| a * x + bk * xd + d * forcing(ti);
    Ok(method_of_steps(x0, 0.0, horizon, dt, theta, history, &rhs))
}
