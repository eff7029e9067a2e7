use serde::{Deserialize, Serialize};

/// Piecewise-constant scalar input. Each piece holds `value` on `(lo, hi]`;
/// the input is zero outside every piece. `hi` may be infinite.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant {
    pieces: Vec<Piece>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

impl PiecewiseConstant {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Pieces must be non-overlapping; zero-valued and empty pieces are dropped.
    pub fn new(pieces: impl IntoIterator<Item = Piece>) -> Self {
        let mut pieces: Vec<Piece> = pieces
            .into_iter()
            .filter(|p| p.value != 0.0 && p.hi > p.lo)
            .collect();
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        Self { pieces }
    }

    pub fn step(at: f64, value: f64) -> Self {
        Self::new([Piece { lo: at, hi: f64::INFINITY, value }])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn value(&self, t: f64) -> f64 {
        self.pieces
            .iter()
            .find(|p| p.lo < t && t <= p.hi)
            .map_or(0.0, |p| p.value)
    }

    /// The same input seen from a clock whose zero is at `origin`.
    pub fn shifted(&self, origin: f64) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece {
                    lo: p.lo - origin,
                    hi: p.hi - origin,
                    value: p.value,
                })
                .collect(),
        }
    }

    /// Keeps only the part on `(from, ∞)`.
    pub fn clipped_below(&self, from: f64) -> Self {
        Self::new(self.pieces.iter().map(|p| Piece {
            lo: p.lo.max(from),
            hi: p.hi,
            value: p.value,
        }))
    }

    /// Jump locations.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .pieces
            .iter()
            .flat_map(|p| [p.lo, p.hi])
            .filter(|x| x.is_finite())
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// `∫_{from}^{t} value` and `∫_{from}^{t} ∫ value`, i.e. the velocity and
    /// displacement gained from rest at `from`.
    pub fn integrate(&self, from: f64, t: f64) -> (f64, f64) {
        let mut dv = 0.0;
        let mut dp = 0.0;
        for p in &self.pieces {
            let lo = p.lo.max(from);
            let hi = p.hi.min(t);
            if hi <= lo {
                continue;
            }
            let h = hi - lo;
            // displacement of this piece's velocity gain carried to t
            dp += p.value * h * (t - hi) + 0.5 * p.value * h * h;
            dv += p.value * h;
        }
        (dv, dp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_uses_half_open_pieces() {
        let f = PiecewiseConstant::new([
            Piece { lo: 0.0, hi: 2.0, value: -2.0 },
            Piece { lo: 2.0, hi: 5.0, value: 2.0 },
        ]);
        assert_eq!(f.value(0.0), 0.0);
        assert_eq!(f.value(1e-12), -2.0);
        assert_eq!(f.value(2.0), -2.0);
        assert_eq!(f.value(3.0), 2.0);
        assert_eq!(f.value(5.0), 2.0);
        assert_eq!(f.value(6.0), 0.0);
        assert_eq!(f.breakpoints(), vec![0.0, 2.0, 5.0]);
    }

    #[test]
    fn integrate_matches_constant_acceleration_kinematics() {
        let f = PiecewiseConstant::new([
            Piece { lo: 0.0, hi: 2.0, value: -2.0 },
            Piece { lo: 2.0, hi: 5.0, value: 2.0 },
        ]);
        let (dv, dp) = f.integrate(-1.0, 1.5);
        assert!((dv + 3.0).abs() < 1e-15);
        assert!((dp + 2.25).abs() < 1e-15);
        let (dv, dp) = f.integrate(-1.0, 7.0);
        assert!((dv - 2.0).abs() < 1e-15);
        // p = -4, v = -4 at t = 2; p = -7, v = 2 at t = 5
        assert!((dp + 3.0).abs() < 1e-12);
    }

    #[test]
    fn shifting_moves_pieces() {
        let f = PiecewiseConstant::step(1.0, 3.0).shifted(1.0);
        assert_eq!(f.value(0.0), 0.0);
        assert_eq!(f.value(0.5), 3.0);
    }
}
