//! Joint density by one-dimensional quadrature over the latent coordinate.
//!
//! For fixed (x, y) the integrand lives on Ω = (L, U) with L = max(0, x+y−1)
//! and U = min(x, y), and may blow up at either end when an exponent is below
//! one. The integral is taken after the double-exponential substitution
//! u = L + (U−L)·σ(π sinh s), which turns algebraic endpoint singularities into
//! doubly exponential decay in s. Everything is evaluated in log space, and
//! each of the four factors is rebuilt as `offset + gap` with the gap to the
//! nearest end of Ω computed directly, so no precision is lost near the ends.

use std::f64::consts::PI;

use super::params::AlphaParams;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::special::{ln_multivariate_beta, log_sigmoid};

/// Equality tolerance of the singular-set rule.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Width below which Ω is treated as a point.
pub const DEGENERATE_WIDTH: f64 = 1e-15;
/// Relative accuracy requested from the quadrature.
pub const DENSITY_REL_TOL: f64 = 1e-10;

/// Integration window in s: beyond it the integrand is below e^-TAIL_LOG of its scale.
const TAIL_LOG: f64 = 45.0;

fn check_point(x: f64, y: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "({x}, {y}) is outside the open unit square"
        )))
    }
}

/// False on the null set where the integral diverges: α₁+α₄ ≤ 1 on the
/// anti-diagonal x+y = 1, or α₂+α₃ ≤ 1 on the diagonal x = y.
pub fn is_density_defined(alpha: &AlphaParams, x: f64, y: f64) -> bool {
    let on_anti = (x + y - 1.0).abs() <= SINGULAR_TOL;
    let on_diag = (x - y).abs() <= SINGULAR_TOL;
    !((alpha.alpha1 + alpha.alpha4 <= 1.0 && on_anti) || (alpha.alpha2 + alpha.alpha3 <= 1.0 && on_diag))
}

/// The four factors u, x−u, y−u, 1−x−y+u written as offset + gap, where the
/// gap is either the distance to the left end of Ω or to the right end.
#[derive(Clone, Copy)]
enum Side {
    Left(f64),
    Right(f64),
}

struct Integrand {
    exps: [f64; 4],
    sides: [Side; 4],
    log_width: f64,
    width: f64,
    log_norm: f64,
}

impl Integrand {
    fn new(alpha: &AlphaParams, x: f64, y: f64) -> Self {
        let lower = (x + y - 1.0).max(0.0);
        // exact zero when L = x+y−1; the rounded difference can go negative
        let fourth = if lower > 0.0 { 0.0 } else { 1.0 - x - y };
        let upper = x.min(y);
        let width = upper - lower;
        // u = L + left,   x−u = (x−U) + right,   y−u = (y−U) + right,
        // 1−x−y+u = (1−x−y+L) + left
        let sides = [
            Side::Left(lower),
            Side::Right(x - upper),
            Side::Right(y - upper),
            Side::Left(fourth),
        ];
        let a = alpha.to_array();
        Self {
            exps: [a[0] - 1.0, a[1] - 1.0, a[2] - 1.0, a[3] - 1.0],
            sides,
            log_width: width.ln(),
            width,
            log_norm: -ln_multivariate_beta(&a),
        }
    }

    /// Decay rates of the transformed integrand at s → −∞ and s → +∞.
    fn tail_rates(&self) -> (f64, f64) {
        let mut left = 1.0;
        let mut right = 1.0;
        for (e, side) in self.exps.iter().zip(&self.sides) {
            match side {
                Side::Left(o) if *o == 0.0 => left += e,
                Side::Right(o) if *o == 0.0 => right += e,
                _ => {}
            }
        }
        (left, right)
    }

    fn eval(&self, s: f64) -> f64 {
        let z = PI * s.sinh();
        let log_left = self.log_width + log_sigmoid(z);
        let log_right = self.log_width + log_sigmoid(-z);
        let mut acc = self.log_norm + self.log_width + log_sigmoid(z) + log_sigmoid(-z) + (PI * s.cosh()).ln();
        for (e, side) in self.exps.iter().zip(&self.sides) {
            if *e == 0.0 {
                continue;
            }
            let log_factor = match *side {
                Side::Left(o) if o == 0.0 => log_left,
                Side::Right(o) if o == 0.0 => log_right,
                Side::Left(o) => (o + log_left.exp()).ln(),
                Side::Right(o) => (o + log_right.exp()).ln(),
            };
            acc += e * log_factor;
        }
        acc.exp()
    }
}

/// Joint density f(x, y) for `alpha`.
pub fn density(alpha: &AlphaParams, x: f64, y: f64) -> Result<f64> {
    check_point(x, y)?;
    if !is_density_defined(alpha, x, y) {
        return Err(Error::UndefinedDensity { x, y });
    }
    let integrand = Integrand::new(alpha, x, y);
    if !(integrand.width > DEGENERATE_WIDTH) {
        return Ok(0.0);
    }
    let (rate_left, rate_right) = integrand.tail_rates();
    let s_lo = -(TAIL_LOG / (PI * rate_left)).asinh();
    let s_hi = (TAIL_LOG / (PI * rate_right)).asinh();
    let tol = Tolerance {
        abs: 0.0,
        rel: DENSITY_REL_TOL,
        max_intervals: 2000,
    };
    integrate(|s| integrand.eval(s), s_lo, s_hi, tol).map(|r| r.value)
}

/// Density where defined, `None` on the singular set.
pub fn density_or_undefined(alpha: &AlphaParams, x: f64, y: f64) -> Result<Option<f64>> {
    match density(alpha, x, y) {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedDensity { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}
