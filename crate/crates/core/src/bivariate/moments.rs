//! Closed-form moment algebra and the analytic solutions of the moments' system.

use super::params::{AlphaParams, MomentSummary, RhoInterval, SolverOutcome};
use crate::error::{Error, Result};

/// Exact means, variances and correlation of the bivariate beta.
pub fn moments_of(alpha: &AlphaParams) -> MomentSummary {
    moments_of_raw(&alpha.to_array()).expect("positive parameters give finite moments")
}

/// Moment formulas for a nonnegative vector that may contain zeros (as produced
/// by clamped estimators). Returns `None` when a marginal degenerates.
pub fn moments_of_raw(a: &[f64; 4]) -> Option<MomentSummary> {
    let [a1, a2, a3, a4] = *a;
    if a.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return None;
    }
    let s = a1 + a2 + a3 + a4;
    let (x_a, x_b) = (a1 + a2, a3 + a4);
    let (y_a, y_b) = (a1 + a3, a2 + a4);
    if x_a <= 0.0 || x_b <= 0.0 || y_a <= 0.0 || y_b <= 0.0 {
        return None;
    }
    let denom = s * s * (s + 1.0);
    Some(MomentSummary {
        m1: x_a / s,
        m2: y_a / s,
        v1: x_a * x_b / denom,
        v2: y_a * y_b / denom,
        rho: (a1 * a4 - a2 * a3) / (x_a * x_b * y_a * y_b).sqrt(),
    })
}

fn check_mean(name: &str, m: f64) -> Result<()> {
    if m > 0.0 && m < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0,1), got {m}")))
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("rho must lie in [-1,1], got {rho}")))
    }
}

/// √(m₁m₂(1−m₁)(1−m₂)).
pub(crate) fn mean_scale(m1: f64, m2: f64) -> f64 {
    (m1 * m2 * (1.0 - m1) * (1.0 - m2)).sqrt()
}

/// ᾱ = (m₁ − m₁² − v₁)/v₁, failing when it is not positive.
pub fn bar_alpha(m1: f64, v1: f64) -> Result<f64> {
    let bound = m1 * (1.0 - m1);
    if v1 >= bound {
        return Err(Error::InfeasibleVariance { variance: v1, bound });
    }
    Ok((m1 - m1 * m1 - v1) / v1)
}

/// Unique solution of the system without the v₂ equation, evaluated literally.
pub fn solve_four_moments(m1: f64, m2: f64, v1: f64, rho: f64) -> Result<SolverOutcome> {
    check_mean("m1", m1)?;
    check_mean("m2", m2)?;
    check_rho(rho)?;
    if !(v1 > 0.0) {
        return Err(Error::InvalidParameter(format!("v1 must be > 0, got {v1}")));
    }
    let s = bar_alpha(m1, v1)?;
    let alpha4 = s * (rho * mean_scale(m1, m2) + (1.0 - m1) * (1.0 - m2));
    let alpha = [
        (m1 + m2 - 1.0) * s + alpha4,
        (1.0 - m2) * s - alpha4,
        (1.0 - m1) * s - alpha4,
        alpha4,
    ];
    Ok(SolverOutcome::new(alpha, s))
}

/// Solution of the mean/correlation equations with α₄ free.
pub fn solve_three_moments(m1: f64, m2: f64, rho: f64, alpha4: f64) -> Result<SolverOutcome> {
    check_mean("m1", m1)?;
    check_mean("m2", m2)?;
    check_rho(rho)?;
    if !(alpha4 > 0.0 && alpha4.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha4 must be > 0, got {alpha4}")));
    }
    let r = rho * mean_scale(m1, m2);
    let d = (1.0 - m1) * (1.0 - m2) + r;
    if d <= 0.0 {
        return Err(Error::DegenerateDenominator(d));
    }
    let alpha = [
        alpha4 * (m1 * m2 + r) / d,
        alpha4 * (m1 * (1.0 - m2) - r) / d,
        alpha4 * (m2 * (1.0 - m1) - r) / d,
        alpha4,
    ];
    let sum = alpha.iter().sum();
    Ok(SolverOutcome::new(alpha, sum))
}

/// Correlations for which the four-moment solution is strictly positive.
pub fn rho_bounds(m1: f64, m2: f64) -> RhoInterval {
    let scale = mean_scale(m1, m2);
    RhoInterval {
        lower: -(m1 * m2).min((1.0 - m1) * (1.0 - m2)) / scale,
        upper: (m1.min(m2) - m1 * m2) / scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(a: [f64; 4]) -> AlphaParams {
        AlphaParams::from_array(a).unwrap()
    }

    #[test]
    fn symmetric_moments() {
        let m = moments_of(&p([1.0; 4]));
        assert_eq!((m.m1, m.m2, m.rho), (0.5, 0.5, 0.0));
        assert_relative_eq!(m.v1, 0.05, epsilon = 1e-15);
        assert_relative_eq!(m.v2, 0.05, epsilon = 1e-15);
    }

    #[test]
    fn constructed_correlation() {
        // α = (a/2)(1+ρ, 1−ρ, 1−ρ, 1+ρ) has correlation ρ
        let (a, r) = (2.0, 0.6);
        let m = moments_of(&p([a / 2.0 * (1.0 + r), a / 2.0 * (1.0 - r), a / 2.0 * (1.0 - r), a / 2.0 * (1.0 + r)]));
        assert_relative_eq!(m.rho, 0.6, epsilon = 1e-14);
    }

    #[test]
    fn hand_evaluated_2731() {
        let m = moments_of(&p([2.0, 7.0, 3.0, 1.0]));
        assert_relative_eq!(m.m1, 9.0 / 13.0, epsilon = 1e-15);
        assert_relative_eq!(m.m2, 5.0 / 13.0, epsilon = 1e-15);
        assert_relative_eq!(m.v1, 36.0 / 2366.0, epsilon = 1e-15);
        assert_relative_eq!(m.v2, 40.0 / 2366.0, epsilon = 1e-15);
        assert_relative_eq!(m.rho, -19.0 / 1440f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn four_moment_examples() {
        let out = solve_four_moments(0.5, 0.5, 0.05, 0.0).unwrap();
        assert!(out.feasible);
        assert_relative_eq!(out.bar_alpha, 4.0, epsilon = 1e-12);
        for a in out.alpha {
            assert_relative_eq!(a, 1.0, epsilon = 1e-12);
        }
        assert!(matches!(
            solve_four_moments(0.5, 0.5, 0.30, 0.0),
            Err(Error::InfeasibleVariance { .. })
        ));
        let out = solve_four_moments(0.9, 0.1, 0.01, 0.5).unwrap();
        assert!(!out.feasible);
        assert!(out.alpha.iter().any(|&a| a <= 0.0));
    }

    #[test]
    fn three_moment_examples() {
        let out = solve_three_moments(0.5, 0.5, 0.0, 1.0).unwrap();
        for a in out.alpha {
            assert_relative_eq!(a, 1.0, epsilon = 1e-14);
        }
        let out = solve_three_moments(0.5, 0.5, 0.0, 2.0).unwrap();
        for a in out.alpha {
            assert_relative_eq!(a, 2.0, epsilon = 1e-14);
        }
        let m = moments_of(&p([2.0, 7.0, 3.0, 1.0]));
        let out = solve_three_moments(m.m1, m.m2, m.rho, 1.0).unwrap();
        for (got, want) in out.alpha.iter().zip([2.0, 7.0, 3.0, 1.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
        // ρ = −1 at equal means makes the shared denominator vanish
        assert!(matches!(
            solve_three_moments(0.5, 0.5, -1.0, 1.0),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn rho_bound_examples() {
        let b = rho_bounds(0.5, 0.5);
        assert_relative_eq!(b.lower, -1.0, epsilon = 1e-15);
        assert_relative_eq!(b.upper, 1.0, epsilon = 1e-15);
        let b = rho_bounds(0.3, 0.7);
        assert_relative_eq!(b.lower, -1.0, epsilon = 1e-14);
        assert_relative_eq!(b.upper, 3.0 / 7.0, epsilon = 1e-14);
        let b = rho_bounds(0.2, 0.2);
        assert_relative_eq!(b.lower, -0.25, epsilon = 1e-14);
        assert_relative_eq!(b.upper, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn raw_moments_accept_single_zero() {
        let m = moments_of_raw(&[0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(m.rho < 0.0);
        assert!(moments_of_raw(&[0.0, 0.0, 1.0, 1.0]).is_none());
    }

    proptest! {
        #[test]
        fn four_moment_round_trip(a in prop::array::uniform4(0.2f64..10.0)) {
            let m = moments_of(&p(a));
            let out = solve_four_moments(m.m1, m.m2, m.v1, m.rho).unwrap();
            prop_assert!(out.feasible);
            for (got, want) in out.alpha.iter().zip(a) {
                prop_assert!((got - want).abs() < 1e-9);
            }
        }

        #[test]
        fn three_moment_round_trip(a in prop::array::uniform4(0.2f64..10.0)) {
            let m = moments_of(&p(a));
            let out = solve_three_moments(m.m1, m.m2, m.rho, a[3]).unwrap();
            for (got, want) in out.alpha.iter().zip(a) {
                prop_assert!((got - want).abs() < 1e-9);
            }
        }

        #[test]
        fn at_most_one_nonpositive(
            m1 in 0.01f64..0.99, m2 in 0.01f64..0.99, frac in 0.01f64..0.99, rho in -1.0f64..1.0
        ) {
            let v1 = frac * m1 * (1.0 - m1);
            let out = solve_four_moments(m1, m2, v1, rho).unwrap();
            prop_assert!(out.bar_alpha > 0.0);
            prop_assert!(out.alpha.iter().filter(|&&a| a <= 0.0).count() <= 1);
        }
    }

    #[test]
    fn feasibility_matches_rho_interval_on_grid() {
        let grid = [0.05, 0.17, 0.3, 0.42, 0.5, 0.61, 0.77, 0.93];
        for &m1 in &grid {
            for &m2 in &grid {
                let bounds = rho_bounds(m1, m2);
                for k in 0..=40 {
                    let rho = -1.0 + 2.0 * k as f64 / 40.0;
                    if (rho - bounds.lower).abs() < 1e-9 || (rho - bounds.upper).abs() < 1e-9 {
                        continue;
                    }
                    for frac in [0.1, 0.5, 0.9] {
                        let v1 = frac * m1 * (1.0 - m1);
                        let out = solve_four_moments(m1, m2, v1, rho).unwrap();
                        assert_eq!(
                            out.feasible,
                            bounds.contains_strictly(rho),
                            "m1={m1} m2={m2} rho={rho}"
                        );
                    }
                }
            }
        }
    }
}
