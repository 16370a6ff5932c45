//! Alice's control as a function of the CHSH value, from the two-outcome
//! midpoint strategy: control `cos²(θ/2)` at violation `I(θ)` where the
//! partner's axis offset `φ` is chosen to maximize `I`.

use serde::Serialize;

use super::search::bisect_increasing;
use super::AnalysisError;
use crate::scalar::Real;

fn check_angle<T: Real>(theta: T) -> Result<(), AnalysisError> {
    let slack = T::identity_tol();
    if theta >= -slack && theta <= T::FRAC_PI_4() + slack {
        Ok(())
    } else {
        Err(AnalysisError::AngleOutOfRange(theta.to_f64().unwrap_or(f64::NAN)))
    }
}

/// CHSH value of the cheating configuration for a given `(θ, φ)`:
/// `2cos(2θ−φ) − cos(4θ−φ) + cos φ`.
pub fn cheat_chsh<T: Real>(theta: T, phi: T) -> T {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    two * (two * theta - phi).cos() - (four * theta - phi).cos() + phi.cos()
}

/// The offset `φ` maximizing [`cheat_chsh`] at fixed `θ ∈ [0, π/4]`.
pub fn phi_opt<T: Real>(theta: T) -> Result<T, AnalysisError> {
    check_angle(theta)?;
    let two = T::lit(2.0);
    let s2 = (two * theta).sin();
    let arg = two * ((two * theta).cos() + s2 * s2) / (T::lit(6.0) - two * (T::lit(4.0) * theta).cos()).sqrt();
    Ok(arg.max(-T::one()).min(T::one()).acos())
}

/// `(I, control)` reached by the midpoint strategy at angle `θ`.
pub fn strategy_point<T: Real>(theta: T) -> Result<(T, T), AnalysisError> {
    let phi = phi_opt(theta)?;
    let half_cos = (theta * T::lit(0.5)).cos();
    Ok((cheat_chsh(theta, phi), half_cos * half_cos))
}

fn violation_at<T: Real>(theta: T) -> T {
    strategy_point(theta).map(|p| p.0).unwrap_or_else(|_| T::nan())
}

/// Alice's asymptotic control `C(I)`.
///
/// Inverts `θ ↦ I(θ)` (strictly increasing on `[0, π/4]`) by bisection.
/// Values below the local bound 2 clamp to 1; values within `1e-9` above
/// `2√2` clamp to `2√2`; anything larger is rejected.
pub fn control_of_violation<T: Real>(i: T) -> Result<T, AnalysisError> {
    let two = T::lit(2.0);
    let tsirelson = two * T::SQRT_2();
    let slack = T::lit(1e-9).max(T::epsilon() * T::lit(16.0));
    if i.is_nan() || i > tsirelson + slack {
        return Err(AnalysisError::SupraQuantum(i.to_f64().unwrap_or(f64::NAN)));
    }
    if i <= two {
        return Ok(T::one());
    }
    let top = strategy_point(T::FRAC_PI_4())?;
    if i >= top.0 {
        return Ok(top.1);
    }
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(4.0));
    let theta = bisect_increasing(|t| violation_at(t) - i, T::zero(), T::FRAC_PI_4(), tol);
    let h = (theta * T::lit(0.5)).cos();
    Ok(h * h)
}

/// One sample of the control curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow<T> {
    pub theta: T,
    pub violation: T,
    pub control: T,
}

/// Sampled control curve, ordered by increasing violation, with linear
/// interpolation between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlCurve<T> {
    rows: Vec<CurveRow<T>>,
}

impl<T: Real> ControlCurve<T> {
    /// `points` samples on a uniform grid of the strategy angle
    /// `θ ∈ [0, π/4]`; the first row is `(2, 1)` and the last
    /// `(2√2, cos²(π/8))`.
    pub fn sample(points: usize) -> Self {
        let points = points.max(2);
        let last = T::from_usize(points - 1).expect("point count fits the scalar");
        let rows = (0..points)
            .map(|j| {
                let theta = if j + 1 == points {
                    T::FRAC_PI_4()
                } else {
                    T::FRAC_PI_4() * T::from_usize(j).expect("index fits") / last
                };
                let (violation, control) = strategy_point(theta).expect("grid inside [0, pi/4]");
                CurveRow { theta, violation, control }
            })
            .collect();
        Self { rows }
    }

    pub fn rows(&self) -> &[CurveRow<T>] {
        &self.rows
    }

    /// Piecewise-linear interpolation; clamps outside the sampled range.
    pub fn interpolate(&self, i: T) -> T {
        let rows = &self.rows;
        if i <= rows[0].violation {
            return rows[0].control;
        }
        let last = rows[rows.len() - 1];
        if i >= last.violation {
            return last.control;
        }
        let k = rows.partition_point(|r| r.violation < i);
        let (a, b) = (rows[k - 1], rows[k]);
        let w = (i - a.violation) / (b.violation - a.violation);
        a.control + w * (b.control - a.control)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI, SQRT_2};

    /// Independent oracle: ternary search on a dense bracket around the best
    /// grid point of `φ ↦ cheat_chsh(θ, φ)`.
    fn argmax_phi(theta: f64) -> f64 {
        let n = 20_000;
        let grid = |k: usize| -PI + 2.0 * PI * k as f64 / n as f64;
        let best = (0..=n)
            .max_by(|&a, &b| cheat_chsh(theta, grid(a)).total_cmp(&cheat_chsh(theta, grid(b))))
            .unwrap();
        let (mut lo, mut hi) = (grid(best.saturating_sub(1)), grid((best + 1).min(n)));
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if cheat_chsh(theta, m1) < cheat_chsh(theta, m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        (lo + hi) / 2.0
    }

    #[test]
    fn phi_opt_endpoints() {
        assert!((phi_opt(FRAC_PI_4).unwrap() - FRAC_PI_4).abs() < 1e-12);
        assert_eq!(phi_opt(0.0).unwrap(), 0.0);
        assert!(phi_opt(-0.1).is_err());
        assert!(phi_opt(0.8).is_err());
    }

    #[test]
    fn phi_opt_matches_numerical_maximizer() {
        for k in 0..=20 {
            let theta = FRAC_PI_4 * k as f64 / 20.0;
            let oracle = argmax_phi(theta);
            let closed = phi_opt(theta).unwrap();
            assert!((oracle - closed).abs() < 1e-6, "theta {theta}: {oracle} vs {closed}");
        }
    }

    #[test]
    fn strategy_endpoints() {
        let (i, c) = strategy_point(FRAC_PI_4).unwrap();
        assert!((i - 2.0 * SQRT_2).abs() < 1e-12);
        assert!((c - FRAC_PI_8.cos().powi(2)).abs() < 1e-15);
        let (i0, c0) = strategy_point(0.0f64).unwrap();
        assert!((i0 - 2.0).abs() < 1e-15);
        assert_eq!(c0, 1.0);
    }

    #[test]
    fn strategy_matches_quantum_chsh() {
        use crate::quantum::{chsh_value, epr_state, ZxObservable as O};
        for k in 0..=16 {
            let theta = FRAC_PI_4 * k as f64 / 16.0;
            let phi = phi_opt(theta).unwrap();
            let a = [O::new(2.0 * theta), O::new(0.0)];
            let b = [O::new(2.0 * theta - phi), O::new(4.0 * theta - phi)];
            let (i, _) = strategy_point(theta).unwrap();
            assert!((chsh_value(&epr_state(), &a, &b) - i).abs() < 1e-12);
        }
    }

    #[test]
    fn violation_strictly_increasing() {
        let n = 10_000;
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=n {
            let (i, _) = strategy_point(FRAC_PI_4 * k as f64 / n as f64).unwrap();
            assert!(i > prev, "not increasing at step {k}");
            prev = i;
        }
    }

    #[test]
    fn control_values() {
        let c_top = control_of_violation(2.0 * SQRT_2).unwrap();
        assert!((c_top - 0.853_553_390_593_273_7).abs() < 1e-9);
        assert!((control_of_violation(2.0f64).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(control_of_violation(0.0).unwrap(), 1.0);
        assert_eq!(control_of_violation(-4.0).unwrap(), 1.0);
        assert!(control_of_violation(2.0 * SQRT_2 + 5e-10).is_ok());
        assert!(control_of_violation(2.9).is_err());
        assert!(control_of_violation(f64::NAN).is_err());
    }

    #[test]
    fn control_inverts_strategy() {
        for k in 0..=1000 {
            let theta = FRAC_PI_4 * k as f64 / 1000.0;
            let (i, c) = strategy_point(theta).unwrap();
            let back = control_of_violation(i).unwrap();
            assert!((back - c).abs() < 1e-8, "theta {theta}: {back} vs {c}");
        }
    }

    #[test]
    fn control_is_nonincreasing() {
        let mut prev = 1.0;
        for k in 0..=500 {
            let i = 2.0 + (2.0 * SQRT_2 - 2.0) * k as f64 / 500.0;
            let c = control_of_violation(i).unwrap();
            assert!(c <= prev + 1e-15);
            prev = c;
        }
    }

    #[test]
    fn curve_shape() {
        let curve = ControlCurve::<f64>::sample(200);
        let rows = curve.rows();
        assert_eq!(rows.len(), 200);
        assert!((rows[0].violation - 2.0).abs() < 1e-15 && rows[0].control == 1.0);
        assert!((rows[199].violation - 2.0 * SQRT_2).abs() < 1e-12);
        for w in rows.windows(2) {
            assert!(w[1].violation > w[0].violation);
            assert!(w[1].control <= w[0].control);
        }
        let mid = curve.interpolate(2.5);
        assert!((mid - control_of_violation(2.5).unwrap()).abs() < 1e-3);
    }

    #[test]
    fn single_precision_curve_endpoint() {
        let c = control_of_violation(2.0f32 * std::f32::consts::SQRT_2).unwrap();
        assert!((c - 0.853_553_4).abs() < 1e-5);
    }
}
