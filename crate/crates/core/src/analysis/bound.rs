//! Finite-N upper bound on Alice's control.
//!
//! Combines the asymptotic control curve with an Azuma–Hoeffding tail on
//! the gap between observed and expected CHSH averages. The martingale
//! increments are bounded by `D = 4 + 2√2`.

use serde::{Deserialize, Serialize};

use super::control::control_of_violation;
use super::search::golden_section_min;
use super::AnalysisError;
use crate::scalar::Real;

/// `D = 4 + 2√2`, the bound on a single martingale increment.
pub fn martingale_increment_bound<T: Real>() -> T {
    T::lit(4.0) + T::lit(2.0) * T::SQRT_2()
}

fn exponent_rate<T: Real>(epsilon: T) -> T {
    let d = martingale_increment_bound::<T>();
    epsilon * epsilon / (T::lit(2.0) * d * d)
}

/// `exp(−kε²/2D²)`.
pub fn azuma_tail<T: Real>(k: u64, epsilon: T) -> T {
    let k = T::from_u64(k).expect("k fits the scalar");
    (-k * exponent_rate(epsilon)).exp()
}

/// `⌈(N−1)·C(I_th)⌉`.
pub fn k0<T: Real>(n: u64, i_threshold: T) -> Result<u64, AnalysisError> {
    let c = control_of_violation(i_threshold)?;
    let scaled = T::from_u64(n.saturating_sub(1)).expect("N fits the scalar") * c;
    Ok(scaled.ceil().to_u64().unwrap_or(0))
}

/// Closed form of `Σ_{k=K0}^{N−1} exp(−kε²/2D²)`:
/// `[e^{−K0 x} − e^{−N x}] / [1 − e^{−x}]` with `x = ε²/2D²`, evaluated
/// through `expm1` so small `ε` does not cancel. At `ε = 0` this is
/// `N − K0`.
pub fn q_epsilon<T: Real>(n: u64, k0: u64, epsilon: T) -> T {
    let span = T::from_u64(n.saturating_sub(k0)).expect("N fits the scalar");
    let x = exponent_rate(epsilon);
    if x == T::zero() {
        return span;
    }
    let k0 = T::from_u64(k0).expect("K0 fits the scalar");
    (-k0 * x).exp() * (-(-span * x).exp_m1()) / (-(-x).exp_m1())
}

/// Two threshold schedules `I_th(N)`. They differ at finite `N` and agree asymptotically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSchedule {
    /// `2√2 (1 − 1/√N)`.
    #[default]
    Caption,
    /// `2√2 − 1/√N`.
    Body,
}

impl ThresholdSchedule {
    pub fn threshold<T: Real>(self, n: u64) -> T {
        let tsirelson = T::lit(2.0) * T::SQRT_2();
        let inv_sqrt = T::one() / T::from_u64(n).expect("N fits the scalar").sqrt();
        match self {
            ThresholdSchedule::Caption => tsirelson * (T::one() - inv_sqrt),
            ThresholdSchedule::Body => tsirelson - inv_sqrt,
        }
    }
}

/// Inputs of [`pcont_bound`]: `N`, `I_th`, and the ε-search settings
/// (coarse grid step, then golden-section refinement to `refine_tol`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs<T> {
    pub n: u64,
    pub i_threshold: T,
    pub grid_step: T,
    pub refine_tol: T,
}

impl<T: Real> BoundInputs<T> {
    pub fn new(n: u64, i_threshold: T) -> Self {
        Self {
            n,
            i_threshold,
            grid_step: T::lit(1e-3),
            refine_tol: T::lit(1e-6),
        }
    }

    pub fn scheduled(n: u64, schedule: ThresholdSchedule) -> Self {
        Self::new(n, schedule.threshold(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundResult<T> {
    /// Clamped to `[0, 1]`.
    pub bound: T,
    /// Value before clamping; may exceed 1 for small `N`.
    pub unclamped: T,
    pub epsilon_star: T,
    pub k0: u64,
}

/// `min(1, (N−1)/N · min_ε [C(I_th−ε) + (1−C(I_th−ε))·Q(ε)] + 1/N)`.
///
/// Only `ε ∈ [0, I_th − 2]` is searched: beyond it `C(I_th − ε) = 1` and
/// the bracket equals 1, which the endpoint already attains. Thresholds at
/// or below 2 have `C = 1` everywhere and give the trivial bound 1.
pub fn pcont_bound<T: Real>(inputs: &BoundInputs<T>) -> Result<BoundResult<T>, AnalysisError> {
    let BoundInputs { n, i_threshold, grid_step, refine_tol } = *inputs;
    if n < 2 {
        return Err(AnalysisError::BoundInputs(format!("N must exceed 1, got {n}")));
    }
    if !(grid_step > T::zero()) || !(refine_tol > T::zero()) {
        return Err(AnalysisError::BoundInputs("search steps must be positive".into()));
    }
    let k0 = k0(n, i_threshold)?;
    let objective = |eps: T| -> T {
        let c = control_of_violation(i_threshold - eps).unwrap_or(T::one());
        c + (T::one() - c) * q_epsilon(n, k0, eps)
    };

    let span = (i_threshold - T::lit(2.0)).max(T::zero());
    let steps = (span / grid_step).floor().to_usize().unwrap_or(0);
    let mut grid: Vec<T> = (0..=steps)
        .map(|j| T::from_usize(j).expect("grid index fits") * grid_step)
        .collect();
    if grid.last().copied() != Some(span) {
        grid.push(span);
    }
    let values: Vec<T> = grid.iter().map(|&e| objective(e)).collect();
    let best = (0..grid.len())
        .min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal))
        .expect("grid is nonempty");
    let (mut eps_star, mut f_star) = (grid[best], values[best]);
    if grid.len() > 1 {
        let lo = grid[best.saturating_sub(1)];
        let hi = grid[(best + 1).min(grid.len() - 1)];
        let (e, f) = golden_section_min(objective, lo, hi, refine_tol);
        if f < f_star {
            eps_star = e;
            f_star = f;
        }
    }

    let n_t = T::from_u64(n).expect("N fits the scalar");
    let unclamped = (n_t - T::one()) / n_t * f_star + T::one() / n_t;
    Ok(BoundResult {
        bound: unclamped.min(T::one()).max(T::zero()),
        unclamped,
        epsilon_star: eps_star,
        k0,
    })
}

/// Control after letting Alice choose the reveal time freely:
/// `p ↦ (p + 1)/2`.
pub fn free_reveal_control<T: Real>(p: T) -> Result<T, AnalysisError> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(AnalysisError::Probability(p.to_f64().unwrap_or(f64::NAN)));
    }
    Ok((p + T::one()) * T::lit(0.5))
}
