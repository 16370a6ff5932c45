//! One-dimensional root finding and minimization.

use crate::scalar::Real;

/// Bisection for `f(x) = 0` on `[lo, hi]` where `f(lo) ≤ 0 ≤ f(hi)`
/// (increasing bracket). Stops once the bracket is narrower than `tol`.
pub fn bisect_increasing<T: Real, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T, tol: T) -> T {
    let half = T::lit(0.5);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + (hi - lo) * half;
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + (hi - lo) * half
}

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
///
/// Returns `(x_min, f_min)`.
pub fn golden_section_min<T: Real, F: Fn(T) -> T>(f: F, mut a: T, mut b: T, tol: T) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    let x = (a + b) * T::lit(0.5);
    let fx = f(x);
    // The interior probes may beat the midpoint on flat stretches.
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, cand| if cand.1 < best.1 { cand } else { best })
}
