use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar the numerical core is written against: `f32` or `f64`.
///
/// The tolerances scale with the precision of the type. For `f64` they are
/// the values the state invariants are stated in.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance for identities that hold exactly in real arithmetic
    /// (hermiticity, unit trace, normalization).
    fn identity_tol() -> Self;

    /// Tolerance on negative eigenvalues when checking positivity.
    fn psd_tol() -> Self;

    /// Shorthand for a literal that is exactly representable or close enough.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits the scalar type")
    }
}

impl Real for f64 {
    fn identity_tol() -> Self {
        1e-12
    }

    fn psd_tol() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn identity_tol() -> Self {
        1e-5
    }

    fn psd_tol() -> Self {
        1e-5
    }
}
