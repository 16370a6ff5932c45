//! Simulator and security analysis for a device-independent bit commitment
//! protocol built on sequential CHSH testing.
//!
//! The crate is split along the lines of the protocol itself:
//!
//! - [`quantum`]: two-qubit states, zx-plane observables, joint outcome
//!   distributions and CHSH values.
//! - [`devices`]: black-box device pairs (honest, noisy, adversarial, PR,
//!   classical) behind the [`DevicePair`] measure interface.
//! - [`protocol`]: engines for the sequential protocol and its free-reveal,
//!   large-office and PR-box variants.
//! - [`analysis`]: the control curve, the finite-N bound, the Azuma tail
//!   and no-signaling polytope maximization.
//! - [`montecarlo`]: seeded, parallel experiment harness.
//! - [`report`]: CSV/JSON emitters used by the command-line front end.
//!
//! The numerical core is generic over the scalar type. Floating-point code
//! takes any [`Real`] (`f32`/`f64`); the polytope code also accepts exact
//! rationals. The aliases below fix the common choices.

pub mod analysis;
pub mod bits;
pub mod devices;
pub mod montecarlo;
pub mod protocol;
pub mod quantum;
pub mod report;
pub mod scalar;
pub mod stats;

pub use bits::Bit;
pub use devices::{DevicePair, MeasureRequest};
pub use scalar::Real;
pub use stats::{Estimate, Tally};

/// Double-precision two-qubit state.
pub type State = quantum::TwoQubitState<f64>;
/// Single-precision two-qubit state.
pub type StateF32 = quantum::TwoQubitState<f32>;
/// Double-precision zx-plane observable.
pub type Observable = quantum::ZxObservable<f64>;
/// Single-precision zx-plane observable.
pub type ObservableF32 = quantum::ZxObservable<f32>;
/// No-signaling box with floating-point entries.
pub type NsBoxF64 = analysis::NsBox<f64>;
/// No-signaling box with exact rational entries.
pub type ExactNsBox = analysis::NsBox<num_rational::Rational64>;
/// Control curve sampled in double precision.
pub type ControlCurve = analysis::ControlCurve<f64>;
