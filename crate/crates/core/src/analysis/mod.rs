//! Closed-form and numerical security quantities.

mod bound;
mod chsh;
mod control;
mod polytope;
pub mod search;

pub use bound::{
    azuma_tail, free_reveal_control, k0, martingale_increment_bound, pcont_bound, q_epsilon,
    BoundInputs, BoundResult, ThresholdSchedule,
};
pub use chsh::{chsh_indicator, running_violation};
pub use control::{
    cheat_chsh, control_of_violation, phi_opt, strategy_point, ControlCurve, CurveRow,
};
pub use polytope::{
    gain_objective, max_gain_objective, max_pr_control_objective, ns_vertices,
    pr_control_objective, NsBox, NsBoxError, VertexKind,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("cheat angle {0} outside [0, pi/4]")]
    AngleOutOfRange(f64),
    #[error("CHSH value {0} exceeds the quantum bound 2*sqrt(2)")]
    SupraQuantum(f64),
    #[error("round record is missing {0}")]
    IncompleteRecord(&'static str),
    #[error("CHSH indicator needs binary inputs, got ({0}, {1})")]
    NonBinaryInput(u8, u8),
    #[error("running violation of an empty round list")]
    NoRounds,
    #[error("invalid bound inputs: {0}")]
    BoundInputs(String),
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
}
