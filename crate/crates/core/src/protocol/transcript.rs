use serde::{Deserialize, Serialize};

use super::{ProtocolConfig, Variant};
use crate::analysis::{running_violation, AnalysisError};
use crate::bits::Bit;

/// Inputs and outputs of one round; fields are absent for boxes not
/// queried in that round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoundRecord {
    pub s0: Option<u8>,
    pub s1: Option<u8>,
    pub r0: Option<Bit>,
    pub r1: Option<Bit>,
}

impl RoundRecord {
    pub fn full(s0: u8, s1: u8, r0: Bit, r1: Bit) -> Self {
        Self {
            s0: Some(s0),
            s1: Some(s1),
            r0: Some(r0),
            r1: Some(r1),
        }
    }
}

/// Values only Bob knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BobPrivate {
    /// Number of test rounds (index of the committed pair in the
    /// large-office variant). Absent in the PR variant.
    pub n: Option<u64>,
    /// Box handed to Alice.
    pub c: Option<Bit>,
    /// Second coin of the free-reveal variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Bit>,
    /// A cheating Bob's guess of the committed bit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guess: Option<Bit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commit {
    /// Absent when Alice is not committing honestly to a bit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_committed: Option<Bit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Bit>,
    pub q: Bit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reveal {
    pub b_revealed: Bit,
    pub r_c: Bit,
    /// Bob's input to his remaining box at the commit round, if he made one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_cbar: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_cbar: Option<Bit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accepted(Bit),
    AbortLowViolation,
    AbortTokenMismatch,
    AbortCorrelationMismatch,
    AbortTimeout,
}

impl Verdict {
    pub fn accepted(self) -> Option<Bit> {
        match self {
            Verdict::Accepted(b) => Some(b),
            _ => None,
        }
    }
}

/// Complete record of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub variant: Variant,
    pub config: ProtocolConfig,
    /// Test rounds Bob used for his CHSH estimate, in order.
    pub rounds: Vec<RoundRecord>,
    pub bob_private: BobPrivate,
    /// Absent when the run stopped during random selection.
    pub commit: Option<Commit>,
    /// Absent when Alice never sent the reveal message.
    pub reveal: Option<Reveal>,
    pub verdict: Verdict,
    /// Mean CHSH indicator over `rounds`; absent when no test was run.
    pub observed_violation: Option<f64>,
}

impl Transcript {
    pub fn test_round_count(&self) -> usize {
        self.rounds.len()
    }

    /// Recomputes the violation from `rounds`.
    pub fn recompute_violation(&self) -> Result<Option<f64>, AnalysisError> {
        if self.rounds.is_empty() {
            return Ok(None);
        }
        running_violation(&self.rounds).map(Some)
    }

    /// Stored violation matches the rounds, and acceptance implies the
    /// checks that apply actually passed.
    pub fn is_self_consistent(&self) -> bool {
        if self.recompute_violation().ok() != Some(self.observed_violation) {
            return false;
        }
        let Verdict::Accepted(bit) = self.verdict else {
            return true;
        };
        let (Some(commit), Some(reveal)) = (self.commit, self.reveal) else {
            return false;
        };
        if reveal.b_revealed != bit {
            return false;
        }
        let token_ok = commit.q == reveal.r_c || commit.q == reveal.r_c ^ reveal.b_revealed;
        let correlation_ok = match (self.variant, reveal.s_cbar, reveal.r_cbar) {
            (Variant::Pr, Some(s1), Some(r1)) => {
                reveal.r_c ^ r1 == Bit::from(bit.as_u8() & s1 == 1)
            }
            (Variant::Pr, _, _) => false,
            (_, Some(s), Some(r)) if s == bit.as_u8() => r == reveal.r_c,
            // Bob's remaining box was measured with a different input, so
            // only the token binds.
            (_, Some(_), Some(_)) => true,
            _ => false,
        };
        let violation_ok = match self.variant {
            Variant::Pr => true,
            _ => self
                .observed_violation
                .map_or(false, |v| v >= self.config.i_threshold),
        };
        token_ok && correlation_ok && (violation_ok || !self.bob_enforced_threshold())
    }

    /// A guessing Bob records his guess and does not enforce the threshold.
    fn bob_enforced_threshold(&self) -> bool {
        self.bob_private.guess.is_none()
    }
}
