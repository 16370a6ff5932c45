use serde::{Deserialize, Serialize};

use crate::bits::Bit;

/// Which bit a cheating Alice reveals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevealTarget {
    Fixed(Bit),
    /// Uniform, drawn only after the token has been sent.
    Random,
}

/// Fully scripted Alice, for probing individual checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomAlice {
    pub commit_input: u8,
    /// Token sent is `r^c ⊕ token_flip`.
    pub token_flip: Bit,
    pub reveal_bit: Bit,
    /// Output reported is `r^c ⊕ reveal_flip`.
    pub reveal_flip: Bit,
    /// Never send the reveal message.
    pub withhold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AliceStrategy {
    /// Inputs `b + 2` (`b` for the PR box), sends `q = r ⊕ a·b` with a
    /// uniform `a`, reveals truthfully.
    Honest { bit: Bit },
    /// Inputs the variant's cheat input, sends `q = r`, and later reveals
    /// the target bit together with the true `r`. Paired with
    /// [`alice_cheat_pair`](crate::devices::alice_cheat_pair) this is the
    /// midpoint-axis attack; with a classical pair it is the deterministic
    /// PR-box attack.
    OptimalCheat { target: RevealTarget },
    Custom(CustomAlice),
}

impl AliceStrategy {
    pub fn honest(bit: Bit) -> Self {
        AliceStrategy::Honest { bit }
    }

    pub fn cheat(target: RevealTarget) -> Self {
        AliceStrategy::OptimalCheat { target }
    }

    pub fn is_honest(&self) -> bool {
        matches!(self, AliceStrategy::Honest { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BobStrategy {
    #[default]
    Honest,
    /// Programs the boxes so that `r^c = s^c − 2` and guesses `b = q`.
    /// Run it against [`bob_cheat_pair`](crate::devices::bob_cheat_pair).
    GainCheatDeterministic,
    /// Honest devices; right after the commit Bob measures his own box with
    /// input 0 and guesses 0 iff the outcome equals `q`. In the PR variant
    /// he instead inputs `s¹ = 1` and guesses `q ⊕ r¹`.
    GainCheatDeviceDependent,
    /// Follows the protocol and guesses with a fair coin.
    GuessUniform,
}

impl BobStrategy {
    /// Only an honest Bob enforces the CHSH threshold during random
    /// selection; the guessing strategies proceed to the commit regardless.
    pub(crate) fn enforces_threshold(self) -> bool {
        matches!(self, BobStrategy::Honest)
    }

    pub fn name(self) -> &'static str {
        match self {
            BobStrategy::Honest => "honest",
            BobStrategy::GainCheatDeterministic => "gain_cheat_deterministic",
            BobStrategy::GainCheatDeviceDependent => "gain_cheat_device_dependent",
            BobStrategy::GuessUniform => "guess_uniform",
        }
    }
}
