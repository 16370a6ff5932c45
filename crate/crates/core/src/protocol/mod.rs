//! Protocol engines: the sequential protocol and its free-reveal,
//! large-office and PR-box variants.
//!
//! Every engine is a strictly sequential interleaving of Bob's and Alice's
//! moves against a [`DevicePair`](crate::DevicePair). Bob draws from stream
//! 0 and Alice from stream 1 of a ChaCha generator seeded with
//! [`ProtocolConfig::rng_seed`]; devices carry their own seeds. The same
//! config, strategies and devices therefore give the same [`Transcript`].

mod engine;
mod strategy;
mod transcript;

pub use engine::{
    bob_gain_cheat_main, gain_trial, run, run_free_reveal, run_large_office, run_main, run_pr,
};
pub use strategy::{AliceStrategy, BobStrategy, CustomAlice, RevealTarget};
pub use transcript::{BobPrivate, Commit, Reveal, RoundRecord, Transcript, Verdict};

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisError;
use crate::devices::DeviceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Main,
    FreeReveal,
    LargeOffice,
    Pr,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Main => "main",
            Variant::FreeReveal => "free_reveal",
            Variant::LargeOffice => "large_office",
            Variant::Pr => "pr",
        }
    }

    /// Input Alice feeds her box when she does not follow the honest
    /// encoding: 2 for the four-input boxes, 0 for the PR box.
    pub fn cheat_input(self) -> u8 {
        match self {
            Variant::Pr => 0,
            _ => 2,
        }
    }

    /// Offset added to the committed bit to form Alice's honest input.
    pub(crate) fn commit_offset(self) -> u8 {
        self.cheat_input()
    }
}

impl std::str::FromStr for Variant {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "main" => Ok(Variant::Main),
            "free_reveal" => Ok(Variant::FreeReveal),
            "large_office" => Ok(Variant::LargeOffice),
            "pr" => Ok(Variant::Pr),
            other => Err(ProtocolError::Config(format!("unknown variant '{other}'"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Public parameters agreed before a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Largest number of test rounds Bob may draw (number of test pairs in
    /// the large-office variant; unused by the PR variant).
    #[serde(rename = "N")]
    pub n: u64,
    pub i_threshold: f64,
    pub variant: Variant,
    pub rng_seed: u64,
}

impl ProtocolConfig {
    pub fn new(variant: Variant, n: u64, i_threshold: f64, rng_seed: u64) -> Self {
        Self { n, i_threshold, variant, rng_seed }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.i_threshold >= -4.0 && self.i_threshold <= 4.0) {
            return Err(ProtocolError::Config(format!(
                "threshold {} outside [-4, 4]",
                self.i_threshold
            )));
        }
        let min_n = match self.variant {
            Variant::Main | Variant::FreeReveal => 2,
            Variant::LargeOffice => 1,
            Variant::Pr => 0,
        };
        if self.n < min_n {
            return Err(ProtocolError::Config(format!(
                "N = {} too small for the {} variant",
                self.n, self.variant
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("engine for {expected} called with a {got} configuration")]
    VariantMismatch { expected: Variant, got: Variant },
    #[error("expected {expected} device pairs, got {got}")]
    PairCount { expected: u64, got: usize },
    #[error("{strategy} is not available in the {variant} variant")]
    Unsupported { strategy: &'static str, variant: Variant },
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}
