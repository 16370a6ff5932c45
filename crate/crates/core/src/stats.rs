use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator for trial `index` of an experiment seeded with `master`.
///
/// Each trial gets its own ChaCha stream, so the sequence a trial sees does
/// not depend on how trials are scheduled across workers.
pub fn trial_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.5758293035489004;

/// Success/trial counter. Merging is associative and commutative, so
/// partial tallies from parallel workers can be combined in any order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub successes: u64,
    pub trials: u64,
}

impl Tally {
    pub fn record(&mut self, success: bool) {
        self.trials += 1;
        self.successes += success as u64;
    }

    pub fn merge(self, other: Tally) -> Tally {
        Tally {
            successes: self.successes + other.successes,
            trials: self.trials + other.trials,
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate::bernoulli(self.successes, self.trials)
    }
}

/// Point estimate with its standard error and a 99% normal-approximation
/// interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub ci99: (f64, f64),
}

impl Estimate {
    /// Bernoulli proportion; `stderr = √(p(1−p)/n)`. With zero trials the
    /// mean is NaN.
    pub fn bernoulli(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                trials,
                ci99: (f64::NAN, f64::NAN),
            };
        }
        let n = trials as f64;
        let mean = successes as f64 / n;
        let stderr = (mean * (1.0 - mean) / n).sqrt();
        Self::with_stderr(mean, stderr, trials)
    }

    /// Sample mean of real-valued observations with the usual `s/√n` error.
    pub fn from_moments(sum: f64, sum_sq: f64, trials: u64) -> Self {
        let n = trials as f64;
        let mean = sum / n;
        let var = if trials > 1 {
            ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self::with_stderr(mean, (var / n).sqrt(), trials)
    }

    fn with_stderr(mean: f64, stderr: f64, trials: u64) -> Self {
        Self {
            mean,
            stderr,
            trials,
            ci99: (mean - Z99 * stderr, mean + Z99 * stderr),
        }
    }

    /// `|mean − target| ≤ k·stderr`.
    pub fn within_sigma(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }

    pub fn ci_contains(&self, x: f64) -> bool {
        self.ci99.0 <= x && x <= self.ci99.1
    }
}
