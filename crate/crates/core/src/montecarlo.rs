//! Seeded experiment harness.
//!
//! Trial `i` of an experiment with master seed `s` draws everything from
//! [`trial_rng(s, i)`](crate::stats::trial_rng): the protocol seed, the
//! device seeds and any party choices. Trials run on the ambient rayon pool
//! and are reduced through [`Tally::merge`], so the result does not depend
//! on the number of workers.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{azuma_tail, free_reveal_control};
use crate::bits::Bit;
use crate::devices::{
    alice_cheat_pair, classical_pair, counter_cheat_pair, honest_pair, pr_pair, DeviceError,
    DevicePair, DeviceSpec, MeasureRequest,
};
use crate::protocol::{
    gain_trial, run, AliceStrategy, BobStrategy, ProtocolConfig, ProtocolError, RevealTarget,
    Variant, Verdict,
};
use crate::stats::{trial_rng, Estimate, Tally};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonteCarloError {
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    GainDeterministic,
    GainDeviceDependent,
    GainPr,
    GainUniform,
    Control,
    Completeness,
    Azuma,
    CounterCheat,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::GainDeterministic,
        Scenario::GainDeviceDependent,
        Scenario::GainPr,
        Scenario::GainUniform,
        Scenario::Control,
        Scenario::Completeness,
        Scenario::Azuma,
        Scenario::CounterCheat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::GainDeterministic => "gain-deterministic",
            Scenario::GainDeviceDependent => "gain-device-dependent",
            Scenario::GainPr => "gain-pr",
            Scenario::GainUniform => "gain-uniform",
            Scenario::Control => "control",
            Scenario::Completeness => "completeness",
            Scenario::Azuma => "azuma",
            Scenario::CounterCheat => "counter-cheat",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = MonteCarloError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| MonteCarloError::UnknownScenario(s.to_string()))
    }
}

/// Scenario id, trial count, master seed and every parameter a scenario
/// may read. Unused parameters are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub trials: u64,
    pub seed: u64,
    pub theta: f64,
    pub noise_v: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub i_threshold: f64,
    pub variant: Variant,
    pub epsilon: f64,
    pub k: u64,
}

impl ExperimentSpec {
    /// Defaults: `θ = π/4`, `v = 1`, `N = 10`, `I_th = 2`, main variant,
    /// `ε = 1`, `k = 100`.
    pub fn new(scenario: Scenario, trials: u64, seed: u64) -> Self {
        Self {
            scenario,
            trials,
            seed,
            theta: std::f64::consts::FRAC_PI_4,
            noise_v: 1.0,
            n: 10,
            i_threshold: 2.0,
            variant: Variant::Main,
            epsilon: 1.0,
            k: 100,
        }
    }

    fn config(&self, rng_seed: u64) -> ProtocolConfig {
        ProtocolConfig::new(self.variant, self.n, self.i_threshold, rng_seed)
    }

    fn validate(&self) -> Result<(), MonteCarloError> {
        if self.trials == 0 {
            return Err(MonteCarloError::Usage("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// JSON result of one experiment. `mean`, `stderr` and `ci99` describe the
/// headline estimate; `secondary` holds the scenario's other estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub scenario: String,
    pub params: ExperimentSpec,
    pub trials: u64,
    pub mean: f64,
    pub stderr: f64,
    pub ci99: (f64, f64),
    pub analytic_reference: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub secondary: BTreeMap<String, Estimate>,
}

impl ExperimentResult {
    fn new(spec: &ExperimentSpec, headline: Estimate, analytic_reference: Option<f64>) -> Self {
        Self {
            scenario: spec.scenario.name().to_string(),
            params: *spec,
            trials: headline.trials,
            mean: headline.mean,
            stderr: headline.stderr,
            ci99: headline.ci99,
            analytic_reference,
            secondary: BTreeMap::new(),
        }
    }

    fn with(mut self, name: &str, e: Estimate) -> Self {
        self.secondary.insert(name.to_string(), e);
        self
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            stderr: self.stderr,
            trials: self.trials,
            ci99: self.ci99,
        }
    }
}

/// Runs `trials` trials in parallel. Each trial reports, per counter,
/// `Some(success)` or `None` when it does not count towards that estimate.
pub fn tally_trials<const K: usize, F>(trials: u64, f: F) -> Result<[Tally; K], MonteCarloError>
where
    F: Fn(u64) -> Result<[Option<bool>; K], MonteCarloError> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let outcome = f(i)?;
            let mut t = [Tally::default(); K];
            for (slot, o) in t.iter_mut().zip(outcome) {
                if let Some(success) = o {
                    slot.record(success);
                }
            }
            Ok(t)
        })
        .try_reduce(|| [Tally::default(); K], |a, b| {
            let mut out = a;
            for (x, y) in out.iter_mut().zip(b) {
                *x = x.merge(y);
            }
            Ok(out)
        })
}

/// Same reduction on a single thread, in trial order.
pub fn tally_trials_serial<const K: usize, F>(trials: u64, f: F) -> Result<[Tally; K], MonteCarloError>
where
    F: Fn(u64) -> Result<[Option<bool>; K], MonteCarloError>,
{
    let mut out = [Tally::default(); K];
    for i in 0..trials {
        for (slot, o) in out.iter_mut().zip(f(i)?) {
            if let Some(success) = o {
                slot.record(success);
            }
        }
    }
    Ok(out)
}

/// Runs `f` on a dedicated pool of `jobs` threads, or the global pool if
/// `jobs` is `None`.
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, MonteCarloError> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(MonteCarloError::Usage("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| MonteCarloError::Usage(e.to_string())),
    }
}

fn pr_gain_trial(master: u64, index: u64) -> Result<bool, MonteCarloError> {
    let mut t = trial_rng(master, index);
    let config = ProtocolConfig::new(Variant::Pr, 0, 0.0, t.next_u64());
    let mut pairs: Vec<Box<dyn DevicePair>> = vec![Box::new(pr_pair(t.next_u64()))];
    let bit = Bit::random(&mut t);
    let tr = run(&config, &mut pairs, &AliceStrategy::honest(bit), BobStrategy::GainCheatDeviceDependent)?;
    Ok(tr.bob_private.guess == Some(bit))
}

/// Bob's guessing probability against an honest Alice with uniform `b`.
pub fn estimate_gain(spec: &ExperimentSpec) -> Result<ExperimentResult, MonteCarloError> {
    spec.validate()?;
    let (reference, tallies) = match spec.scenario {
        Scenario::GainPr => (0.75, tally_trials(spec.trials, |i| Ok([Some(pr_gain_trial(spec.seed, i)?)]))?),
        sc => {
            let (strategy, reference) = match sc {
                Scenario::GainDeterministic => (BobStrategy::GainCheatDeterministic, 0.75),
                Scenario::GainDeviceDependent => (BobStrategy::GainCheatDeviceDependent, 0.75),
                Scenario::GainUniform => (BobStrategy::GuessUniform, 0.5),
                other => return Err(MonteCarloError::UnknownScenario(format!("{} is not a gain scenario", other.name()))),
            };
            (reference, tally_trials(spec.trials, |i| Ok([Some(gain_trial(strategy, spec.seed, i)?)]))?)
        }
    };
    Ok(ExperimentResult::new(spec, tallies[0].estimate(), Some(reference)))
}

fn build_pairs(
    variant: Variant,
    n: u64,
    seeds: &mut impl RngCore,
    make: impl Fn(u64) -> Result<Box<dyn DevicePair>, DeviceError>,
) -> Result<Vec<Box<dyn DevicePair>>, DeviceError> {
    let count = if variant == Variant::LargeOffice { n + 1 } else { 1 };
    (0..count).map(|_| make(seeds.next_u64())).collect()
}

fn passed_selection(tr: &crate::protocol::Transcript) -> bool {
    tr.observed_violation.map_or(true, |v| v >= tr.config.i_threshold)
}

/// Alice's control with the optimal cheat at `spec.theta`, reveal target
/// uniform. The headline estimate is conditional on passing random
/// selection; `unconditional` counts every run.
///
/// In the PR variant Alice uses the classical pair whose boxes always
/// output 0.
pub fn estimate_control(spec: &ExperimentSpec) -> Result<ExperimentResult, MonteCarloError> {
    spec.validate()?;
    let theta = spec.theta;
    alice_cheat_pair(theta, 0)?;
    let [conditional, unconditional] = tally_trials(spec.trials, |i| {
        let mut t = trial_rng(spec.seed, i);
        let config = spec.config(t.next_u64());
        let mut pairs = build_pairs(spec.variant, spec.n, &mut t, |seed| {
            Ok(match spec.variant {
                Variant::Pr => Box::new(classical_pair(&[Bit::ZERO; 4], &[Bit::ZERO; 4])?),
                _ => Box::new(alice_cheat_pair(theta, seed)?),
            })
        })?;
        let tr = run(&config, &mut pairs, &AliceStrategy::cheat(RevealTarget::Random), BobStrategy::Honest)?;
        let success = matches!(tr.verdict, Verdict::Accepted(_));
        Ok([passed_selection(&tr).then_some(success), Some(success)])
    })?;
    let c = (theta / 2.0).cos().powi(2);
    let reference = match spec.variant {
        Variant::Main | Variant::LargeOffice => c,
        Variant::FreeReveal => free_reveal_control(c).expect("cos² lies in [0, 1]"),
        Variant::Pr => 0.75,
    };
    Ok(ExperimentResult::new(spec, conditional.estimate(), Some(reference))
        .with("unconditional", unconditional.estimate()))
}

/// Honest parties on Werner boxes of visibility `spec.noise_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Completeness {
    /// Fraction of runs that failed the CHSH threshold.
    pub abort_rate: Estimate,
    /// Among runs that passed it, fraction accepted with the committed bit.
    pub conditional_correctness: Estimate,
}

pub fn honest_completeness(spec: &ExperimentSpec) -> Result<Completeness, MonteCarloError> {
    spec.validate()?;
    honest_pair(spec.noise_v, 0)?;
    let [aborted, correct] = tally_trials(spec.trials, |i| {
        let mut t = trial_rng(spec.seed, i);
        let config = spec.config(t.next_u64());
        let mut pairs = build_pairs(spec.variant, spec.n, &mut t, |seed| {
            Ok(match spec.variant {
                Variant::Pr => Box::new(pr_pair(seed)),
                _ => Box::new(honest_pair(spec.noise_v, seed)?),
            })
        })?;
        let bit = Bit::random(&mut t);
        let tr = run(&config, &mut pairs, &AliceStrategy::honest(bit), BobStrategy::Honest)?;
        let passed = passed_selection(&tr);
        Ok([Some(!passed), passed.then_some(tr.verdict == Verdict::Accepted(bit))])
    })?;
    Ok(Completeness {
        abort_rate: aborted.estimate(),
        conditional_correctness: correct.estimate(),
    })
}

fn completeness_result(spec: &ExperimentSpec) -> Result<ExperimentResult, MonteCarloError> {
    let c = honest_completeness(spec)?;
    let reference = (spec.noise_v == 1.0).then_some(1.0);
    Ok(ExperimentResult::new(spec, c.conditional_correctness, reference).with("abort_rate", c.abort_rate))
}

/// One cell of an Azuma grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AzumaCell {
    pub k: u64,
    pub epsilon: f64,
    /// Fraction of histories with `Ī_k − 2√2·v ≥ ε`.
    pub tail: Estimate,
    /// `exp(−kε²/2D²)`.
    pub bound: f64,
}

/// Empirical tail of the CHSH martingale on honest Werner boxes, for every
/// `(k, ε)` pair.
///
/// Each history runs `max(ks)` test rounds with uniform inputs; the cells
/// for smaller `k` read the running mean at round `k` of the same history.
/// For these boxes the conditional expectation of every round's indicator
/// is `2√2·v` whatever the past, so `Δ_k = Ī_k − 2√2·v`.
pub fn azuma_grid(
    device: &DeviceSpec,
    ks: &[u64],
    epsilons: &[f64],
    histories: u64,
    seed: u64,
) -> Result<Vec<AzumaCell>, MonteCarloError> {
    let DeviceSpec::Honest { noise_v } = *device else {
        return Err(MonteCarloError::Usage(
            "the Azuma experiment needs honest (Werner) boxes, whose per-round CHSH expectation is known".into(),
        ));
    };
    honest_pair(noise_v, 0)?;
    if ks.is_empty() || ks.contains(&0) {
        return Err(MonteCarloError::Usage("k must be at least 1".into()));
    }
    if epsilons.iter().any(|e| !(*e >= 0.0)) {
        return Err(MonteCarloError::Usage("epsilon must be nonnegative".into()));
    }
    if histories == 0 {
        return Err(MonteCarloError::Usage("need at least one history".into()));
    }
    let k_max = *ks.iter().max().expect("nonempty");
    let expected = 2.0 * SQRT_2 * noise_v;
    let cells = ks.len() * epsilons.len();

    let tallies: Vec<Tally> = (0..histories)
        .into_par_iter()
        .map(|h| -> Result<Vec<Tally>, MonteCarloError> {
            let mut t = trial_rng(seed, h);
            let mut pair = honest_pair(noise_v, t.next_u64())?;
            let mut out = vec![Tally::default(); cells];
            let mut sum = 0i64;
            for round in 1..=k_max {
                let s0: u8 = t.gen_range(0..2);
                let s1: u8 = t.gen_range(0..2);
                let r0 = pair.measure(MeasureRequest::new(0, s0, round))?;
                let r1 = pair.measure(MeasureRequest::new(1, s1, round))?;
                sum += if (r0.as_u8() ^ r1.as_u8() ^ (s0 & s1)) == 0 { 1 } else { -1 };
                for (ki, &k) in ks.iter().enumerate() {
                    if k == round {
                        let delta = 4.0 * sum as f64 / k as f64 - expected;
                        for (ei, &eps) in epsilons.iter().enumerate() {
                            out[ki * epsilons.len() + ei].record(delta >= eps);
                        }
                    }
                }
            }
            Ok(out)
        })
        .try_reduce(
            || vec![Tally::default(); cells],
            |a, b| Ok(a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()),
        )?;

    let mut out = Vec::with_capacity(cells);
    for (ki, &k) in ks.iter().enumerate() {
        for (ei, &epsilon) in epsilons.iter().enumerate() {
            out.push(AzumaCell {
                k,
                epsilon,
                tail: tallies[ki * epsilons.len() + ei].estimate(),
                bound: azuma_tail(k, epsilon),
            });
        }
    }
    Ok(out)
}

/// Single `(k, ε)` cell of [`azuma_grid`].
pub fn azuma_empirical(
    device: &DeviceSpec,
    k: u64,
    epsilon: f64,
    histories: u64,
    seed: u64,
) -> Result<AzumaCell, MonteCarloError> {
    Ok(azuma_grid(device, &[k], &[epsilon], histories, seed)?[0])
}

/// Mean CHSH indicator over `histories × rounds` test rounds with uniform
/// inputs, each history on a freshly built pair. Rounds of a memoryless
/// pair are independent, so the usual `s/√n` error applies.
pub fn empirical_chsh(
    device: &DeviceSpec,
    histories: u64,
    rounds: u64,
    seed: u64,
) -> Result<Estimate, MonteCarloError> {
    if histories == 0 || rounds == 0 {
        return Err(MonteCarloError::Usage("need at least one round".into()));
    }
    let (plus, total) = (0..histories)
        .into_par_iter()
        .map(|h| -> Result<(u64, u64), MonteCarloError> {
            let mut t = trial_rng(seed, h);
            let mut pair = device.build(t.next_u64())?;
            let mut plus = 0;
            for round in 1..=rounds {
                let s0: u8 = t.gen_range(0..2);
                let s1: u8 = t.gen_range(0..2);
                let r0 = pair.measure(MeasureRequest::new(0, s0, round))?;
                let r1 = pair.measure(MeasureRequest::new(1, s1, round))?;
                plus += ((r0.as_u8() ^ r1.as_u8() ^ (s0 & s1)) == 0) as u64;
            }
            Ok((plus, rounds))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let sum = 4.0 * (2.0 * plus as f64 - total as f64);
    Ok(Estimate::from_moments(sum, 16.0 * total as f64, total))
}

/// Outcome of [`counter_cheat_demo`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterCheat {
    /// Fraction of all runs in which Alice revealed her target.
    pub overall: Estimate,
    /// Fraction of runs in which Bob drew `n = N`.
    pub drew_last: Estimate,
    /// Success among runs with `n = N` that passed random selection.
    pub conditional_on_last: Estimate,
}

/// Main protocol on boxes that answer 0 on their `(N+1)`-th use, against
/// an Alice who commits with input 2, sends `q = r^c` and reveals a uniform
/// target.
pub fn counter_cheat_demo(
    n: u64,
    i_threshold: f64,
    trials: u64,
    seed: u64,
) -> Result<CounterCheat, MonteCarloError> {
    if n < 2 {
        return Err(MonteCarloError::Usage(format!("N must exceed 1, got {n}")));
    }
    if trials == 0 {
        return Err(MonteCarloError::Usage("trials must be at least 1".into()));
    }
    let [overall, drew_last, conditional] = tally_trials(trials, |i| {
        let mut t = trial_rng(seed, i);
        let config = ProtocolConfig::new(Variant::Main, n, i_threshold, t.next_u64());
        let mut pairs: Vec<Box<dyn DevicePair>> = vec![Box::new(counter_cheat_pair(n + 1, t.next_u64())?)];
        let tr = run(&config, &mut pairs, &AliceStrategy::cheat(RevealTarget::Random), BobStrategy::Honest)?;
        let success = matches!(tr.verdict, Verdict::Accepted(_));
        let last = tr.bob_private.n == Some(n);
        Ok([Some(success), Some(last), (last && passed_selection(&tr)).then_some(success)])
    })?;
    Ok(CounterCheat {
        overall: overall.estimate(),
        drew_last: drew_last.estimate(),
        conditional_on_last: conditional.estimate(),
    })
}

/// Dispatches on `spec.scenario`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, MonteCarloError> {
    spec.validate()?;
    match spec.scenario {
        Scenario::GainDeterministic | Scenario::GainDeviceDependent | Scenario::GainPr | Scenario::GainUniform => {
            estimate_gain(spec)
        }
        Scenario::Control => estimate_control(spec),
        Scenario::Completeness => completeness_result(spec),
        Scenario::Azuma => {
            let cell = azuma_empirical(
                &DeviceSpec::Honest { noise_v: spec.noise_v },
                spec.k,
                spec.epsilon,
                spec.trials,
                spec.seed,
            )?;
            Ok(ExperimentResult::new(spec, cell.tail, Some(cell.bound)))
        }
        Scenario::CounterCheat => {
            let c = counter_cheat_demo(spec.n, spec.i_threshold, spec.trials, spec.seed)?;
            Ok(ExperimentResult::new(spec, c.overall, Some(1.0 / spec.n as f64))
                .with("drew_last", c.drew_last)
                .with("conditional_on_last", c.conditional_on_last))
        }
    }
}
