use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::strategy::{AliceStrategy, BobStrategy, RevealTarget};
use super::transcript::{BobPrivate, Commit, Reveal, RoundRecord, Transcript, Verdict};
use super::{ProtocolConfig, ProtocolError, Variant};
use crate::analysis::running_violation;
use crate::bits::Bit;
use crate::devices::{bob_cheat_pair, honest_pair, DevicePair, MeasureRequest};
use crate::stats::{trial_rng, Estimate, Tally};

fn party_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn expect_variant(config: &ProtocolConfig, expected: Variant) -> Result<(), ProtocolError> {
    if config.variant != expected {
        return Err(ProtocolError::VariantMismatch { expected, got: config.variant });
    }
    config.validate()
}

/// What Alice has done by the end of the commit phase, and what she will
/// send at reveal time.
struct AliceCommit {
    commit: Commit,
    /// `(bit, reported output)`; `None` if she withholds.
    reveal: Option<(Bit, Bit)>,
}

fn alice_commit(
    strategy: &AliceStrategy,
    variant: Variant,
    rng: &mut ChaCha8Rng,
    mut measure: impl FnMut(u8) -> Result<Bit, ProtocolError>,
) -> Result<AliceCommit, ProtocolError> {
    Ok(match *strategy {
        AliceStrategy::Honest { bit } => {
            let r = measure(variant.commit_offset() + bit.as_u8())?;
            let a = Bit::random(rng);
            AliceCommit {
                commit: Commit { b_committed: Some(bit), a: Some(a), q: r ^ (a & bit) },
                reveal: Some((bit, r)),
            }
        }
        AliceStrategy::OptimalCheat { target } => {
            let r = measure(variant.cheat_input())?;
            let t = match target {
                RevealTarget::Fixed(t) => t,
                RevealTarget::Random => Bit::random(rng),
            };
            AliceCommit {
                commit: Commit { b_committed: None, a: None, q: r },
                reveal: Some((t, r)),
            }
        }
        AliceStrategy::Custom(c) => {
            let r = measure(c.commit_input)?;
            AliceCommit {
                commit: Commit { b_committed: None, a: None, q: r ^ c.token_flip },
                reveal: (!c.withhold).then_some((c.reveal_bit, r ^ c.reveal_flip)),
            }
        }
    })
}

fn token_ok(q: Bit, bit: Bit, r: Bit) -> bool {
    q == r || q == r ^ bit
}

fn measure(pair: &mut dyn DevicePair, box_id: usize, input: u8, round: u64) -> Result<Bit, ProtocolError> {
    Ok(pair.measure(MeasureRequest::new(box_id, input, round))?)
}

/// Test rounds `1..=n` with uniform binary inputs on both boxes.
fn test_rounds(pair: &mut dyn DevicePair, n: u64, rng: &mut ChaCha8Rng) -> Result<Vec<RoundRecord>, ProtocolError> {
    let mut rounds = Vec::with_capacity(n as usize);
    for k in 1..=n {
        let s0 = Bit::random(rng).as_u8();
        let s1 = Bit::random(rng).as_u8();
        let r0 = measure(pair, 0, s0, k)?;
        let r1 = measure(pair, 1, s1, k)?;
        rounds.push(RoundRecord::full(s0, s1, r0, r1));
    }
    Ok(rounds)
}

fn aborted_in_selection(config: &ProtocolConfig, rounds: Vec<RoundRecord>, bob: BobPrivate, violation: f64) -> Transcript {
    Transcript {
        variant: config.variant,
        config: *config,
        rounds,
        bob_private: bob,
        commit: None,
        reveal: None,
        verdict: Verdict::AbortLowViolation,
        observed_violation: Some(violation),
    }
}

fn unsupported(strategy: BobStrategy, variant: Variant) -> ProtocolError {
    ProtocolError::Unsupported { strategy: strategy.name(), variant }
}

/// Sequential protocol and its free-reveal modification share everything
/// except Bob's extra coin `d`.
fn run_sequential(
    config: &ProtocolConfig,
    pair: &mut dyn DevicePair,
    alice: &AliceStrategy,
    bob: BobStrategy,
    free_reveal: bool,
) -> Result<Transcript, ProtocolError> {
    if free_reveal && bob == BobStrategy::GainCheatDeviceDependent {
        return Err(unsupported(bob, config.variant));
    }
    let mut bob_rng = party_rng(config.rng_seed, 0);
    let mut alice_rng = party_rng(config.rng_seed, 1);

    // Random selection.
    let n = bob_rng.gen_range(1..=config.n);
    let rounds = test_rounds(pair, n, &mut bob_rng)?;
    let violation = running_violation(&rounds)?;
    let mut private = BobPrivate { n: Some(n), ..Default::default() };
    if bob.enforces_threshold() && violation < config.i_threshold {
        return Ok(aborted_in_selection(config, rounds, private, violation));
    }
    let c = Bit::random(&mut bob_rng);
    private.c = Some(c);
    let cbar = (!c).as_usize();
    let commit_round = n + 1;
    // Bob's own measurement on the box he kept, at the commit round.
    let mut kept: Option<(u8, Bit)> = None;
    if free_reveal {
        let d = Bit::random(&mut bob_rng);
        private.d = Some(d);
        kept = Some((d.as_u8(), measure(pair, cbar, d.as_u8(), commit_round)?));
    }

    // Commit.
    let ac = alice_commit(alice, config.variant, &mut alice_rng, |s| {
        measure(pair, c.as_usize(), s, commit_round)
    })?;
    let q = ac.commit.q;
    private.guess = match bob {
        BobStrategy::Honest => None,
        BobStrategy::GainCheatDeterministic => Some(q),
        BobStrategy::GainCheatDeviceDependent => {
            let r = measure(pair, cbar, 0, commit_round)?;
            kept = Some((0, r));
            Some(Bit::from(r != q))
        }
        BobStrategy::GuessUniform => Some(Bit::random(&mut bob_rng)),
    };

    let mut transcript = Transcript {
        variant: config.variant,
        config: *config,
        rounds,
        bob_private: private,
        commit: Some(ac.commit),
        reveal: None,
        verdict: Verdict::AbortTimeout,
        observed_violation: Some(violation),
    };

    // Reveal.
    let Some((bit, r_c)) = ac.reveal else {
        return Ok(transcript);
    };
    let mut reveal = Reveal { b_revealed: bit, r_c, s_cbar: None, r_cbar: None };
    if !token_ok(q, bit, r_c) {
        transcript.reveal = Some(reveal);
        transcript.verdict = Verdict::AbortTokenMismatch;
        return Ok(transcript);
    }
    let (s_cbar, r_cbar) = match kept {
        Some(k) => k,
        None => (bit.as_u8(), measure(pair, cbar, bit.as_u8(), commit_round)?),
    };
    reveal.s_cbar = Some(s_cbar);
    reveal.r_cbar = Some(r_cbar);
    transcript.reveal = Some(reveal);
    // When Bob's box saw a different input than `b`, the correlation test
    // cannot be run and the token alone decides.
    transcript.verdict = if s_cbar == bit.as_u8() && r_cbar != r_c {
        Verdict::AbortCorrelationMismatch
    } else {
        Verdict::Accepted(bit)
    };
    Ok(transcript)
}

/// The sequential protocol: random selection over `n ≤ N` test rounds,
/// commit at round `n + 1` on box `c`, reveal checked against box `c̄` at
/// the same round.
pub fn run_main(
    config: &ProtocolConfig,
    pair: &mut dyn DevicePair,
    alice: &AliceStrategy,
    bob: BobStrategy,
) -> Result<Transcript, ProtocolError> {
    expect_variant(config, Variant::Main)?;
    run_sequential(config, pair, alice, bob, false)
}

/// Free reveal time: Bob measures box `c̄` with a coin `d` during random
/// selection and can only test the correlation when `d = b`.
pub fn run_free_reveal(
    config: &ProtocolConfig,
    pair: &mut dyn DevicePair,
    alice: &AliceStrategy,
    bob: BobStrategy,
) -> Result<Transcript, ProtocolError> {
    expect_variant(config, Variant::FreeReveal)?;
    run_sequential(config, pair, alice, bob, true)
}

/// Large office: `N + 1` pairs, each used once. Alice gets box `c` of pair
/// `n`; at reveal time Bob measures every other pair and box `c̄` of pair
/// `n` in one simultaneous event.
pub fn run_large_office(
    config: &ProtocolConfig,
    pairs: &mut [Box<dyn DevicePair>],
    alice: &AliceStrategy,
    bob: BobStrategy,
) -> Result<Transcript, ProtocolError> {
    expect_variant(config, Variant::LargeOffice)?;
    if pairs.len() as u64 != config.n + 1 {
        return Err(ProtocolError::PairCount { expected: config.n + 1, got: pairs.len() });
    }
    if bob == BobStrategy::GainCheatDeviceDependent {
        return Err(unsupported(bob, config.variant));
    }
    const ROUND: u64 = 1;
    let mut bob_rng = party_rng(config.rng_seed, 0);
    let mut alice_rng = party_rng(config.rng_seed, 1);

    let n = bob_rng.gen_range(1..=config.n + 1);
    let c = Bit::random(&mut bob_rng);
    let cbar = (!c).as_usize();
    let chosen = (n - 1) as usize;
    let mut private = BobPrivate { n: Some(n), c: Some(c), ..Default::default() };

    let ac = alice_commit(alice, config.variant, &mut alice_rng, |s| {
        measure(pairs[chosen].as_mut(), c.as_usize(), s, ROUND)
    })?;
    let q = ac.commit.q;
    private.guess = match bob {
        BobStrategy::Honest => None,
        BobStrategy::GainCheatDeterministic => Some(q),
        BobStrategy::GuessUniform => Some(Bit::random(&mut bob_rng)),
        BobStrategy::GainCheatDeviceDependent => unreachable!("rejected above"),
    };

    let mut transcript = Transcript {
        variant: config.variant,
        config: *config,
        rounds: Vec::new(),
        bob_private: private,
        commit: Some(ac.commit),
        reveal: None,
        verdict: Verdict::AbortTimeout,
        observed_violation: None,
    };
    let Some((bit, r_c)) = ac.reveal else {
        return Ok(transcript);
    };
    let mut reveal = Reveal { b_revealed: bit, r_c, s_cbar: None, r_cbar: None };
    if !token_ok(q, bit, r_c) {
        transcript.reveal = Some(reveal);
        transcript.verdict = Verdict::AbortTokenMismatch;
        return Ok(transcript);
    }

    let mut rounds = Vec::with_capacity(config.n as usize);
    for (k, pair) in pairs.iter_mut().enumerate() {
        if k == chosen {
            continue;
        }
        let s0 = Bit::random(&mut bob_rng).as_u8();
        let s1 = Bit::random(&mut bob_rng).as_u8();
        let r0 = measure(pair.as_mut(), 0, s0, ROUND)?;
        let r1 = measure(pair.as_mut(), 1, s1, ROUND)?;
        rounds.push(RoundRecord::full(s0, s1, r0, r1));
    }
    let r_cbar = measure(pairs[chosen].as_mut(), cbar, bit.as_u8(), ROUND)?;
    reveal.s_cbar = Some(bit.as_u8());
    reveal.r_cbar = Some(r_cbar);
    let violation = running_violation(&rounds)?;
    transcript.rounds = rounds;
    transcript.reveal = Some(reveal);
    transcript.observed_violation = Some(violation);
    transcript.verdict = if r_cbar != r_c {
        Verdict::AbortCorrelationMismatch
    } else if bob.enforces_threshold() && violation < config.i_threshold {
        Verdict::AbortLowViolation
    } else {
        Verdict::Accepted(bit)
    };
    Ok(transcript)
}

/// PR-box protocol: Alice holds box 0, Bob box 1, one use each. No test
/// rounds; the reveal is checked against `r⁰ ⊕ r¹ = s⁰·s¹`.
pub fn run_pr(
    config: &ProtocolConfig,
    pair: &mut dyn DevicePair,
    alice: &AliceStrategy,
    bob: BobStrategy,
) -> Result<Transcript, ProtocolError> {
    expect_variant(config, Variant::Pr)?;
    if bob == BobStrategy::GainCheatDeterministic {
        return Err(unsupported(bob, config.variant));
    }
    const ROUND: u64 = 1;
    let mut bob_rng = party_rng(config.rng_seed, 0);
    let mut alice_rng = party_rng(config.rng_seed, 1);
    let mut private = BobPrivate { n: None, c: Some(Bit::ZERO), ..Default::default() };

    let ac = alice_commit(alice, config.variant, &mut alice_rng, |s| measure(pair, 0, s, ROUND))?;
    let q = ac.commit.q;
    let mut bob_measurement: Option<(u8, Bit)> = None;
    private.guess = match bob {
        BobStrategy::Honest => None,
        BobStrategy::GainCheatDeviceDependent => {
            let r1 = measure(pair, 1, 1, ROUND)?;
            bob_measurement = Some((1, r1));
            Some(q ^ r1)
        }
        BobStrategy::GuessUniform => Some(Bit::random(&mut bob_rng)),
        BobStrategy::GainCheatDeterministic => unreachable!("rejected above"),
    };

    let mut transcript = Transcript {
        variant: config.variant,
        config: *config,
        rounds: Vec::new(),
        bob_private: private,
        commit: Some(ac.commit),
        reveal: None,
        verdict: Verdict::AbortTimeout,
        observed_violation: None,
    };
    let Some((bit, r0)) = ac.reveal else {
        return Ok(transcript);
    };
    let mut reveal = Reveal { b_revealed: bit, r_c: r0, s_cbar: None, r_cbar: None };
    if !token_ok(q, bit, r0) {
        transcript.reveal = Some(reveal);
        transcript.verdict = Verdict::AbortTokenMismatch;
        return Ok(transcript);
    }
    let (s1, r1) = match bob_measurement {
        Some(m) => m,
        None => {
            let s1 = Bit::random(&mut bob_rng).as_u8();
            (s1, measure(pair, 1, s1, ROUND)?)
        }
    };
    reveal.s_cbar = Some(s1);
    reveal.r_cbar = Some(r1);
    transcript.reveal = Some(reveal);
    transcript.verdict = if r0 ^ r1 == Bit::from(bit.as_u8() & s1 == 1) {
        Verdict::Accepted(bit)
    } else {
        Verdict::AbortCorrelationMismatch
    };
    Ok(transcript)
}

/// Dispatches on `config.variant`. The large-office variant takes all of
/// `pairs`; the others use exactly one.
pub fn run(
    config: &ProtocolConfig,
    pairs: &mut [Box<dyn DevicePair>],
    alice: &AliceStrategy,
    bob: BobStrategy,
) -> Result<Transcript, ProtocolError> {
    if config.variant == Variant::LargeOffice {
        return run_large_office(config, pairs, alice, bob);
    }
    let [pair] = pairs else {
        return Err(ProtocolError::PairCount { expected: 1, got: pairs.len() });
    };
    match config.variant {
        Variant::Main => run_main(config, pair.as_mut(), alice, bob),
        Variant::FreeReveal => run_free_reveal(config, pair.as_mut(), alice, bob),
        Variant::Pr => run_pr(config, pair.as_mut(), alice, bob),
        Variant::LargeOffice => unreachable!(),
    }
}

/// One trial of a guessing Bob against an honest Alice with uniform `b`
/// in the sequential protocol (`N = 10`). Returns whether the guess was
/// right.
///
/// The deterministic strategy runs on [`bob_cheat_pair`]; the others on
/// noiseless honest boxes.
pub fn gain_trial(strategy: BobStrategy, master_seed: u64, index: u64) -> Result<bool, ProtocolError> {
    if strategy == BobStrategy::Honest {
        return Err(ProtocolError::Config("an honest Bob makes no guess".into()));
    }
    let mut t = trial_rng(master_seed, index);
    let config = ProtocolConfig::new(Variant::Main, 10, 2.0, t.next_u64());
    let device_seed = t.next_u64();
    let bit = Bit::random(&mut t);
    let mut pair: Box<dyn DevicePair> = match strategy {
        BobStrategy::GainCheatDeterministic => Box::new(bob_cheat_pair()),
        _ => Box::new(honest_pair(1.0, device_seed)?),
    };
    let tr = run_main(&config, pair.as_mut(), &AliceStrategy::honest(bit), strategy)?;
    Ok(tr.bob_private.guess == Some(bit))
}

/// Fraction of [`gain_trial`]s in which Bob guesses the committed bit.
pub fn bob_gain_cheat_main(strategy: BobStrategy, trials: u64, seed: u64) -> Result<Estimate, ProtocolError> {
    let mut tally = Tally::default();
    for i in 0..trials {
        tally.record(gain_trial(strategy, seed, i)?);
    }
    Ok(tally.estimate())
}
