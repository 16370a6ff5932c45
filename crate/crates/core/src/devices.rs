//! Black-box device pairs.
//!
//! A pair is two boxes, each with an input knob and an output register.
//! Callers only ever see [`DevicePair::measure`]: one request in, one bit
//! out. What a box does internally (shared quantum state, counters,
//! deterministic programs) is hidden behind that call.
//!
//! Rounds are abstract use indices. A box sees its own input and use
//! history and nothing about which protocol phase it is in; boxes in the
//! same round share whatever was prepared for that round.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_4;
use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::phi_opt;
use crate::bits::Bit;
use crate::quantum::{werner_state, QubitState, TwoQubitState, ZxObservable};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeviceError {
    #[error("box id {0} is not 0 or 1")]
    BadBox(usize),
    #[error("input {input} not accepted by box {box_id}")]
    InputOutOfRange { box_id: usize, input: u8 },
    #[error("box {box_id} asked for round {round} after round {last}")]
    RoundRegression { box_id: usize, round: u64, last: u64 },
    #[error("round index must be positive")]
    ZeroRound,
    #[error("noise visibility {0} outside [0, 1]")]
    Visibility(f64),
    #[error("cheat angle {0} outside [0, pi/4]")]
    CheatAngle(f64),
    #[error("trigger round must be at least 1")]
    Trigger,
    #[error("deterministic table for box {box_id} has {len} entries, expected 4")]
    IncompleteTable { box_id: usize, len: usize },
}

/// One use of one box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureRequest {
    pub box_id: usize,
    pub input: u8,
    pub round: u64,
}

impl MeasureRequest {
    pub fn new(box_id: usize, input: u8, round: u64) -> Self {
        Self { box_id, input, round }
    }
}

/// A pair of isolated black boxes.
///
/// Each call returns exactly one bit and advances the addressed box's use
/// counter by one. Rounds must strictly increase per box.
pub trait DevicePair: Send {
    fn measure(&mut self, req: MeasureRequest) -> Result<Bit, DeviceError>;

    /// Number of completed measure calls on `box_id`.
    fn uses(&self, box_id: usize) -> u64;

    fn label(&self) -> &'static str;
}

impl<P: DevicePair + ?Sized> DevicePair for Box<P> {
    fn measure(&mut self, req: MeasureRequest) -> Result<Bit, DeviceError> {
        (**self).measure(req)
    }

    fn uses(&self, box_id: usize) -> u64 {
        (**self).uses(box_id)
    }

    fn label(&self) -> &'static str {
        (**self).label()
    }
}

/// Use counters and round bookkeeping shared by every implementation.
#[derive(Debug, Clone, Default)]
struct Usage {
    uses: [u64; 2],
    last_round: [u64; 2],
}

impl Usage {
    /// Validates the request and returns this box's 1-based use index.
    fn admit(&mut self, req: &MeasureRequest, max_input: u8) -> Result<u64, DeviceError> {
        if req.box_id > 1 {
            return Err(DeviceError::BadBox(req.box_id));
        }
        if req.input > max_input {
            return Err(DeviceError::InputOutOfRange {
                box_id: req.box_id,
                input: req.input,
            });
        }
        if req.round == 0 {
            return Err(DeviceError::ZeroRound);
        }
        let last = self.last_round[req.box_id];
        if req.round <= last {
            return Err(DeviceError::RoundRegression {
                box_id: req.box_id,
                round: req.round,
                last,
            });
        }
        self.last_round[req.box_id] = req.round;
        self.uses[req.box_id] += 1;
        Ok(self.uses[req.box_id])
    }
}

/// Precomputed measurement branches for one (box, input): the outcome
/// probabilities and the state left on the partner qubit.
type Branches = [(f64, QubitState<f64>); 2];

/// Per-round fresh copies of one two-qubit state, measured sequentially.
///
/// The first box queried in a round samples its marginal; the partner then
/// measures the conditional state, so the joint statistics match
/// `Tr(ρ Π ⊗ Π)` whichever box goes first.
pub struct QuantumPair {
    label: &'static str,
    settings: [[Option<ZxObservable<f64>>; 4]; 2],
    branches: [[Option<Branches>; 4]; 2],
    rng: ChaCha8Rng,
    usage: Usage,
    pending: HashMap<u64, (usize, QubitState<f64>)>,
}

impl QuantumPair {
    pub fn new(
        label: &'static str,
        state: TwoQubitState<f64>,
        settings: [[Option<ZxObservable<f64>>; 4]; 2],
        seed: u64,
    ) -> Self {
        let mut branches = [[None; 4]; 2];
        for box_id in 0..2 {
            for input in 0..4 {
                if let Some(obs) = &settings[box_id][input] {
                    branches[box_id][input] = Some(state.condition(box_id, obs));
                }
            }
        }
        Self {
            label,
            settings,
            branches,
            rng: ChaCha8Rng::seed_from_u64(seed),
            usage: Usage::default(),
            pending: HashMap::new(),
        }
    }

    /// Observable box `box_id` applies for `input`, if any.
    pub fn observable(&self, box_id: usize, input: u8) -> Option<ZxObservable<f64>> {
        self.settings.get(box_id)?.get(input as usize).copied().flatten()
    }
}

impl DevicePair for QuantumPair {
    fn measure(&mut self, req: MeasureRequest) -> Result<Bit, DeviceError> {
        let branches = self
            .branches
            .get(req.box_id)
            .and_then(|b| b.get(req.input as usize))
            .copied()
            .flatten()
            .ok_or(DeviceError::InputOutOfRange {
                box_id: req.box_id,
                input: req.input,
            })?;
        self.usage.admit(&req, 3)?;
        let u: f64 = self.rng.gen();
        match self.pending.remove(&req.round) {
            Some((other, partner)) if other != req.box_id => {
                let obs = self.settings[req.box_id][req.input as usize].expect("checked above");
                Ok(Bit::from(u >= partner.probability(&obs, Bit::ZERO)))
            }
            _ => {
                let r = Bit::from(u >= branches[0].0);
                self.pending.insert(req.round, (req.box_id, branches[r.as_usize()].1));
                Ok(r)
            }
        }
    }

    fn uses(&self, box_id: usize) -> u64 {
        self.usage.uses.get(box_id).copied().unwrap_or(0)
    }

    fn label(&self) -> &'static str {
        self.label
    }
}

/// Observables of the honest boxes: box 0 inputs 0..3 are
/// `σ_x, σ_z, σ_{π/4}, σ_{3π/4}`; box 1 inputs 0..3 are
/// `σ_{π/4}, σ_{3π/4}, σ_x, σ_z`.
pub fn honest_settings() -> [[Option<ZxObservable<f64>>; 4]; 2] {
    let o = |t: f64| Some(ZxObservable::new(t));
    [
        [o(FRAC_PI_2), o(0.0), o(FRAC_PI_4), o(3.0 * FRAC_PI_4)],
        [o(FRAC_PI_4), o(3.0 * FRAC_PI_4), o(FRAC_PI_2), o(0.0)],
    ]
}

/// Honest boxes sharing a fresh Werner state of visibility `noise_v` each
/// round.
pub fn honest_pair(noise_v: f64, seed: u64) -> Result<QuantumPair, DeviceError> {
    let state = werner_state(noise_v).map_err(|_| DeviceError::Visibility(noise_v))?;
    Ok(QuantumPair::new("honest", state, honest_settings(), seed))
}

/// Alice's optimal cheating boxes for angle `theta`.
///
/// Test inputs 0/1 realize `σ_{2θ}, σ_z` on box 0 and `σ_{2θ−φ}, σ_{4θ−φ}`
/// on box 1, with `φ = φ_opt(θ)`. Inputs 2/3 are the ones Alice uses at
/// commit time and measure along the axis midway between the partner's two
/// test axes: `σ_{3θ−φ}` on box 0, `σ_θ` on box 1.
pub fn alice_cheat_pair(theta: f64, seed: u64) -> Result<QuantumPair, DeviceError> {
    let phi = phi_opt(theta).map_err(|_| DeviceError::CheatAngle(theta))?;
    let o = |t: f64| Some(ZxObservable::new(t));
    let mid0 = 3.0 * theta - phi;
    let settings = [
        [o(2.0 * theta), o(0.0), o(mid0), o(mid0)],
        [o(2.0 * theta - phi), o(4.0 * theta - phi), o(theta), o(theta)],
    ];
    Ok(QuantumPair::new(
        "alice-cheat",
        crate::quantum::epr_state(),
        settings,
        seed,
    ))
}

/// Boxes programmed by a cheating Bob: input `s ∈ {2, 3}` yields `s − 2`,
/// every other input yields 0.
#[derive(Debug, Clone, Default)]
pub struct BobCheatPair {
    usage: Usage,
}

pub fn bob_cheat_pair() -> BobCheatPair {
    BobCheatPair::default()
}

impl DevicePair for BobCheatPair {
    fn measure(&mut self, req: MeasureRequest) -> Result<Bit, DeviceError> {
        self.usage.admit(&req, 3)?;
        Ok(Bit::from(req.input == 3))
    }

    fn uses(&self, box_id: usize) -> u64 {
        self.usage.uses.get(box_id).copied().unwrap_or(0)
    }

    fn label(&self) -> &'static str {
        "bob-cheat"
    }
}

/// Honest boxes with a hidden use counter: at use `trigger` each box
/// answers from a fixed table instead of measuring.
pub struct CounterCheatPair {
    inner: QuantumPair,
    trigger: u64,
    table: [[Bit; 4]; 2],
    usage: Usage,
}

pub fn counter_cheat_pair(trigger_round: u64, seed: u64) -> Result<CounterCheatPair, DeviceError> {
    CounterCheatPair::with_table(trigger_round, [[Bit::ZERO; 4]; 2], seed)
}

impl CounterCheatPair {
    pub fn with_table(trigger: u64, table: [[Bit; 4]; 2], seed: u64) -> Result<Self, DeviceError> {
        if trigger == 0 {
            return Err(DeviceError::Trigger);
        }
        Ok(Self {
            inner: honest_pair(1.0, seed)?,
            trigger,
            table,
            usage: Usage::default(),
        })
    }
}

impl DevicePair for CounterCheatPair {
    fn measure(&mut self, req: MeasureRequest) -> Result<Bit, DeviceError> {
        let mut probe = self.usage.clone();
        let k = probe.admit(&req, 3)?;
        let out = if k == self.trigger {
            self.table[req.box_id][req.input as usize]
        } else {
            self.inner.measure(req)?
        };
        self.usage = probe;
        Ok(out)
    }

    fn uses(&self, box_id: usize) -> u64 {
        self.usage.uses.get(box_id).copied().unwrap_or(0)
    }

    fn label(&self) -> &'static str {
        "counter-cheat"
    }
}

/// Fresh PR box each round: `r0 ⊕ r1 = s0·s1`, uniform marginals.
///
/// The first box queried in a round outputs a uniform bit; the partner
/// follows the constraint.
pub struct PrPair {
    rng: ChaCha8Rng,
    usage: Usage,
    pending: HashMap<u64, (usize, u8, Bit)>,
}

pub fn pr_pair(seed: u64) -> PrPair {
    PrPair {
        rng: ChaCha8Rng::seed_from_u64(seed),
        usage: Usage::default(),
        pending: HashMap::new(),
    }
}

impl DevicePair for PrPair {
    fn measure(&mut self, req: MeasureRequest) -> Result<Bit, DeviceError> {
        self.usage.admit(&req, 1)?;
        match self.pending.remove(&req.round) {
            Some((other, s_other, r_other)) if other != req.box_id => {
                Ok(r_other ^ Bit::from(s_other & req.input == 1))
            }
            _ => {
                let r = Bit::random(&mut self.rng);
                self.pending.insert(req.round, (req.box_id, req.input, r));
                Ok(r)
            }
        }
    }

    fn uses(&self, box_id: usize) -> u64 {
        self.usage.uses.get(box_id).copied().unwrap_or(0)
    }

    fn label(&self) -> &'static str {
        "pr"
    }
}

/// Deterministic, memoryless boxes answering from per-box lookup tables.
#[derive(Debug, Clone)]
pub struct ClassicalPair {
    table: [[Bit; 4]; 2],
    usage: Usage,
}

/// Builds a classical pair; each table must list the outputs for inputs
/// 0, 1, 2, 3.
pub fn classical_pair(box0: &[Bit], box1: &[Bit]) -> Result<ClassicalPair, DeviceError> {
    let mut table = [[Bit::ZERO; 4]; 2];
    for (box_id, src) in [box0, box1].into_iter().enumerate() {
        if src.len() != 4 {
            return Err(DeviceError::IncompleteTable { box_id, len: src.len() });
        }
        table[box_id].copy_from_slice(src);
    }
    Ok(ClassicalPair {
        table,
        usage: Usage::default(),
    })
}

impl DevicePair for ClassicalPair {
    fn measure(&mut self, req: MeasureRequest) -> Result<Bit, DeviceError> {
        self.usage.admit(&req, 3)?;
        Ok(self.table[req.box_id][req.input as usize])
    }

    fn uses(&self, box_id: usize) -> u64 {
        self.usage.uses.get(box_id).copied().unwrap_or(0)
    }

    fn label(&self) -> &'static str {
        "classical"
    }
}

/// Serializable description of a device pair, used by the CLI and the
/// experiment harness to build fresh pairs from a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeviceSpec {
    Honest { noise_v: f64 },
    AliceCheat { theta: f64 },
    BobCheat,
    CounterCheat { trigger_round: u64 },
    Pr,
    Classical { box0: Vec<Bit>, box1: Vec<Bit> },
}

impl DeviceSpec {
    pub fn build(&self, seed: u64) -> Result<Box<dyn DevicePair>, DeviceError> {
        Ok(match self {
            DeviceSpec::Honest { noise_v } => Box::new(honest_pair(*noise_v, seed)?),
            DeviceSpec::AliceCheat { theta } => Box::new(alice_cheat_pair(*theta, seed)?),
            DeviceSpec::BobCheat => Box::new(bob_cheat_pair()),
            DeviceSpec::CounterCheat { trigger_round } => {
                Box::new(counter_cheat_pair(*trigger_round, seed)?)
            }
            DeviceSpec::Pr => Box::new(pr_pair(seed)),
            DeviceSpec::Classical { box0, box1 } => Box::new(classical_pair(box0, box1)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn bits(v: &[u8]) -> Vec<Bit> {
        v.iter().map(|&b| Bit::try_from(b).unwrap()).collect()
    }

    #[test]
    fn honest_correlated_inputs_agree() {
        let mut pair = honest_pair(1.0, 3).unwrap();
        let mut round = 0;
        for _ in 0..500 {
            for i in 0..4u8 {
                round += 1;
                let a = pair.measure(MeasureRequest::new(0, i, round)).unwrap();
                let b = pair.measure(MeasureRequest::new(1, (i + 2) % 4, round)).unwrap();
                assert_eq!(a, b, "input {i}");
            }
        }
        assert_eq!(pair.uses(0), 2000);
        assert_eq!(pair.uses(1), 2000);
    }

    #[test]
    fn box_order_within_round_does_not_matter_for_same_axis() {
        let mut pair = honest_pair(1.0, 5).unwrap();
        for round in 1..=200 {
            let b = pair.measure(MeasureRequest::new(1, 3, round)).unwrap();
            let a = pair.measure(MeasureRequest::new(0, 1, round)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let mut pair = honest_pair(1.0, 0).unwrap();
        assert!(matches!(
            pair.measure(MeasureRequest::new(0, 4, 1)),
            Err(DeviceError::InputOutOfRange { .. })
        ));
        assert!(matches!(pair.measure(MeasureRequest::new(2, 0, 1)), Err(_)));
        assert!(matches!(pair.measure(MeasureRequest::new(0, 0, 0)), Err(DeviceError::ZeroRound)));
        pair.measure(MeasureRequest::new(0, 0, 5)).unwrap();
        assert!(matches!(
            pair.measure(MeasureRequest::new(0, 0, 5)),
            Err(DeviceError::RoundRegression { .. })
        ));
        // A rejected request does not count as a use.
        assert_eq!(pair.uses(0), 1);
        assert!(honest_pair(1.2, 0).is_err());
        assert!(alice_cheat_pair(1.0, 0).is_err());
        assert!(alice_cheat_pair(-0.1, 0).is_err());
        assert!(counter_cheat_pair(0, 0).is_err());
    }

    #[test]
    fn bob_cheat_outputs() {
        let mut pair = bob_cheat_pair();
        for round in 1..=20 {
            assert_eq!(pair.measure(MeasureRequest::new(0, 2, round)).unwrap(), Bit::ZERO);
            assert_eq!(pair.measure(MeasureRequest::new(1, 3, round)).unwrap(), Bit::ONE);
        }
        assert_eq!(pair.measure(MeasureRequest::new(0, 0, 21)).unwrap(), Bit::ZERO);
        assert_eq!(pair.measure(MeasureRequest::new(0, 3, 22)).unwrap(), Bit::ONE);
    }

    #[test]
    fn pr_constraint_holds() {
        let mut pair = pr_pair(9);
        let mut ones = 0;
        for round in 1..=4000u64 {
            let s0 = (round % 2) as u8;
            let s1 = ((round / 2) % 2) as u8;
            let (first, second) = if round % 3 == 0 { (1, 0) } else { (0, 1) };
            let inputs = [s0, s1];
            let ra = pair.measure(MeasureRequest::new(first, inputs[first], round)).unwrap();
            let rb = pair.measure(MeasureRequest::new(second, inputs[second], round)).unwrap();
            let (r0, r1) = if first == 0 { (ra, rb) } else { (rb, ra) };
            assert_eq!((r0 ^ r1).as_u8(), s0 & s1);
            ones += r0.as_u8() as u32;
        }
        let mean = ones as f64 / 4000.0;
        assert!((mean - 0.5).abs() < 3.0 * (0.25f64 / 4000.0).sqrt() + 1e-9);
        assert!(matches!(
            pair.measure(MeasureRequest::new(0, 2, 5000)),
            Err(DeviceError::InputOutOfRange { .. })
        ));
    }

    #[test]
    fn classical_table_lookup() {
        assert!(classical_pair(&bits(&[0, 1]), &bits(&[0, 0, 0, 0])).is_err());
        let mut pair = classical_pair(&bits(&[0, 1, 1, 0]), &bits(&[1, 1, 0, 0])).unwrap();
        let outs: Vec<u8> = (0..4u8)
            .map(|i| pair.measure(MeasureRequest::new(0, i, i as u64 + 1)).unwrap().as_u8())
            .collect();
        assert_eq!(outs, vec![0, 1, 1, 0]);
        assert_eq!(pair.measure(MeasureRequest::new(1, 1, 1)).unwrap(), Bit::ONE);
    }

    #[test]
    fn every_deterministic_table_is_local() {
        // Exhaustive over the 256 tables restricted to inputs {0,1}.
        for code in 0u32..16 {
            let b = |k: u32| Bit::from((code >> k) & 1 == 1);
            let t0 = [b(0), b(1), Bit::ZERO, Bit::ZERO];
            let t1 = [b(2), b(3), Bit::ZERO, Bit::ZERO];
            let mut pair = classical_pair(&t0, &t1).unwrap();
            let mut chsh = 0.0;
            let mut round = 0;
            for s0 in 0..2u8 {
                for s1 in 0..2u8 {
                    round += 1;
                    let r0 = pair.measure(MeasureRequest::new(0, s0, round)).unwrap();
                    let r1 = pair.measure(MeasureRequest::new(1, s1, round)).unwrap();
                    chsh += (r0 ^ r1 ^ Bit::from(s0 & s1 == 1)).sign();
                }
            }
            assert!(chsh <= 2.0, "table {code:04b} gives {chsh}");
        }
    }

    #[test]
    fn counter_cheat_matches_honest_before_trigger() {
        let trigger = 30;
        let mut honest = honest_pair(1.0, 77).unwrap();
        let mut cheat = counter_cheat_pair(trigger, 77).unwrap();
        for round in 1..trigger {
            for (b, s) in [(0usize, (round % 4) as u8), (1, ((round / 4) % 4) as u8)] {
                let req = MeasureRequest::new(b, s, round);
                assert_eq!(honest.measure(req).unwrap(), cheat.measure(req).unwrap());
            }
        }
        assert_eq!(cheat.measure(MeasureRequest::new(0, 3, trigger)).unwrap(), Bit::ZERO);
        assert_eq!(cheat.measure(MeasureRequest::new(1, 1, trigger)).unwrap(), Bit::ZERO);
        assert_eq!(cheat.uses(0), trigger);
    }

    #[test]
    fn alice_cheat_at_quarter_pi_is_honest_configuration() {
        let pair = alice_cheat_pair(FRAC_PI_4, 0).unwrap();
        let honest = honest_settings();
        for b in 0..2 {
            for i in 0..2u8 {
                let got = pair.observable(b, i).unwrap().theta;
                let want = honest[b][i as usize].unwrap().theta;
                assert!((got - want).abs() < 1e-12, "box {b} input {i}");
            }
        }
        let a = [pair.observable(0, 0).unwrap(), pair.observable(0, 1).unwrap()];
        let bb = [pair.observable(1, 0).unwrap(), pair.observable(1, 1).unwrap()];
        let v = crate::quantum::chsh_value(&crate::quantum::epr_state(), &a, &bb);
        assert!((v - 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_outputs() {
        let run = |seed| {
            let mut p = honest_pair(0.8, seed).unwrap();
            (1..=64u64)
                .map(|r| p.measure(MeasureRequest::new((r % 2) as usize, (r % 4) as u8, r)).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn spec_builds_every_kind() {
        let specs = [
            DeviceSpec::Honest { noise_v: 0.9 },
            DeviceSpec::AliceCheat { theta: 0.3 },
            DeviceSpec::BobCheat,
            DeviceSpec::CounterCheat { trigger_round: 4 },
            DeviceSpec::Pr,
            DeviceSpec::Classical { box0: bits(&[0, 0, 0, 0]), box1: bits(&[0, 0, 0, 0]) },
        ];
        for spec in specs {
            let mut pair = spec.build(1).unwrap();
            pair.measure(MeasureRequest::new(0, 0, 1)).unwrap();
            assert_eq!(pair.uses(0), 1);
            let json = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<DeviceSpec>(&json).unwrap(), spec);
        }
    }
}
