//! The two-input, two-output no-signaling polytope and the two linear
//! objectives bounding the cheating probabilities.
//!
//! Entries are generic so the maximization can run over exact rationals.

use num_traits::Num;
use serde::Serialize;

use crate::bits::Bit;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NsBoxError {
    #[error("negative entry at (r0={r0}, r1={r1} | s0={s0}, s1={s1})")]
    Negative { r0: u8, r1: u8, s0: u8, s1: u8 },
    #[error("distribution for inputs ({s0}, {s1}) is not normalized")]
    Normalization { s0: u8, s1: u8 },
    #[error("marginal of box {box_id} depends on the other box's input")]
    Signaling { box_id: u8 },
}

/// Where a vertex comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VertexKind {
    /// `r0 = f(s0)`, `r1 = g(s1)`.
    Local { f: [u8; 2], g: [u8; 2] },
    /// `r0 ⊕ r1 = s0·s1 ⊕ α·s0 ⊕ β·s1 ⊕ γ`.
    Pr { alpha: u8, beta: u8, gamma: u8 },
}

/// Conditional distribution `P(r0, r1 | s0, s1)` with binary inputs and
/// outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsBox<T> {
    p: [T; 16],
}

fn idx(r0: u8, r1: u8, s0: u8, s1: u8) -> usize {
    (((s0 as usize) * 2 + s1 as usize) * 2 + r0 as usize) * 2 + r1 as usize
}

fn within<T: Num + Copy + PartialOrd>(a: T, b: T, tol: T) -> bool {
    let d = if a > b { a - b } else { b - a };
    d <= tol
}

impl<T: Num + Copy + PartialOrd> NsBox<T> {
    /// Validates nonnegativity, normalization and no-signaling up to `tol`
    /// (use zero for exact scalars). Entries are indexed by
    /// `(s0, s1, r0, r1)` in row-major order.
    pub fn new(p: [T; 16], tol: T) -> Result<Self, NsBoxError> {
        let b = Self { p };
        b.validate(tol)?;
        Ok(b)
    }

    /// Builds from a function of `(r0, r1, s0, s1)`.
    pub fn from_fn(tol: T, f: impl Fn(u8, u8, u8, u8) -> T) -> Result<Self, NsBoxError> {
        let mut p = [T::zero(); 16];
        for s0 in 0..2 {
            for s1 in 0..2 {
                for r0 in 0..2 {
                    for r1 in 0..2 {
                        p[idx(r0, r1, s0, s1)] = f(r0, r1, s0, s1);
                    }
                }
            }
        }
        Self::new(p, tol)
    }

    fn validate(&self, tol: T) -> Result<(), NsBoxError> {
        for s0 in 0..2 {
            for s1 in 0..2 {
                let mut total = T::zero();
                for r0 in 0..2 {
                    for r1 in 0..2 {
                        let v = self.prob(r0, r1, s0, s1);
                        if v < T::zero() - tol {
                            return Err(NsBoxError::Negative { r0, r1, s0, s1 });
                        }
                        total = total + v;
                    }
                }
                if !within(total, T::one(), tol) {
                    return Err(NsBoxError::Normalization { s0, s1 });
                }
            }
        }
        for s in 0..2 {
            for r in 0..2 {
                if !within(self.marginal0(r, s, 0), self.marginal0(r, s, 1), tol) {
                    return Err(NsBoxError::Signaling { box_id: 0 });
                }
                if !within(self.marginal1(r, 0, s), self.marginal1(r, 1, s), tol) {
                    return Err(NsBoxError::Signaling { box_id: 1 });
                }
            }
        }
        Ok(())
    }

    pub fn prob(&self, r0: u8, r1: u8, s0: u8, s1: u8) -> T {
        self.p[idx(r0, r1, s0, s1)]
    }

    pub fn entries(&self) -> &[T; 16] {
        &self.p
    }

    /// `Σ_{r1} P(r0, r1 | s0, s1)`.
    pub fn marginal0(&self, r0: u8, s0: u8, s1: u8) -> T {
        self.prob(r0, 0, s0, s1) + self.prob(r0, 1, s0, s1)
    }

    /// `Σ_{r0} P(r0, r1 | s0, s1)`.
    pub fn marginal1(&self, r1: u8, s0: u8, s1: u8) -> T {
        self.prob(0, r1, s0, s1) + self.prob(1, r1, s0, s1)
    }

    pub fn local_deterministic(f: [u8; 2], g: [u8; 2]) -> Self {
        let p = Self::from_fn(T::zero(), |r0, r1, s0, s1| {
            if r0 == f[s0 as usize] && r1 == g[s1 as usize] {
                T::one()
            } else {
                T::zero()
            }
        });
        p.expect("deterministic boxes are no-signaling")
    }

    pub fn pr_type(alpha: u8, beta: u8, gamma: u8) -> Self {
        let half = T::one() / (T::one() + T::one());
        let p = Self::from_fn(T::zero(), |r0, r1, s0, s1| {
            if r0 ^ r1 == (s0 & s1) ^ (alpha & s0) ^ (beta & s1) ^ gamma {
                half
            } else {
                T::zero()
            }
        });
        p.expect("PR boxes are no-signaling")
    }

    /// The canonical PR box `r0 ⊕ r1 = s0·s1`.
    pub fn pr_canonical() -> Self {
        Self::pr_type(0, 0, 0)
    }

    pub fn uniform() -> Self {
        let two = T::one() + T::one();
        let quarter = T::one() / (two * two);
        Self { p: [quarter; 16] }
    }

    /// CHSH value `Σ (−1)^{r0⊕r1⊕s0s1} P(r0, r1 | s0, s1)`.
    pub fn chsh(&self) -> T {
        let mut plus = T::zero();
        let mut minus = T::zero();
        for s0 in 0..2 {
            for s1 in 0..2 {
                for r0 in 0..2 {
                    for r1 in 0..2 {
                        let v = self.prob(r0, r1, s0, s1);
                        if (r0 ^ r1 ^ (s0 & s1)) == 0 {
                            plus = plus + v;
                        } else {
                            minus = minus + v;
                        }
                    }
                }
            }
        }
        plus - minus
    }

    /// Whether the box reproduces a deterministic output `r1 ≡ bit` on
    /// box 1 for both inputs.
    pub fn box1_constant(&self, bit: Bit) -> bool {
        (0..2).all(|s1| self.marginal1(bit.as_u8(), 0, s1) == T::one())
    }
}

/// The 24 vertices of the polytope: 16 local deterministic boxes followed
/// by the 8 PR-type boxes.
pub fn ns_vertices<T: Num + Copy + PartialOrd>() -> Vec<(VertexKind, NsBox<T>)> {
    let mut out = Vec::with_capacity(24);
    for code in 0u8..16 {
        let f = [code & 1, (code >> 1) & 1];
        let g = [(code >> 2) & 1, (code >> 3) & 1];
        out.push((VertexKind::Local { f, g }, NsBox::local_deterministic(f, g)));
    }
    for code in 0u8..8 {
        let (alpha, beta, gamma) = (code & 1, (code >> 1) & 1, (code >> 2) & 1);
        out.push((VertexKind::Pr { alpha, beta, gamma }, NsBox::pr_type(alpha, beta, gamma)));
    }
    out
}

fn quarter<T: Num + Copy>() -> T {
    let two = T::one() + T::one();
    T::one() / (two * two)
}

/// Bob's guessing probability for a box whose first party is Alice's
/// commit box (inputs 2, 3 relabeled 0, 1; output `r^c`) and whose second
/// party is Bob's ancilla (input `m`, output the guess `g`):
/// `¼[2P(0,0|0,0) + 2P(1,0|0,1) + P(0,1|1,0) + P(1,1|1,1) + P(0,1|1,1) + P(1,1|1,0)]`.
pub fn gain_objective<T: Num + Copy + PartialOrd>(b: &NsBox<T>) -> T {
    let two = T::one() + T::one();
    quarter::<T>()
        * (two * b.prob(0, 0, 0, 0)
            + two * b.prob(1, 0, 0, 1)
            + b.prob(0, 1, 1, 0)
            + b.prob(1, 1, 1, 1)
            + b.prob(0, 1, 1, 1)
            + b.prob(1, 1, 1, 0))
}

/// Alice's control in the PR-box protocol with token `q = 0`:
/// `¼[P(r1=0|s1=0) + P(r1=0|s1=1) + P(0,0|1,0) + P(0,1|1,1) + P(1,1|1,0) + P(1,0|1,1)]`.
pub fn pr_control_objective<T: Num + Copy + PartialOrd>(b: &NsBox<T>) -> T {
    quarter::<T>()
        * (b.marginal1(0, 0, 0)
            + b.marginal1(0, 0, 1)
            + b.prob(0, 0, 1, 0)
            + b.prob(0, 1, 1, 1)
            + b.prob(1, 1, 1, 0)
            + b.prob(1, 0, 1, 1))
}

fn maximize<T: Num + Copy + PartialOrd>(
    objective: impl Fn(&NsBox<T>) -> T,
) -> (T, VertexKind, NsBox<T>) {
    let mut best: Option<(T, VertexKind, NsBox<T>)> = None;
    for (kind, vertex) in ns_vertices::<T>() {
        let v = objective(&vertex);
        if best.as_ref().map_or(true, |(b, _, _)| v > *b) {
            best = Some((v, kind, vertex));
        }
    }
    best.expect("polytope has vertices")
}

/// Maximum of [`gain_objective`] over the polytope. The objective is
/// linear, so a vertex scan is exact; ties resolve to the first vertex in
/// [`ns_vertices`] order.
pub fn max_gain_objective<T: Num + Copy + PartialOrd>() -> (T, VertexKind, NsBox<T>) {
    maximize(gain_objective)
}

/// Maximum of [`pr_control_objective`] over the polytope.
pub fn max_pr_control_objective<T: Num + Copy + PartialOrd>() -> (T, VertexKind, NsBox<T>) {
    maximize(pr_control_objective)
}
