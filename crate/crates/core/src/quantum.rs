//! Exact small-dimension quantum math for two qubits.
//!
//! Basis ordering is `|00⟩, |01⟩, |10⟩, |11⟩`, the first factor belonging to
//! box 0. `|0⟩`/`|1⟩` are the `+1`/`-1` eigenstates of `σ_z`, and outcome bit
//! `0` always labels the `+1` eigenspace of an observable.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::bits::Bit;
use crate::scalar::Real;

type Mat2<T> = [[Complex<T>; 2]; 2];
type Mat4<T> = [[Complex<T>; 4]; 4];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateError {
    #[error("density matrix is not hermitian (max deviation {0})")]
    NotHermitian(f64),
    #[error("density matrix trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("density matrix has an eigenvalue below the positivity tolerance")]
    NotPositive,
    #[error("werner visibility {0} outside [0, 1]")]
    VisibilityOutOfRange(f64),
    #[error("amplitude vector has zero norm")]
    ZeroVector,
}

fn zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Density matrix of a two-qubit system.
///
/// Hermitian, unit trace and positive semidefinite up to the tolerances of
/// the scalar type; every constructor enforces this.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState<T> {
    rho: Mat4<T>,
}

impl<T: Real> TwoQubitState<T> {
    pub fn new(entries: [[Complex<T>; 4]; 4]) -> Result<Self, StateError> {
        let tol = T::identity_tol();
        let mut worst = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                let d = (entries[i][j] - entries[j][i].conj()).norm();
                worst = worst.max(d);
            }
        }
        if worst > tol {
            return Err(StateError::NotHermitian(to_f64(worst)));
        }
        let trace = (0..4).fold(T::zero(), |acc, i| acc + entries[i][i].re);
        if (trace - T::one()).abs() > tol {
            return Err(StateError::BadTrace(to_f64(trace)));
        }
        if !shifted_cholesky_ok(&entries, T::psd_tol()) {
            return Err(StateError::NotPositive);
        }
        Ok(Self { rho: entries })
    }

    /// Pure state `|ψ⟩⟨ψ|` from (not necessarily normalized) amplitudes.
    pub fn from_amplitudes(psi: [Complex<T>; 4]) -> Result<Self, StateError> {
        let norm2 = psi.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr());
        if norm2 <= T::zero() {
            return Err(StateError::ZeroVector);
        }
        let mut rho = [[zero(); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                rho[i][j] = psi[i] * psi[j].conj() / re(norm2);
            }
        }
        Self::new(rho)
    }

    pub fn entries(&self) -> &[[Complex<T>; 4]; 4] {
        &self.rho
    }

    pub fn trace(&self) -> T {
        (0..4).fold(T::zero(), |acc, i| acc + self.rho[i][i].re)
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> T {
        let mut acc = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                acc = acc + (self.rho[i][j] * self.rho[j][i]).re;
            }
        }
        acc
    }

    /// Measures `obs` on the qubit of box `box_id` and returns, for each
    /// outcome, its probability and the normalized post-measurement state of
    /// the other qubit.
    ///
    /// Outcomes with zero probability get the maximally mixed state so the
    /// result is always well formed.
    pub fn condition(&self, box_id: usize, obs: &ZxObservable<T>) -> [(T, QubitState<T>); 2] {
        [Bit::ZERO, Bit::ONE].map(|r| {
            let proj = obs.projector(r);
            let mut sigma: [[Complex<T>; 2]; 2] = [[zero(); 2]; 2];
            for j in 0..2 {
                for jp in 0..2 {
                    let mut acc = zero();
                    for i in 0..2 {
                        for ip in 0..2 {
                            // Tr over the measured qubit of (Π ⊗ 1) ρ.
                            acc = acc
                                + if box_id == 0 {
                                    proj[i][ip] * self.rho[2 * ip + j][2 * i + jp]
                                } else {
                                    proj[i][ip] * self.rho[2 * j + ip][2 * jp + i]
                                };
                        }
                    }
                    sigma[j][jp] = acc;
                }
            }
            let p = (sigma[0][0].re + sigma[1][1].re).max(T::zero());
            let state = if p > T::zero() {
                for row in sigma.iter_mut() {
                    for x in row.iter_mut() {
                        *x = *x / re(p);
                    }
                }
                QubitState { rho: sigma }
            } else {
                QubitState::maximally_mixed()
            };
            (p, state)
        })
    }
}

/// Cholesky factorization of `a + shift·1`; succeeds iff every eigenvalue of
/// `a` exceeds `-shift`.
fn shifted_cholesky_ok<T: Real>(a: &Mat4<T>, shift: T) -> bool {
    let mut l = [[zero::<T>(); 4]; 4];
    for j in 0..4 {
        let mut d = a[j][j].re + shift;
        for k in 0..j {
            d = d - l[j][k].norm_sqr();
        }
        if !(d > T::zero()) {
            return false;
        }
        let djj = d.sqrt();
        l[j][j] = re(djj);
        for i in (j + 1)..4 {
            let mut s = a[i][j];
            for k in 0..j {
                s = s - l[i][k] * l[j][k].conj();
            }
            l[i][j] = s / re(djj);
        }
    }
    true
}

/// Density matrix of a single qubit; the state one box is left holding after
/// its partner has been measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState<T> {
    rho: Mat2<T>,
}

impl<T: Real> QubitState<T> {
    pub fn maximally_mixed() -> Self {
        let half = re(T::lit(0.5));
        Self {
            rho: [[half, zero()], [zero(), half]],
        }
    }

    pub fn entries(&self) -> &Mat2<T> {
        &self.rho
    }

    /// Probability of `outcome` when measuring `obs`.
    pub fn probability(&self, obs: &ZxObservable<T>, outcome: Bit) -> T {
        let proj = obs.projector(outcome);
        let mut acc = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                acc = acc + (self.rho[i][j] * proj[j][i]).re;
            }
        }
        acc.max(T::zero()).min(T::one())
    }
}

/// The observable `σ_θ = cos θ σ_z + sin θ σ_x`, angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZxObservable<T> {
    pub theta: T,
}

impl<T: Real> ZxObservable<T> {
    pub fn new(theta: T) -> Self {
        Self { theta }
    }

    pub fn sigma_z() -> Self {
        Self::new(T::zero())
    }

    pub fn sigma_x() -> Self {
        Self::new(T::FRAC_PI_2())
    }

    pub fn matrix(&self) -> Mat2<T> {
        let (s, c) = self.theta.sin_cos();
        [[re(c), re(s)], [re(s), re(-c)]]
    }

    /// Eigenprojector `(1 ± σ_θ)/2`, `+` for outcome 0.
    pub fn projector(&self, outcome: Bit) -> Mat2<T> {
        let (s, c) = self.theta.sin_cos();
        let half = T::lit(0.5);
        let sign = if outcome.is_one() { -T::one() } else { T::one() };
        [
            [re(half * (T::one() + sign * c)), re(half * sign * s)],
            [re(half * sign * s), re(half * (T::one() - sign * c))],
        ]
    }
}

/// Outputs of box 0 and box 1 for one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomePair {
    pub r0: Bit,
    pub r1: Bit,
}

/// Joint outcome distribution `P(r0, r1)`, indexed `[r0][r1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDistribution<T> {
    pub p: [[T; 2]; 2],
}

impl<T: Real> JointDistribution<T> {
    pub fn prob(&self, outcome: OutcomePair) -> T {
        self.p[outcome.r0.as_usize()][outcome.r1.as_usize()]
    }

    pub fn total(&self) -> T {
        self.p[0][0] + self.p[0][1] + self.p[1][0] + self.p[1][1]
    }

    pub fn p_equal(&self) -> T {
        self.p[0][0] + self.p[1][1]
    }

    /// Marginal of box `box_id`, indexed by its outcome.
    pub fn marginal(&self, box_id: usize) -> [T; 2] {
        if box_id == 0 {
            [self.p[0][0] + self.p[0][1], self.p[1][0] + self.p[1][1]]
        } else {
            [self.p[0][0] + self.p[1][0], self.p[0][1] + self.p[1][1]]
        }
    }

    /// `Σ (-1)^{r0⊕r1} P(r0, r1)`.
    pub fn correlator(&self) -> T {
        self.p[0][0] + self.p[1][1] - self.p[0][1] - self.p[1][0]
    }
}

/// `|φ⁺⟩⟨φ⁺|` with `|φ⁺⟩ = (|00⟩ + |11⟩)/√2`.
pub fn epr_state<T: Real>() -> TwoQubitState<T> {
    let half = re(T::lit(0.5));
    let mut rho = [[zero(); 4]; 4];
    rho[0][0] = half;
    rho[0][3] = half;
    rho[3][0] = half;
    rho[3][3] = half;
    TwoQubitState { rho }
}

/// `v·|φ⁺⟩⟨φ⁺| + (1 − v)·1/4`.
pub fn werner_state<T: Real>(v: T) -> Result<TwoQubitState<T>, StateError> {
    if !(v >= T::zero() && v <= T::one()) {
        return Err(StateError::VisibilityOutOfRange(to_f64(v)));
    }
    let epr = epr_state::<T>();
    let noise = (T::one() - v) * T::lit(0.25);
    let mut rho = epr.rho;
    for (i, row) in rho.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = *x * re(v);
            if i == j {
                *x = *x + re(noise);
            }
        }
    }
    Ok(TwoQubitState { rho })
}

/// `P(r0, r1) = Tr(ρ Π_{r0} ⊗ Π_{r1})`.
pub fn joint_distribution<T: Real>(
    state: &TwoQubitState<T>,
    obs0: &ZxObservable<T>,
    obs1: &ZxObservable<T>,
) -> JointDistribution<T> {
    let mut p = [[T::zero(); 2]; 2];
    for (r0, row) in p.iter_mut().enumerate() {
        let pa = obs0.projector(Bit::from(r0 == 1));
        for (r1, cell) in row.iter_mut().enumerate() {
            let pb = obs1.projector(Bit::from(r1 == 1));
            let mut acc = zero();
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            acc = acc + state.rho[2 * i + j][2 * k + l] * pa[k][i] * pb[l][j];
                        }
                    }
                }
            }
            *cell = acc.re;
        }
    }
    JointDistribution { p }
}

/// `E = Σ (-1)^{r0⊕r1} P(r0, r1)`.
pub fn correlator<T: Real>(
    state: &TwoQubitState<T>,
    obs0: &ZxObservable<T>,
    obs1: &ZxObservable<T>,
) -> T {
    joint_distribution(state, obs0, obs1).correlator()
}

/// `E(A0,B0) + E(A0,B1) + E(A1,B0) − E(A1,B1)`.
pub fn chsh_value<T: Real>(
    state: &TwoQubitState<T>,
    settings0: &[ZxObservable<T>; 2],
    settings1: &[ZxObservable<T>; 2],
) -> T {
    let e = |a: usize, b: usize| correlator(state, &settings0[a], &settings1[b]);
    e(0, 0) + e(0, 1) + e(1, 0) - e(1, 1)
}
