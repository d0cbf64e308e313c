//! Dense n-qubit simulation: states, ±1 qubit observables and the
//! correlations they produce.
//!
//! Qubit `i` (0-based party) is bit `n − 1 − i` of the basis index, matching
//! the party order of setting vectors.

mod ansatz;
mod seesaw;
mod states;

pub use ansatz::{
    ansatz_strategy, ansatz_value, boundary_strategy, gamma_ansatz_max, gamma_ansatz_value, quantum_max,
    sos_identity_check, u2_boundary, AnsatzParameters, BoundaryTarget, QuantumMax,
};
pub use seesaw::{seesaw, seesaw_fixed_state, SeesawOptions, SeesawResult, DEFAULT_SEED};
pub use states::{cluster_linear, cluster_ring, ghz, product_zero, w_state};

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::correl::{Behavior, CorrelationTensor, MAX_BEHAVIOR_PARTIES};
use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Largest qubit count for dense state vectors.
pub const MAX_QUBITS: usize = 12;

const NORM_TOL: f64 = 1e-9;

/// A normalized pure state on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<C64>,
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::PartyCount { n, reason: "state vectors support 1..=12 qubits" });
    }
    Ok(())
}

impl StateVector {
    /// Accepts amplitudes whose norm is within `1e−9` of one and rescales
    /// them to unit norm.
    pub fn new(n: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_qubits(n)?;
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Self::from_unnormalized(n, amplitudes)
    }

    pub fn from_unnormalized(n: usize, mut amplitudes: Vec<C64>) -> Result<Self> {
        check_qubits(n)?;
        if amplitudes.len() != 1 << n {
            return Err(Error::InvalidState(format!(
                "expected {} amplitudes, got {}",
                1usize << n,
                amplitudes.len()
            )));
        }
        let norm = norm(&amplitudes);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidState("amplitudes have zero or non-finite norm".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { n, amplitudes })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// `|self⟩ ⊗ |other⟩`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<Self> {
        check_qubits(self.n + other.n)?;
        let amplitudes =
            self.amplitudes.iter().flat_map(|a| other.amplitudes.iter().map(move |b| a * b)).collect();
        Ok(Self { n: self.n + other.n, amplitudes })
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// A ±1-valued qubit observable: either `b⃗·σ⃗` for a unit Bloch vector
/// `b⃗`, or a trivial observable `±I` whose outcome is fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObservableRepr", into = "ObservableRepr")]
pub struct QubitObservable {
    bloch: [f64; 3],
    /// Coefficient of the identity, `±1` for trivial observables and 0 otherwise.
    identity: f64,
}

impl QubitObservable {
    /// Accepts Bloch vectors of length within `1e−9` of one and rescales them.
    pub fn new(bloch: [f64; 3]) -> Result<Self> {
        let len = bloch.iter().map(|b| b * b).sum::<f64>().sqrt();
        if !len.is_finite() || (len - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidObservable(format!("Bloch vector {bloch:?} has length {len}")));
        }
        Ok(Self { bloch: bloch.map(|b| b / len), identity: 0.0 })
    }

    /// The observable `+I` (always outputs `+1`) or `−I`.
    pub fn trivial(positive: bool) -> Self {
        Self { bloch: [0.0; 3], identity: if positive { 1.0 } else { -1.0 } }
    }

    /// Observable in the XY plane, `cos θ·σₓ + sin θ·σ_y`.
    pub fn from_angle(theta: f64) -> Self {
        Self { bloch: [theta.cos(), theta.sin(), 0.0], identity: 0.0 }
    }

    pub fn sigma_x() -> Self {
        Self { bloch: [1.0, 0.0, 0.0], identity: 0.0 }
    }

    pub fn sigma_z() -> Self {
        Self { bloch: [0.0, 0.0, 1.0], identity: 0.0 }
    }

    /// Bloch vector, zero for trivial observables.
    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    pub fn is_trivial(&self) -> bool {
        self.identity != 0.0
    }

    pub(crate) fn matrix(&self) -> Mat2 {
        let [x, y, z] = self.bloch;
        let c = self.identity;
        [[C64::new(c + z, 0.0), C64::new(x, -y)], [C64::new(x, y), C64::new(c - z, 0.0)]]
    }

    /// Projector onto the `±1` eigenspace, `(I ± A)/2`.
    pub(crate) fn projector(&self, plus: bool) -> Mat2 {
        let s = if plus { 0.5 } else { -0.5 };
        let m = self.matrix();
        let half = C64::new(0.5, 0.0);
        [[half + m[0][0] * s, m[0][1] * s], [m[1][0] * s, half + m[1][1] * s]]
    }

    pub fn dense(&self) -> DMatrix<C64> {
        let m = self.matrix();
        DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
    }
}

/// File form: a Bloch vector `[bx, by, bz]`, or `{"identity": ±1}`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ObservableRepr {
    Bloch([f64; 3]),
    Trivial { identity: i8 },
}

impl TryFrom<ObservableRepr> for QubitObservable {
    type Error = Error;

    fn try_from(repr: ObservableRepr) -> Result<Self> {
        match repr {
            ObservableRepr::Bloch(b) => Self::new(b),
            ObservableRepr::Trivial { identity: 1 } => Ok(Self::trivial(true)),
            ObservableRepr::Trivial { identity: -1 } => Ok(Self::trivial(false)),
            ObservableRepr::Trivial { identity } => {
                Err(Error::InvalidObservable(format!("identity coefficient {identity} is not ±1")))
            }
        }
    }
}

impl From<QubitObservable> for ObservableRepr {
    fn from(o: QubitObservable) -> Self {
        if o.is_trivial() {
            ObservableRepr::Trivial { identity: o.identity as i8 }
        } else {
            ObservableRepr::Bloch(o.bloch)
        }
    }
}

pub(crate) type Mat2 = [[C64; 2]; 2];

/// A pure state with a pair `(A₀, A₁)` of observables per party.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumStrategy {
    pub state: StateVector,
    pub observables: Vec<[QubitObservable; 2]>,
}

impl QuantumStrategy {
    pub fn new(state: StateVector, observables: Vec<[QubitObservable; 2]>) -> Result<Self> {
        if observables.len() != state.qubits() {
            return Err(Error::DimensionMismatch { expected: state.qubits(), got: observables.len() });
        }
        Ok(Self { state, observables })
    }

    pub fn parties(&self) -> usize {
        self.state.qubits()
    }

    pub fn to_json(&self, meta: StrategyMeta) -> String {
        let file = StrategyFile {
            n: self.parties(),
            amplitudes: self.state.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
            observables: self.observables.clone(),
            value: meta.value,
            seed: meta.seed,
            functional: meta.functional,
        };
        serde_json::to_string_pretty(&file).expect("strategy file serializes")
    }

    pub fn from_json(text: &str) -> Result<(Self, StrategyMeta)> {
        let file: StrategyFile = serde_json::from_str(text)?;
        let amplitudes = file.amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect();
        let state = StateVector::new(file.n, amplitudes)?;
        let strategy = Self::new(state, file.observables)?;
        Ok((strategy, StrategyMeta { value: file.value, seed: file.seed, functional: file.functional }))
    }
}

/// Bookkeeping stored next to a strategy in its JSON file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrategyMeta {
    pub value: Option<f64>,
    pub seed: Option<u64>,
    pub functional: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct StrategyFile {
    n: usize,
    amplitudes: Vec<[f64; 2]>,
    observables: Vec<[QubitObservable; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    functional: Option<String>,
}

/// `dst = M` acting on `qubit` of `src`.
pub(crate) fn apply_single(m: &Mat2, qubit: usize, n: usize, src: &[C64], dst: &mut [C64]) {
    let stride = 1usize << (n - 1 - qubit);
    for block in (0..src.len()).step_by(2 * stride) {
        for i0 in block..block + stride {
            let i1 = i0 + stride;
            let (s0, s1) = (src[i0], src[i1]);
            dst[i0] = m[0][0] * s0 + m[0][1] * s1;
            dst[i1] = m[1][0] * s0 + m[1][1] * s1;
        }
    }
}

/// Applies, for every combination of per-party branches, the product of the
/// chosen single-qubit operators to `psi` and passes the result to `visit`.
///
/// The branch combination is packed in mixed radix with party 1 most
/// significant. A party with no branches is left untouched and contributes
/// no digit.
pub(crate) fn for_each_branch(
    psi: &[C64],
    branches: &[Vec<Mat2>],
    visit: &mut impl FnMut(usize, &[C64]),
) {
    let n = branches.len();
    let mut levels: Vec<Vec<C64>> = vec![psi.to_vec(); n + 1];
    walk(&mut levels, branches, 0, 0, visit);
}

fn walk(levels: &mut [Vec<C64>], branches: &[Vec<Mat2>], depth: usize, index: usize, visit: &mut impl FnMut(usize, &[C64])) {
    let n = branches.len();
    if depth == n {
        visit(index, &levels[n]);
        return;
    }
    let (head, tail) = levels.split_at_mut(depth + 1);
    if branches[depth].is_empty() {
        tail[0].copy_from_slice(&head[depth]);
        walk(levels, branches, depth + 1, index, visit);
        return;
    }
    let radix = branches[depth].len();
    for (digit, m) in branches[depth].iter().enumerate() {
        let (head, tail) = levels.split_at_mut(depth + 1);
        apply_single(m, depth, n, &head[depth], &mut tail[0]);
        walk(levels, branches, depth + 1, index * radix + digit, visit);
    }
}

fn observable_branches(s: &QuantumStrategy) -> Vec<Vec<Mat2>> {
    s.observables.iter().map(|pair| vec![pair[0].matrix(), pair[1].matrix()]).collect()
}

/// `E(x⃗) = ⟨ψ|⊗ᵢA_{xᵢ}|ψ⟩` for every setting vector.
pub fn expectation(s: &QuantumStrategy) -> CorrelationTensor {
    let n = s.parties();
    let psi = s.state.amplitudes();
    let mut values = vec![0.0; 1 << n];
    for_each_branch(psi, &observable_branches(s), &mut |x, v| {
        values[x] = inner(psi, v).re;
    });
    CorrelationTensor::new(n, values).expect("Hermitian ±1 observables give correlators in [-1, 1]")
}

/// Outcome probabilities `P(a⃗|x⃗) = ⟨ψ|⊗ᵢ(I + aᵢA_{xᵢ})/2|ψ⟩`.
pub fn behavior(s: &QuantumStrategy) -> Result<Behavior> {
    let n = s.parties();
    if n > MAX_BEHAVIOR_PARTIES {
        return Err(Error::PartyCount { n, reason: "behaviors support 1..=10 parties" });
    }
    let branches: Vec<Vec<Mat2>> = s
        .observables
        .iter()
        .map(|pair| {
            // Digit 2·x + bit(a), bit 0 for outcome +1.
            vec![pair[0].projector(true), pair[0].projector(false), pair[1].projector(true), pair[1].projector(false)]
        })
        .collect();
    let psi = s.state.amplitudes();
    let dim = 1usize << n;
    let mut probs = vec![0.0; dim * dim];
    for_each_branch(psi, &branches, &mut |digits, v| {
        let (mut a, mut x) = (0usize, 0usize);
        for i in 0..n {
            let d = (digits >> (2 * (n - 1 - i))) & 3;
            x = (x << 1) | (d >> 1);
            a = (a << 1) | (d & 1);
        }
        probs[(x << n) + a] = inner(psi, v).re.max(0.0);
    });
    // Rounding can leave each row a few ulps from 1.
    for row in probs.chunks_mut(dim) {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
    }
    Behavior::new(n, probs)
}

/// Dense Bell operator `Σ β(x⃗) ⊗ᵢ A_{xᵢ}`.
pub(crate) fn bell_operator(coeffs: &[f64], observables: &[[QubitObservable; 2]]) -> DMatrix<C64> {
    match observables.split_first() {
        None => DMatrix::from_element(1, 1, C64::new(coeffs[0], 0.0)),
        Some((first, rest)) => {
            let half = coeffs.len() / 2;
            let m0 = bell_operator(&coeffs[..half], rest);
            let m1 = bell_operator(&coeffs[half..], rest);
            first[0].dense().kronecker(&m0) + first[1].dense().kronecker(&m1)
        }
    }
}
