//! Correlations and Bell functionals for the n-party, two-setting, two-outcome
//! scenario.
//!
//! Setting vectors are packed into an integer whose binary digits are
//! `(x₁ … xₙ)` with party 1 in the most significant position. Every table in
//! this module (correlators, coefficients, probabilities) is indexed that way,
//! so file formats and golden values stay stable.
//!
//! Outcomes are stored as ±1. In bitstring form an outcome bit `0` means `+1`
//! and `1` means `−1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for validity, normalization and no-signaling checks.
pub const TOL: f64 = 1e-9;

/// Largest party count for which full-correlator tables are materialized.
pub const MAX_TENSOR_PARTIES: usize = 20;

/// Largest party count for which full behaviors (4ⁿ probabilities) are stored.
pub const MAX_BEHAVIOR_PARTIES: usize = 10;

fn check_tensor_parties(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::PartyCount { n, reason: "at least one party is required" });
    }
    if n > MAX_TENSOR_PARTIES {
        return Err(Error::PartyCount { n, reason: "too many parties for a dense correlator table" });
    }
    Ok(())
}

/// The measurement settings `(x₁, …, xₙ)` of all parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SettingVector {
    n: u8,
    bits: u32,
}

impl SettingVector {
    pub fn new(bits: &[u8]) -> Result<Self> {
        check_tensor_parties(bits.len())?;
        let mut packed = 0u32;
        for &b in bits {
            if b > 1 {
                return Err(Error::OutOfRange(format!("setting bit {b} is not 0 or 1")));
            }
            packed = (packed << 1) | b as u32;
        }
        Ok(Self { n: bits.len() as u8, bits: packed })
    }

    pub fn from_index(n: usize, index: usize) -> Result<Self> {
        check_tensor_parties(n)?;
        if index >> n != 0 {
            return Err(Error::OutOfRange(format!("setting index {index} needs more than {n} bits")));
        }
        Ok(Self { n: n as u8, bits: index as u32 })
    }

    /// `1⃗ₙ`, the all-ones setting.
    pub fn all_ones(n: usize) -> Result<Self> {
        check_tensor_parties(n)?;
        Ok(Self { n: n as u8, bits: ((1u64 << n) - 1) as u32 })
    }

    pub fn parties(&self) -> usize {
        self.n as usize
    }

    pub fn index(&self) -> usize {
        self.bits as usize
    }

    /// Setting of party `party` (0-based).
    pub fn get(&self, party: usize) -> u8 {
        assert!(party < self.parties(), "party {party} out of range");
        ((self.bits >> (self.parties() - 1 - party)) & 1) as u8
    }

    /// Number of parties using setting 1, `Σᵢ xᵢ`.
    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn iter(n: usize) -> impl Iterator<Item = SettingVector> {
        (0..1usize << n).map(move |i| SettingVector { n: n as u8, bits: i as u32 })
    }
}

impl fmt::Display for SettingVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", bitstring(self.bits as usize, self.parties()))
    }
}

impl FromStr for SettingVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                other => Err(Error::Parse(format!("invalid setting character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        SettingVector::new(&bits)
    }
}

pub(crate) fn bitstring(value: usize, width: usize) -> String {
    (0..width).map(|i| if (value >> (width - 1 - i)) & 1 == 1 { '1' } else { '0' }).collect()
}

pub(crate) fn parse_bitstring(s: &str, width: usize) -> Result<usize> {
    if s.len() != width {
        return Err(Error::Parse(format!("bitstring {s:?} should have length {width}")));
    }
    let mut v = 0usize;
    for c in s.chars() {
        v = (v << 1)
            | match c {
                '0' => 0,
                '1' => 1,
                other => return Err(Error::Parse(format!("invalid bit {other:?} in {s:?}"))),
            };
    }
    Ok(v)
}

/// The `2ⁿ` full correlators `Eₙ(x⃗)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTensor {
    n: usize,
    values: Vec<f64>,
}

impl CorrelationTensor {
    /// Builds a tensor, clamping entries that leave `[−1, 1]` by at most
    /// [`TOL`] and rejecting larger excursions.
    pub fn new(n: usize, mut values: Vec<f64>) -> Result<Self> {
        check_tensor_parties(n)?;
        if values.len() != 1 << n {
            return Err(Error::InvalidCorrelator(format!(
                "expected {} correlators, got {}",
                1usize << n,
                values.len()
            )));
        }
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() || v.abs() > 1.0 + TOL {
                return Err(Error::InvalidCorrelator(format!(
                    "E({}) = {} outside [-1, 1]",
                    bitstring(i, n),
                    v
                )));
            }
            if v.abs() > 1.0 {
                // Rounding noise of a few ulps is routine; anything larger
                // hints at an upstream problem.
                if v.abs() > 1.0 + 1e-12 {
                    log::warn!("clamping E({}) = {} into [-1, 1]", bitstring(i, n), v);
                } else {
                    log::debug!("clamping E({}) = {} into [-1, 1]", bitstring(i, n), v);
                }
                *v = v.clamp(-1.0, 1.0);
            }
        }
        Ok(Self { n, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(SettingVector) -> f64) -> Result<Self> {
        check_tensor_parties(n)?;
        let values = SettingVector::iter(n).map(f).collect();
        Self::new(n, values)
    }

    /// Correlators of the deterministic strategy with outputs `aᵢ(xᵢ)`, given
    /// per party as `(aᵢ(0), aᵢ(1))`.
    pub fn deterministic(outputs: &[(i8, i8)]) -> Result<Self> {
        let n = outputs.len();
        check_tensor_parties(n)?;
        for &(a0, a1) in outputs {
            if a0.abs() != 1 || a1.abs() != 1 {
                return Err(Error::OutOfRange("deterministic outputs must be ±1".into()));
            }
        }
        Self::from_fn(n, |x| {
            outputs
                .iter()
                .enumerate()
                .map(|(i, &(a0, a1))| if x.get(i) == 0 { a0 as f64 } else { a1 as f64 })
                .product()
        })
    }

    pub fn parties(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: SettingVector) -> f64 {
        assert_eq!(x.parties(), self.n, "setting vector has the wrong length");
        self.values[x.index()]
    }

    /// `λ·self + (1 − λ)·other`.
    pub fn mix(&self, other: &CorrelationTensor, lambda: f64) -> Result<Self> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfRange(format!("mixing weight {lambda} not in [0, 1]")));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Self::new(self.n, values)
    }

    pub fn to_json(&self) -> String {
        let correlators = SettingVector::iter(self.n)
            .map(|x| (x.to_string(), self.values[x.index()]))
            .collect();
        serde_json::to_string_pretty(&CorrelatorFile { n: self.n, correlators })
            .expect("correlator file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CorrelatorFile = serde_json::from_str(text)?;
        check_tensor_parties(file.n)?;
        if file.correlators.len() != 1 << file.n {
            return Err(Error::InvalidCorrelator(format!(
                "expected {} correlator keys, got {}",
                1usize << file.n,
                file.correlators.len()
            )));
        }
        let mut values = vec![f64::NAN; 1 << file.n];
        for (key, v) in &file.correlators {
            let idx = parse_bitstring(key, file.n)?;
            values[idx] = *v;
        }
        Self::new(file.n, values)
    }
}

#[derive(Serialize, Deserialize)]
struct CorrelatorFile {
    n: usize,
    correlators: BTreeMap<String, f64>,
}

/// Conditional probabilities `P(a⃗|x⃗)`, stored at index `x·2ⁿ + a` where the
/// outcome index `a` uses bit 0 for `+1` and bit 1 for `−1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Behavior {
    n: usize,
    probs: Vec<f64>,
}

impl Behavior {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_BEHAVIOR_PARTIES {
            return Err(Error::PartyCount { n, reason: "behaviors support 1..=10 parties" });
        }
        let dim = 1usize << n;
        if probs.len() != dim * dim {
            return Err(Error::InvalidBehavior(format!(
                "expected {} probabilities, got {}",
                dim * dim,
                probs.len()
            )));
        }
        for (i, p) in probs.iter().enumerate() {
            if !p.is_finite() || *p < -TOL {
                return Err(Error::InvalidBehavior(format!(
                    "P({}|{}) = {} is negative",
                    bitstring(i % dim, n),
                    bitstring(i / dim, n),
                    p
                )));
            }
        }
        for x in 0..dim {
            let total: f64 = probs[x * dim..(x + 1) * dim].iter().sum();
            if (total - 1.0).abs() > TOL {
                return Err(Error::InvalidBehavior(format!(
                    "probabilities for setting {} sum to {}",
                    bitstring(x, n),
                    total
                )));
            }
        }
        Ok(Self { n, probs })
    }

    /// Builds `P(a⃗|x⃗)` from a function of `(outcome index, setting index)`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        if n == 0 || n > MAX_BEHAVIOR_PARTIES {
            return Err(Error::PartyCount { n, reason: "behaviors support 1..=10 parties" });
        }
        let dim = 1usize << n;
        let probs = (0..dim * dim).map(|i| f(i % dim, i / dim)).collect();
        Self::new(n, probs)
    }

    /// The behavior `P(a⃗|x⃗) = 2⁻ⁿ(1 + Πᵢaᵢ·E(x⃗))`. Every proper marginal is
    /// uniform, so the result is no-signaling and its full correlators are `E`.
    pub fn from_full_correlators(t: &CorrelationTensor) -> Result<Self> {
        let n = t.parties();
        let scale = 1.0 / (1u64 << n) as f64;
        Self::from_fn(n, |a, x| scale * (1.0 + outcome_parity(a) * t.values()[x]))
    }

    /// Deterministic behavior with per-party outputs `(aᵢ(0), aᵢ(1))`.
    pub fn deterministic(outputs: &[(i8, i8)]) -> Result<Self> {
        let n = outputs.len();
        if outputs.iter().any(|&(a0, a1)| a0.abs() != 1 || a1.abs() != 1) {
            return Err(Error::OutOfRange("deterministic outputs must be ±1".into()));
        }
        Self::from_fn(n, |a, x| {
            let hit = outputs.iter().enumerate().all(|(i, &(a0, a1))| {
                let shift = n - 1 - i;
                let out = if (x >> shift) & 1 == 0 { a0 } else { a1 };
                let bit = (a >> shift) & 1;
                (out == 1) == (bit == 0)
            });
            if hit {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn parties(&self) -> usize {
        self.n
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// `P(a⃗|x⃗)` with `a` and `x` given as packed indices.
    pub fn prob(&self, a: usize, x: usize) -> f64 {
        self.probs[(x << self.n) + a]
    }

    pub fn mix(&self, other: &Behavior, lambda: f64) -> Result<Self> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfRange(format!("mixing weight {lambda} not in [0, 1]")));
        }
        let probs =
            self.probs.iter().zip(&other.probs).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        Self::new(self.n, probs)
    }

    pub fn to_json(&self) -> String {
        let dim = 1usize << self.n;
        let probabilities = (0..dim * dim)
            .map(|i| (format!("{}|{}", bitstring(i % dim, self.n), bitstring(i / dim, self.n)), self.probs[i]))
            .collect();
        serde_json::to_string_pretty(&BehaviorFile { n: self.n, probabilities })
            .expect("behavior file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: BehaviorFile = serde_json::from_str(text)?;
        let n = file.n;
        if n == 0 || n > MAX_BEHAVIOR_PARTIES {
            return Err(Error::PartyCount { n, reason: "behaviors support 1..=10 parties" });
        }
        let dim = 1usize << n;
        if file.probabilities.len() != dim * dim {
            return Err(Error::InvalidBehavior(format!(
                "expected {} probability keys, got {}",
                dim * dim,
                file.probabilities.len()
            )));
        }
        let mut probs = vec![f64::NAN; dim * dim];
        for (key, p) in &file.probabilities {
            let (a, x) = key
                .split_once('|')
                .ok_or_else(|| Error::Parse(format!("behavior key {key:?} lacks '|'")))?;
            let a = parse_bitstring(a, n)?;
            let x = parse_bitstring(x, n)?;
            probs[(x << n) + a] = *p;
        }
        Self::new(n, probs)
    }
}

#[derive(Serialize, Deserialize)]
struct BehaviorFile {
    n: usize,
    probabilities: BTreeMap<String, f64>,
}

/// `Πᵢ aᵢ` for a packed outcome index.
pub(crate) fn outcome_parity(a: usize) -> f64 {
    if a.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Coefficients `β(x⃗)` of a linear form over full correlators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellFunctional {
    n: usize,
    coeffs: Vec<f64>,
    name: String,
}

impl BellFunctional {
    pub fn new(n: usize, coeffs: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        check_tensor_parties(n)?;
        if coeffs.len() != 1 << n {
            return Err(Error::OutOfRange(format!(
                "expected {} coefficients, got {}",
                1usize << n,
                coeffs.len()
            )));
        }
        if let Some(bad) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::OutOfRange(format!("coefficient {} is not finite", bitstring(bad, n))));
        }
        Ok(Self { n, coeffs, name: name.into() })
    }

    pub fn parties(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, x: SettingVector) -> f64 {
        self.coeffs[x.index()]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `Σ|β(x⃗)|`, an upper bound on the operator norm of the Bell operator.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }
}

/// `Iₙ`: `β(x⃗) = 2¹⁻ⁿ`, except `β(1⃗ₙ) = 2¹⁻ⁿ − 1`.
pub fn sliwa_functional(n: usize) -> Result<BellFunctional> {
    check_tensor_parties(n)?;
    let base = 2f64.powi(1 - n as i32);
    let mut coeffs = vec![base; 1 << n];
    *coeffs.last_mut().unwrap() -= 1.0;
    BellFunctional::new(n, coeffs, format!("iota_{n}"))
}

/// `Iₙ^γ`: `β(x⃗) = γ/2ⁿ`, except `β(1⃗ₙ) = γ/2ⁿ − 1`, for `0 < γ ≤ 2`.
pub fn gamma_functional(n: usize, gamma: f64) -> Result<BellFunctional> {
    check_tensor_parties(n)?;
    if !(gamma > 0.0 && gamma <= 2.0) {
        return Err(Error::OutOfRange(format!("gamma = {gamma} must lie in (0, 2]")));
    }
    let base = gamma / (1u64 << n) as f64;
    let mut coeffs = vec![base; 1 << n];
    *coeffs.last_mut().unwrap() -= 1.0;
    BellFunctional::new(n, coeffs, format!("iota_{n}(gamma={gamma})"))
}

/// The MABK functional in the form
/// `β(x⃗) = 2^{(1−n)/2} cos[π/4 (1 − n + 2Σᵢxᵢ)]`.
pub fn mabk_functional(n: usize) -> Result<BellFunctional> {
    if n < 2 {
        return Err(Error::PartyCount { n, reason: "MABK needs at least two parties" });
    }
    check_tensor_parties(n)?;
    let scale = 2f64.powf((1.0 - n as f64) / 2.0);
    let coeffs = SettingVector::iter(n)
        .map(|x| scale * cos_quarter_pi(1 - n as i64 + 2 * x.weight() as i64))
        .collect();
    BellFunctional::new(n, coeffs, format!("mabk_{n}"))
}

/// `cos(k·π/4)` without rounding noise at the zeros.
fn cos_quarter_pi(k: i64) -> f64 {
    match k.rem_euclid(8) {
        0 => 1.0,
        1 | 7 => std::f64::consts::FRAC_1_SQRT_2,
        2 | 6 => 0.0,
        3 | 5 => -std::f64::consts::FRAC_1_SQRT_2,
        _ => -1.0,
    }
}

/// `Σ β(x⃗)·E(x⃗)`.
pub fn evaluate(f: &BellFunctional, t: &CorrelationTensor) -> Result<f64> {
    if f.n != t.n {
        return Err(Error::DimensionMismatch { expected: f.n, got: t.n });
    }
    Ok(f.coeffs.iter().zip(&t.values).map(|(b, e)| b * e).sum())
}

/// Full correlators `E(x⃗) = Σ_a⃗ Πᵢaᵢ P(a⃗|x⃗)`.
pub fn correlators_from_behavior(b: &Behavior) -> Result<CorrelationTensor> {
    let n = b.n;
    let dim = 1usize << n;
    for x in 0..dim {
        let total: f64 = b.probs[x * dim..(x + 1) * dim].iter().sum();
        if (total - 1.0).abs() > TOL {
            return Err(Error::InvalidBehavior(format!("setting {} is not normalized", bitstring(x, n))));
        }
    }
    let values = (0..dim)
        .map(|x| (0..dim).map(|a| outcome_parity(a) * b.prob(a, x)).sum())
        .collect();
    CorrelationTensor::new(n, values)
}

/// Outcome of [`check_no_signaling`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoSignalingReport {
    pub no_signaling: bool,
    /// One entry per violated identity, e.g.
    /// `"party 2: P(a_rest=+|x_rest=0) differs between x_2=0 and x_2=1 by 0.5"`.
    pub violations: Vec<String>,
}

/// Checks that the marginal of every party subset is independent of the
/// settings of the remaining parties.
///
/// It suffices to check, for each party `i`, that summing out `aᵢ` gives a
/// result independent of `xᵢ`; all other marginal identities follow.
pub fn check_no_signaling(b: &Behavior) -> NoSignalingReport {
    let n = b.n;
    let mut violations = Vec::new();
    for party in 0..n {
        let shift = n - 1 - party;
        let mask = 1usize << shift;
        for x in (0..1usize << n).filter(|x| x & mask == 0) {
            for a in (0..1usize << n).filter(|a| a & mask == 0) {
                let m0 = b.prob(a, x) + b.prob(a | mask, x);
                let m1 = b.prob(a, x | mask) + b.prob(a | mask, x | mask);
                if (m0 - m1).abs() > TOL {
                    violations.push(format!(
                        "party {}: marginal of others at a={} x={} differs between x_{}=0 and x_{}=1 by {:.3e}",
                        party + 1,
                        rest_string(a, n, party, true),
                        rest_string(x, n, party, false),
                        party + 1,
                        party + 1,
                        m0 - m1
                    ));
                }
            }
        }
    }
    NoSignalingReport { no_signaling: violations.is_empty(), violations }
}

fn rest_string(value: usize, n: usize, skip: usize, outcomes: bool) -> String {
    (0..n)
        .map(|i| {
            if i == skip {
                '_'
            } else {
                let bit = (value >> (n - 1 - i)) & 1;
                match (outcomes, bit) {
                    (true, 0) => '+',
                    (true, _) => '-',
                    (false, 0) => '0',
                    (false, _) => '1',
                }
            }
        })
        .collect()
}

/// The two-dimensional projection `(ζ, μ) = (E(1⃗ₙ), 2⁻ⁿ Σ E(x⃗))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPoint {
    pub zeta: f64,
    pub mu: f64,
}

impl ProjectionPoint {
    /// The `Iₙ` value `2μ − ζ`.
    pub fn iota_value(&self) -> f64 {
        2.0 * self.mu - self.zeta
    }
}

pub fn zeta_mu(t: &CorrelationTensor) -> ProjectionPoint {
    let zeta = *t.values.last().unwrap();
    let mu = t.values.iter().sum::<f64>() / t.values.len() as f64;
    ProjectionPoint { zeta, mu }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn sliwa_coefficients() {
        assert_eq!(sliwa_functional(2).unwrap().coeffs(), &[0.5, 0.5, 0.5, -0.5]);
        assert_eq!(sliwa_functional(1).unwrap().coeffs(), &[1.0, 0.0]);
        let f3 = sliwa_functional(3).unwrap();
        assert_eq!(f3.coeffs()[7], -0.75);
        assert!(f3.coeffs()[..7].iter().all(|&c| c == 0.25));
        assert!(sliwa_functional(0).is_err());
    }

    #[test]
    fn gamma_family() {
        assert_eq!(gamma_functional(2, 2.0).unwrap().coeffs(), sliwa_functional(2).unwrap().coeffs());
        assert_eq!(gamma_functional(2, 1.0).unwrap().coeffs(), &[0.25, 0.25, 0.25, -0.75]);
        assert_eq!(gamma_functional(3, 2.0).unwrap().coeffs(), sliwa_functional(3).unwrap().coeffs());
        assert!(gamma_functional(2, 0.0).is_err());
        assert!(gamma_functional(2, 2.5).is_err());
        assert!(gamma_functional(2, f64::NAN).is_err());
    }

    #[test]
    fn mabk_coefficients() {
        let m2 = mabk_functional(2).unwrap();
        for (c, want) in m2.coeffs().iter().zip([0.5, 0.5, 0.5, -0.5]) {
            assert!(approx(*c, want));
        }
        let m3 = mabk_functional(3).unwrap();
        assert_eq!(m3.coeffs()[0], 0.0);
        assert!(mabk_functional(1).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let f2 = sliwa_functional(2).unwrap();
        let ones = CorrelationTensor::new(2, vec![1.0; 4]).unwrap();
        assert!(approx(evaluate(&f2, &ones).unwrap(), 1.0));
        let pr = CorrelationTensor::new(2, vec![1.0, 1.0, 1.0, -1.0]).unwrap();
        assert!(approx(evaluate(&f2, &pr).unwrap(), 2.0));
        let t3 = CorrelationTensor::new(3, vec![1.0; 8]).unwrap();
        assert!(matches!(evaluate(&f2, &t3), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn tensor_clamps_small_excursions_only() {
        let t = CorrelationTensor::new(1, vec![1.0 + 5e-10, -1.0]).unwrap();
        assert_eq!(t.values()[0], 1.0);
        assert!(CorrelationTensor::new(1, vec![1.01, 0.0]).is_err());
        assert!(CorrelationTensor::new(1, vec![0.0]).is_err());
    }

    #[test]
    fn correlators_of_simple_behaviors() {
        let uniform = Behavior::from_fn(3, |_, _| 0.125).unwrap();
        let t = correlators_from_behavior(&uniform).unwrap();
        assert!(t.values().iter().all(|&e| e == 0.0));

        let outputs = [(1, -1), (-1, -1), (1, 1)];
        let det = Behavior::deterministic(&outputs).unwrap();
        let t = correlators_from_behavior(&det).unwrap();
        assert_eq!(t, CorrelationTensor::deterministic(&outputs).unwrap());
    }

    #[test]
    fn full_correlation_behavior_reproduces_correlators() {
        let g = CorrelationTensor::new(2, vec![0.3, -1.0, 0.9, 0.0]).unwrap();
        let b = Behavior::from_full_correlators(&g).unwrap();
        let t = correlators_from_behavior(&b).unwrap();
        for (x, y) in t.values().iter().zip(g.values()) {
            assert!(approx(*x, *y));
        }
    }

    #[test]
    fn unnormalized_behavior_rejected() {
        assert!(Behavior::new(1, vec![0.5, 0.4, 0.5, 0.5]).is_err());
        assert!(Behavior::new(1, vec![1.5, -0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn no_signaling_checks() {
        let det = Behavior::deterministic(&[(1, -1), (-1, 1)]).unwrap();
        assert!(check_no_signaling(&det).no_signaling);

        let pr = CorrelationTensor::new(2, vec![1.0, 1.0, 1.0, -1.0]).unwrap();
        let pr = Behavior::from_full_correlators(&pr).unwrap();
        assert!(check_no_signaling(&pr).no_signaling);

        // Party 1 outputs x₂: its marginal depends on the other party's setting.
        let signaling = Behavior::from_fn(2, |a, x| {
            let x2 = x & 1;
            let a1 = (a >> 1) & 1;
            let a2 = a & 1;
            if a1 == x2 && a2 == 0 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let report = check_no_signaling(&signaling);
        assert!(!report.no_signaling);
        assert!(report.violations.iter().any(|v| v.starts_with("party 2")), "{:?}", report.violations);
    }

    #[test]
    fn zeta_mu_examples() {
        let ones = CorrelationTensor::new(3, vec![1.0; 8]).unwrap();
        assert_eq!(zeta_mu(&ones), ProjectionPoint { zeta: 1.0, mu: 1.0 });

        for n in 2..=5 {
            let mut v = vec![1.0; 1 << n];
            *v.last_mut().unwrap() = -1.0;
            let t = CorrelationTensor::new(n, v).unwrap();
            let p = zeta_mu(&t);
            assert_eq!(p.zeta, -1.0);
            assert!(approx(p.mu, 1.0 - 2f64.powi(1 - n as i32)));
        }
    }

    #[test]
    fn json_round_trip() {
        let t = CorrelationTensor::new(2, vec![0.5, -0.25, 1.0, 0.0]).unwrap();
        let back = CorrelationTensor::from_json(&t.to_json()).unwrap();
        assert_eq!(t, back);
        assert!(t.to_json().contains("\"10\": 1.0"));

        let b = Behavior::deterministic(&[(1, -1), (-1, 1)]).unwrap();
        assert_eq!(Behavior::from_json(&b.to_json()).unwrap(), b);

        assert!(CorrelationTensor::from_json(r#"{"n":2,"correlators":{"00":1.0}}"#).is_err());
        assert!(CorrelationTensor::from_json(
            r#"{"n":1,"correlators":{"0":1.0,"2":1.0}}"#
        )
        .is_err());
    }

    #[test]
    fn setting_vector_order() {
        let x: SettingVector = "100".parse().unwrap();
        assert_eq!(x.index(), 4);
        assert_eq!(x.get(0), 1);
        assert_eq!(x.get(2), 0);
        assert_eq!(x.to_string(), "100");
        assert!("102".parse::<SettingVector>().is_err());
        assert_eq!(SettingVector::all_ones(3).unwrap().index(), 7);
    }

    fn tensor_strategy(n: usize) -> impl Strategy<Value = CorrelationTensor> {
        prop::collection::vec(-1.0f64..=1.0, 1 << n)
            .prop_map(move |v| CorrelationTensor::new(n, v).unwrap())
    }

    proptest! {
        #[test]
        fn evaluate_is_linear_under_mixing(
            (t1, t2) in (1usize..=5).prop_flat_map(|n| (tensor_strategy(n), tensor_strategy(n))),
            lambda in 0.0f64..=1.0,
        ) {
            let f = sliwa_functional(t1.parties()).unwrap();
            let mixed = t1.mix(&t2, lambda).unwrap();
            let lhs = evaluate(&f, &mixed).unwrap();
            let rhs = lambda * evaluate(&f, &t1).unwrap() + (1.0 - lambda) * evaluate(&f, &t2).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn iota_value_is_two_mu_minus_zeta(t in (1usize..=8).prop_flat_map(tensor_strategy)) {
            let f = sliwa_functional(t.parties()).unwrap();
            let p = zeta_mu(&t);
            prop_assert!((evaluate(&f, &t).unwrap() - p.iota_value()).abs() < 1e-12);
        }

        #[test]
        fn zeta_mu_commutes_with_behavior_mixing(
            (e1, e2) in (1usize..=4).prop_flat_map(|n| (tensor_strategy(n), tensor_strategy(n))),
            lambda in 0.0f64..=1.0,
        ) {
            let b1 = Behavior::from_full_correlators(&e1).unwrap();
            let b2 = Behavior::from_full_correlators(&e2).unwrap();
            let mixed = zeta_mu(&correlators_from_behavior(&b1.mix(&b2, lambda).unwrap()).unwrap());
            let p1 = zeta_mu(&correlators_from_behavior(&b1).unwrap());
            let p2 = zeta_mu(&correlators_from_behavior(&b2).unwrap());
            prop_assert!((mixed.zeta - (lambda * p1.zeta + (1.0 - lambda) * p2.zeta)).abs() < 1e-12);
            prop_assert!((mixed.mu - (lambda * p1.mu + (1.0 - lambda) * p2.mu)).abs() < 1e-12);
        }
    }
}
