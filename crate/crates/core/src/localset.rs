//! Classical (local deterministic) analysis of full-correlation functionals.

use serde::{Deserialize, Serialize};

use crate::correl::{BellFunctional, CorrelationTensor};
use crate::error::{Error, Result};
use crate::rank::integer_rank;

/// Largest party count for exhaustive strategy enumeration (4ⁿ strategies).
pub const MAX_ENUMERATION_PARTIES: usize = 10;
/// Largest party count for the sign transform.
pub const MAX_TRANSFORM_PARTIES: usize = 20;
pub const MAX_CORRELATION_FACET_PARTIES: usize = 8;
pub const MAX_BEHAVIOR_FACET_PARTIES: usize = 6;

/// Outputs `(aᵢ(0), aᵢ(1))` of every party.
///
/// Strategies are numbered by reading the per-party code
/// `2·[aᵢ(0) = −1] + [aᵢ(1) = −1]` as base-4 digits, party 1 most significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub assignments: Vec<(i8, i8)>,
}

impl DeterministicStrategy {
    pub fn from_index(n: usize, index: u64) -> Self {
        let assignments = (0..n)
            .map(|i| {
                let code = (index >> (2 * (n - 1 - i))) & 3;
                code_outputs(code as usize)
            })
            .collect();
        Self { assignments }
    }

    pub fn index(&self) -> u64 {
        self.assignments.iter().fold(0u64, |acc, &(a0, a1)| {
            (acc << 2) | (2 * (a0 == -1) as u64 + (a1 == -1) as u64)
        })
    }

    pub fn parties(&self) -> usize {
        self.assignments.len()
    }

    pub fn correlators(&self) -> CorrelationTensor {
        CorrelationTensor::deterministic(&self.assignments).expect("deterministic outputs are ±1")
    }
}

fn code_outputs(code: usize) -> (i8, i8) {
    let a0 = if code & 2 == 0 { 1 } else { -1 };
    let a1 = if code & 1 == 0 { 1 } else { -1 };
    (a0, a1)
}

/// All 4ⁿ deterministic strategies in index order.
pub fn enumerate_deterministic(n: usize) -> Result<impl Iterator<Item = DeterministicStrategy>> {
    if n == 0 || n > MAX_ENUMERATION_PARTIES {
        return Err(Error::PartyCount { n, reason: "enumeration supports 1..=10 parties" });
    }
    Ok((0..1u64 << (2 * n)).map(move |i| DeterministicStrategy::from_index(n, i)))
}

/// Power of two that turns every coefficient into an exactly representable
/// integer, if there is one.
pub(crate) fn dyadic_scale(coeffs: &[f64]) -> Option<u32> {
    (0..=60u32).find(|&s| {
        let scale = 2f64.powi(s as i32);
        coeffs.iter().all(|&c| {
            let v = c * scale;
            v.fract() == 0.0 && v.abs() < 2f64.powi(52)
        })
    })
}

fn scaled_integers(coeffs: &[f64], shift: u32) -> Vec<i64> {
    let scale = 2f64.powi(shift as i32);
    coeffs.iter().map(|&c| (c * scale) as i64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalBound {
    pub value: f64,
    pub strategy: DeterministicStrategy,
}

/// Maximum of the functional over deterministic strategies.
///
/// Party contributions are contracted one at a time in a depth-first sweep,
/// so the cost is about `2·4ⁿ` additions. Dyadic coefficients are handled in
/// exact integer arithmetic. Ties go to the lowest strategy index.
pub fn local_bound(f: &BellFunctional) -> Result<LocalBound> {
    let n = f.parties();
    if n > MAX_ENUMERATION_PARTIES {
        return Err(Error::PartyCount { n, reason: "local bound enumeration supports up to 10 parties" });
    }
    let (value, index) = match dyadic_scale(f.coeffs()) {
        Some(shift) => {
            let coeffs: Vec<i128> = scaled_integers(f.coeffs(), shift).into_iter().map(i128::from).collect();
            let (best, index) = contract_max(&coeffs, n);
            (best as f64 / 2f64.powi(shift as i32), index)
        }
        None => contract_max(f.coeffs(), n),
    };
    Ok(LocalBound { value, strategy: DeterministicStrategy::from_index(n, index) })
}

trait Scalar: Copy + PartialOrd + std::ops::Add<Output = Self> + std::ops::Neg<Output = Self> {}
impl Scalar for f64 {}
impl Scalar for i128 {}

fn contract_max<T: Scalar>(coeffs: &[T], n: usize) -> (T, u64) {
    let mut levels: Vec<Vec<T>> = (0..=n).map(|i| Vec::with_capacity(1 << (n - i))).collect();
    levels[0].extend_from_slice(coeffs);
    let mut best: Option<(T, u64)> = None;
    descend(&mut levels, 0, n, 0, &mut best);
    best.expect("at least one strategy")
}

fn descend<T: Scalar>(levels: &mut [Vec<T>], depth: usize, n: usize, prefix: u64, best: &mut Option<(T, u64)>) {
    if depth == n {
        let v = levels[n][0];
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            *best = Some((v, prefix));
        }
        return;
    }
    let half = 1usize << (n - depth - 1);
    for code in 0..4u64 {
        let (a0, a1) = code_outputs(code as usize);
        let (head, tail) = levels.split_at_mut(depth + 1);
        let src = &head[depth];
        let dst = &mut tail[0];
        dst.clear();
        for j in 0..half {
            let lo = if a0 == 1 { src[j] } else { -src[j] };
            let hi = if a1 == 1 { src[half + j] } else { -src[half + j] };
            dst.push(lo + hi);
        }
        descend(levels, depth + 1, n, (prefix << 2) | code, best);
    }
}

/// Result of the Werner–Wolf membership test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WernerWolfReport {
    pub is_member: bool,
    /// `f(r⃗) = Σ_x⃗ β(x⃗)(−1)^{r⃗·x⃗}`, indexed like setting vectors.
    pub sign_function: Vec<f64>,
}

/// In-place unnormalized Walsh–Hadamard butterfly.
pub fn sign_transform(values: &mut [f64]) {
    let len = values.len();
    assert!(len.is_power_of_two(), "transform length must be a power of two");
    let mut h = 1;
    while h < len {
        for block in values.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Tests whether `f(r⃗)` takes only the values ±1, which characterizes the
/// facets of the local full-correlation polytope.
pub fn werner_wolf_check(f: &BellFunctional) -> Result<WernerWolfReport> {
    let n = f.parties();
    if n > MAX_TRANSFORM_PARTIES {
        return Err(Error::PartyCount { n, reason: "sign transform supports up to 20 parties" });
    }
    let mut values = f.coeffs().to_vec();
    sign_transform(&mut values);
    let is_member = values.iter().all(|v| (v.abs() - 1.0).abs() <= 1e-9);
    Ok(WernerWolfReport { is_member, sign_function: values })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetReport {
    pub saturating_count: usize,
    pub affine_rank: usize,
    pub required_rank: usize,
    pub is_facet: bool,
}

/// Decides `Σβ·v = bound` for integer vertex coordinates.
enum Saturation {
    Exact { coeffs: Vec<i64>, bound: i128 },
    Approx { coeffs: Vec<f64>, bound: f64 },
}

impl Saturation {
    fn new(f: &BellFunctional, bound: f64) -> Self {
        if let Some(shift) = dyadic_scale(f.coeffs()) {
            let scaled = bound * 2f64.powi(shift as i32);
            if scaled.fract() == 0.0 && scaled.abs() < 2f64.powi(62) {
                return Saturation::Exact { coeffs: scaled_integers(f.coeffs(), shift), bound: scaled as i128 };
            }
            // A dyadic functional cannot reach a non-dyadic bound on ±1 vertices.
            return Saturation::Exact { coeffs: scaled_integers(f.coeffs(), shift), bound: i128::MAX };
        }
        Saturation::Approx { coeffs: f.coeffs().to_vec(), bound }
    }

    fn saturates(&self, correlators: impl Iterator<Item = i64>) -> bool {
        match self {
            Saturation::Exact { coeffs, bound } => {
                let v: i128 = coeffs.iter().zip(correlators).map(|(&c, e)| c as i128 * e as i128).sum();
                v == *bound
            }
            Saturation::Approx { coeffs, bound } => {
                let v: f64 = coeffs.iter().zip(correlators).map(|(&c, e)| c * e as f64).sum();
                (v - bound).abs() <= 1e-9
            }
        }
    }
}

/// Checks whether `Σβ(x⃗)E(x⃗) ≤ bound` defines a facet of the local
/// full-correlation polytope in `ℝ^{2ⁿ}`.
///
/// The polytope has `2ⁿ⁺¹` distinct vertices `E(x⃗) = s·Π_{i: xᵢ=1} tᵢ` with
/// `s, tᵢ ∈ {±1}`; the saturating ones must span an affine space of
/// dimension `2ⁿ − 1`.
pub fn facet_check_full_correlation(f: &BellFunctional, bound: f64) -> Result<FacetReport> {
    let n = f.parties();
    if n > MAX_CORRELATION_FACET_PARTIES {
        return Err(Error::PartyCount { n, reason: "full-correlation facet check supports up to 8 parties" });
    }
    let sat = Saturation::new(f, bound);
    let dim = 1usize << n;
    let mut rows = Vec::new();
    for sign in [1i64, -1] {
        for flips in 0..dim {
            // Party i flips its output between settings when bit i of `flips` is set.
            let vertex: Vec<i64> =
                (0..dim).map(|x| if (x & flips).count_ones() % 2 == 0 { sign } else { -sign }).collect();
            if sat.saturates(vertex.iter().copied()) {
                let mut row = vertex;
                row.push(1);
                rows.push(row);
            }
        }
    }
    finish_report(rows, dim - 1, bound)
}

/// Coordinates of a deterministic behavior in the no-signaling subspace:
/// one entry per choice, for each party, of "not measured", setting 0 or
/// setting 1 (base-3 digits, party 1 most significant). The all-unmeasured
/// entry is the constant 1.
pub(crate) fn behavior_coordinates(assignments: &[(i8, i8)]) -> Vec<i64> {
    let mut coords = vec![1i64];
    for &(a0, a1) in assignments {
        let mut next = Vec::with_capacity(coords.len() * 3);
        for &c in &coords {
            next.extend_from_slice(&[c, c * a0 as i64, c * a1 as i64]);
        }
        coords = next;
    }
    coords
}

/// Checks whether the functional defines a facet of the full local polytope
/// (all marginals included), whose affine hull has dimension `3ⁿ − 1`.
pub fn facet_check_local_polytope(f: &BellFunctional, bound: f64) -> Result<FacetReport> {
    let n = f.parties();
    if n > MAX_BEHAVIOR_FACET_PARTIES {
        return Err(Error::PartyCount { n, reason: "behavior-space facet check supports up to 6 parties" });
    }
    let sat = Saturation::new(f, bound);
    let full_positions: Vec<usize> = (0..3usize.pow(n as u32)).filter(|&m| no_zero_digit(m, n)).collect();
    let mut rows = Vec::new();
    for strategy in enumerate_deterministic(n)? {
        let coords = behavior_coordinates(&strategy.assignments);
        if sat.saturates(full_positions.iter().map(|&m| coords[m])) {
            rows.push(coords);
        }
    }
    finish_report(rows, 3usize.pow(n as u32) - 2, bound)
}

/// True when no base-3 digit of `m` is 0, i.e. every party is measured.
/// Digits 1 and 2 map to settings 0 and 1, so with this ordering the
/// filtered positions enumerate setting vectors in index order.
fn no_zero_digit(mut m: usize, n: usize) -> bool {
    for _ in 0..n {
        if m % 3 == 0 {
            return false;
        }
        m /= 3;
    }
    true
}

fn finish_report(rows: Vec<Vec<i64>>, required_rank: usize, bound: f64) -> Result<FacetReport> {
    if rows.is_empty() {
        return Err(Error::NoSaturatingVertex { bound });
    }
    // Rows carry a homogenizing coordinate, so the linear rank is one more
    // than the affine rank of the vertex set.
    let affine_rank = integer_rank(&rows, Some(required_rank + 2)) - 1;
    Ok(FacetReport {
        saturating_count: rows.len(),
        affine_rank,
        required_rank,
        is_facet: affine_rank == required_rank,
    })
}
