//! Bounds on witness values for k-producible resources, and the partition
//! combinatorics behind them.

use serde::{Deserialize, Serialize};

use crate::correl::{gamma_functional, mabk_functional, sliwa_functional, Behavior, CorrelationTensor};
use crate::error::{Error, Result};
use crate::localset::{local_bound, MAX_ENUMERATION_PARTIES};
use crate::quantum::{quantum_max, seesaw, SeesawOptions};

/// Largest party count accepted by [`visibility_threshold`].
pub const MAX_VISIBILITY_PARTIES: usize = 8;

/// Group sizes `(n₁ ≥ n₂ ≥ … ≥ n_m)` of a split of `n` parties.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::InvalidPartition(format!("{parts:?} must contain positive parts")));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidPartition(format!("{parts:?} is not non-increasing")));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Number of groups `m`.
    pub fn groups(&self) -> usize {
        self.parts.len()
    }

    /// Number of single-party groups `L`.
    pub fn singletons(&self) -> usize {
        self.parts.iter().filter(|&&p| p == 1).count()
    }

    pub fn largest(&self) -> usize {
        self.parts[0]
    }
}

impl std::fmt::Display for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Partitions of `n` whose largest part is at most `k` (or exactly `k` when
/// `exact`), in descending lexicographic order.
pub fn partitions_up_to(n: usize, k: usize, exact: bool) -> Result<Vec<Partition>> {
    if k == 0 || k > n {
        return Err(Error::OutOfRange(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
    }
    let mut out = Vec::new();
    let mut current = Vec::new();
    collect_partitions(n, k, &mut current, &mut out);
    if exact {
        out.retain(|p| p.largest() == k);
    }
    Ok(out)
}

fn collect_partitions(remaining: usize, max_part: usize, current: &mut Vec<usize>, out: &mut Vec<Partition>) {
    if remaining == 0 {
        out.push(Partition { parts: current.clone() });
        return;
    }
    for part in (1..=max_part.min(remaining)).rev() {
        current.push(part);
        collect_partitions(remaining - part, part, current, out);
        current.pop();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Iota,
    Gamma,
    Mabk,
    Ns,
}

/// Largest witness value compatible with k-producible resources.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessBound {
    pub family: Family,
    pub n: usize,
    pub k: usize,
    pub bound: f64,
    /// False when the bound exceeds what a single k-party group can reach,
    /// so the witness does not certify depth for this `(n, k)`.
    pub valid: bool,
    pub note: String,
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::OutOfRange(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
    }
    Ok(())
}

/// Bound on `Iₙ` for k-producible states: the k-party quantum maximum,
/// independent of `n`.
pub fn producible_quantum_bound(n: usize, k: usize) -> Result<WitnessBound> {
    check_nk(n, k)?;
    let (bound, note) = if k == 1 {
        (local_bound(&sliwa_functional(1)?)?.value, "local bound".to_string())
    } else {
        let q = quantum_max(k);
        (q.value, format!("{k}-party ansatz optimum at phi = {:.10}", q.phi))
    };
    Ok(WitnessBound { family: Family::Iota, n, k, bound, valid: true, note })
}

/// Bound on `Iₙ` when each group of at most `k` parties shares arbitrary
/// no-signaling correlations: `3 − 2^{2−k}`.
pub fn producible_ns_bound(k: usize) -> Result<WitnessBound> {
    if k == 0 {
        return Err(Error::OutOfRange("k must be at least 1".into()));
    }
    Ok(WitnessBound {
        family: Family::Ns,
        n: k,
        k,
        bound: algebraic_max(k),
        valid: true,
        note: "algebraic maximum of the k-party functional".into(),
    })
}

/// `3 − 2^{2−n}`, the largest value of `Iₙ` over all correlators in
/// `[−1, 1]`.
pub fn algebraic_max(n: usize) -> f64 {
    3.0 - 2f64.powi(2 - n as i32)
}

/// No-signaling behavior reaching [`algebraic_max`]: uniform marginals and
/// full correlators `+1`, except `−1` at the all-ones setting.
pub fn algebraic_max_witness(n: usize) -> Result<Behavior> {
    let mut values = vec![1.0; 1 << n];
    *values.last_mut().unwrap() = -1.0;
    Behavior::from_full_correlators(&CorrelationTensor::new(n, values)?)
}

/// Smallest visibility of the noisy GHZ state `v|GHZₙ⟩⟨GHZₙ| + (1−v)I/2ⁿ`
/// at which `Iₙ` still exceeds the k-producible bound.
pub fn visibility_threshold(n: usize, k: usize) -> Result<f64> {
    if !(1 <= k && k < n && n <= MAX_VISIBILITY_PARTIES) {
        return Err(Error::OutOfRange(format!("need 1 <= k < n <= 8, got n = {n}, k = {k}")));
    }
    Ok(producible_quantum_bound(n, k)?.bound / quantum_max(n).value)
}

/// Exponent `e` with `mabk_partition_bound(p) = √2^e`: `n + L − 2m + 1`.
pub fn mabk_partition_exponent(p: &Partition) -> i64 {
    p.total() as i64 + p.singletons() as i64 - 2 * p.groups() as i64 + 1
}

/// Largest normalized MABK value for a product of states on the groups of
/// `p`.
pub fn mabk_partition_bound(p: &Partition) -> f64 {
    sqrt2_power(mabk_partition_exponent(p))
}

fn sqrt2_power(e: i64) -> f64 {
    let base = 2f64.powi((e / 2) as i32);
    if e % 2 == 0 {
        base
    } else {
        base * std::f64::consts::SQRT_2
    }
}

/// MABK bound for k-producible states, with its exponent of `√2`.
///
/// Valid only when the worst partition does no better than one k-party
/// group, i.e. the bound equals `2^{(k−1)/2}`.
pub fn mabk_producible_bound(n: usize, k: usize) -> Result<(WitnessBound, i64)> {
    check_nk(n, k)?;
    if n < 2 {
        return Err(Error::PartyCount { n, reason: "MABK needs at least two parties" });
    }
    if k == 1 {
        if n > MAX_ENUMERATION_PARTIES {
            return Err(Error::Unsupported(format!("local MABK bound is enumerated only up to n = {MAX_ENUMERATION_PARTIES}")));
        }
        let local = local_bound(&mabk_functional(n)?)?.value;
        let wb = WitnessBound { family: Family::Mabk, n, k, bound: local, valid: true, note: "local bound".into() };
        return Ok((wb, 0));
    }
    let best = partitions_up_to(n, k, false)?
        .into_iter()
        .max_by_key(mabk_partition_exponent)
        .expect("at least one partition");
    let exponent = mabk_partition_exponent(&best);
    let valid = exponent == k as i64 - 1;
    let wb = WitnessBound {
        family: Family::Mabk,
        n,
        k,
        bound: sqrt2_power(exponent),
        valid,
        note: format!("worst partition {best}"),
    };
    Ok((wb, exponent))
}

/// Bound on `Iₙ^γ` for k-producible states: the best see-saw value of the
/// k-party functional (local bound for `k = 1`).
pub fn gamma_producible_bound(n: usize, k: usize, gamma: f64, opts: &SeesawOptions) -> Result<WitnessBound> {
    check_nk(n, k)?;
    let f = gamma_functional(k, gamma)?;
    let (bound, note) = if k == 1 {
        (local_bound(&f)?.value, "local bound".to_string())
    } else {
        let r = seesaw(&f, opts)?;
        (r.value, format!("see-saw, {} restarts, seed {}", opts.restarts, opts.seed))
    };
    Ok(WitnessBound { family: Family::Gamma, n, k, bound, valid: true, note })
}
