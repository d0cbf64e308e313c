//! Correlator estimation from outcome counts, and depth certificates.
//!
//! Statistics use Gaussian error propagation with independent settings:
//! the standard error of `Σβ(x⃗)E(x⃗)` is `√(Σβ(x⃗)²σ(x⃗)²)`, and a value
//! counts as exceeding a bound only after subtracting `sigmas` times that
//! error.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::bounds::{algebraic_max, producible_ns_bound, producible_quantum_bound};
use crate::correl::{bitstring, evaluate, sliwa_functional, Behavior, CorrelationTensor, SettingVector};
use crate::error::{Error, Result};
use crate::quantum::quantum_max;

pub const DEFAULT_SIGMAS: f64 = 3.0;

/// Margin by which a value must exceed a bound to count as crossing it, so
/// that values equal to a bound up to rounding certify nothing.
pub const CROSSING_EPS: f64 = 1e-9;

/// Outcome counts for one setting vector, keyed by packed outcome index
/// (bit 0 for `+1`).
#[derive(Clone, Debug, PartialEq)]
pub struct CountRecord {
    pub setting: SettingVector,
    pub counts: BTreeMap<usize, u64>,
}

impl CountRecord {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

#[derive(Serialize, Deserialize)]
struct CountsFile {
    n: usize,
    records: Vec<RecordEntry>,
}

#[derive(Serialize, Deserialize)]
struct RecordEntry {
    setting: String,
    counts: BTreeMap<String, u64>,
}

/// Parses `{"n": …, "records": [{"setting": "010", "counts": {"++−": 12}}]}`.
/// Outcome strings use `+` and `-` (or `−`).
pub fn parse_counts(text: &str) -> Result<Vec<CountRecord>> {
    let file: CountsFile = serde_json::from_str(text)?;
    let n = file.n;
    file.records
        .iter()
        .map(|entry| {
            let setting: SettingVector = entry.setting.parse()?;
            if setting.parties() != n {
                return Err(Error::Parse(format!("setting {:?} does not have {n} parties", entry.setting)));
            }
            let mut counts = BTreeMap::new();
            for (outcome, &c) in &entry.counts {
                *counts.entry(parse_outcome(outcome, n)?).or_insert(0) += c;
            }
            Ok(CountRecord { setting, counts })
        })
        .collect()
}

fn parse_outcome(s: &str, n: usize) -> Result<usize> {
    let mut a = 0usize;
    let mut len = 0;
    for c in s.chars() {
        let bit = match c {
            '+' => 0,
            '-' | '−' => 1,
            other => return Err(Error::Parse(format!("invalid outcome character {other:?} in {s:?}"))),
        };
        a = (a << 1) | bit;
        len += 1;
    }
    if len != n {
        return Err(Error::Parse(format!("outcome {s:?} should have {n} symbols")));
    }
    Ok(a)
}

pub fn counts_to_json(records: &[CountRecord]) -> Result<String> {
    let n = records.first().map(|r| r.setting.parties()).ok_or_else(|| Error::MissingData("no records".into()))?;
    let records = records
        .iter()
        .map(|r| RecordEntry {
            setting: r.setting.to_string(),
            counts: r
                .counts
                .iter()
                .map(|(&a, &c)| (bitstring(a, n).replace('0', "+").replace('1', "-"), c))
                .collect(),
        })
        .collect();
    Ok(serde_json::to_string_pretty(&CountsFile { n, records })?)
}

/// Draws `shots` outcomes per setting from `behavior`.
pub fn simulate_counts(behavior: &Behavior, shots: u64, rng: &mut impl Rng) -> Result<Vec<CountRecord>> {
    let n = behavior.parties();
    let dim = 1usize << n;
    (0..dim)
        .map(|x| {
            // Multinomial draw as a chain of conditional binomials.
            let mut counts = BTreeMap::new();
            let mut left = shots;
            let mut mass = 1.0;
            for a in 0..dim {
                if left == 0 {
                    break;
                }
                let p = behavior.prob(a, x);
                let c = if a == dim - 1 || mass <= p {
                    left
                } else {
                    let q = (p / mass).clamp(0.0, 1.0);
                    Binomial::new(left, q).map_err(|e| Error::OutOfRange(e.to_string()))?.sample(rng)
                };
                if c > 0 {
                    counts.insert(a, c);
                }
                left -= c;
                mass -= p;
            }
            Ok(CountRecord { setting: SettingVector::from_index(n, x)?, counts })
        })
        .collect()
}

/// Full correlators with per-setting standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorEstimate {
    pub tensor: CorrelationTensor,
    /// `√((1 − E²)/N)`, indexed like setting vectors.
    pub stderr: Vec<f64>,
}

/// `E = (N₊ − N₋)/N` per setting, where `N±` counts outcomes of parity ±1.
pub fn estimate(records: &[CountRecord]) -> Result<CorrelatorEstimate> {
    let n = records.first().map(|r| r.setting.parties()).ok_or_else(|| Error::MissingData("no records".into()))?;
    let dim = 1usize << n;
    let mut values = vec![None; dim];
    let mut stderr = vec![0.0; dim];
    for r in records {
        if r.setting.parties() != n {
            return Err(Error::DimensionMismatch { expected: n, got: r.setting.parties() });
        }
        let x = r.setting.index();
        if values[x].is_some() {
            return Err(Error::InvalidBehavior(format!("setting {} appears twice", r.setting)));
        }
        let total = r.total();
        if total == 0 {
            return Err(Error::MissingData(format!("setting {} has no counts", r.setting)));
        }
        let signed: i128 = r
            .counts
            .iter()
            .map(|(&a, &c)| if a.count_ones() % 2 == 0 { c as i128 } else { -(c as i128) })
            .sum();
        let e = signed as f64 / total as f64;
        values[x] = Some(e);
        stderr[x] = ((1.0 - e * e).max(0.0) / total as f64).sqrt();
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(x, v)| v.ok_or_else(|| Error::MissingData(format!("setting {} has no record", bitstring(x, n)))))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelatorEstimate { tensor: CorrelationTensor::new(n, values)?, stderr })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Entanglement depth, against k-producible quantum bounds.
    Entanglement,
    /// Nonlocality depth, against k-group no-signaling bounds.
    Nonlocality,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub k: usize,
    pub bound: f64,
    pub crossed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub functional: String,
    pub scale: Scale,
    pub n: usize,
    pub observed: f64,
    /// Propagated standard error of the functional.
    pub stderr: f64,
    pub sigmas: f64,
    pub adjusted: f64,
    pub bounds: Vec<BoundRow>,
    /// The data rule out every resource of depth below this.
    pub certified_depth: usize,
    pub warnings: Vec<String>,
    pub statistics: String,
}

impl CertificationReport {
    pub fn to_text(&self) -> String {
        let scale = match self.scale {
            Scale::Entanglement => "entanglement depth",
            Scale::Nonlocality => "nonlocality depth",
        };
        let mut s = String::new();
        let _ = writeln!(s, "functional      {}", self.functional);
        let _ = writeln!(s, "observed        {:.6} ± {:.6}", self.observed, self.stderr);
        let _ = writeln!(s, "adjusted        {:.6} ({} sigma)", self.adjusted, self.sigmas);
        let _ = writeln!(s, "bounds");
        for row in &self.bounds {
            let _ = writeln!(s, "  k = {:<3} {:.6}  {}", row.k, row.bound, if row.crossed { "exceeded" } else { "-" });
        }
        let _ = writeln!(s, "certified {scale} >= {}", self.certified_depth);
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(s, "statistics: {}", self.statistics);
        s
    }
}

fn propagated_stderr(coeffs: &[f64], stderr: &[f64]) -> f64 {
    coeffs.iter().zip(stderr).map(|(b, s)| (b * s).powi(2)).sum::<f64>().sqrt()
}

fn check_sigmas(sigmas: f64) -> Result<()> {
    if !(sigmas >= 0.0 && sigmas.is_finite()) {
        return Err(Error::OutOfRange(format!("sigmas = {sigmas} must be a finite non-negative number")));
    }
    Ok(())
}

fn certify(
    est: &CorrelatorEstimate,
    sigmas: f64,
    scale: Scale,
    bound: impl Fn(usize) -> Result<f64>,
    ceiling: f64,
    ceiling_name: &str,
) -> Result<CertificationReport> {
    check_sigmas(sigmas)?;
    let n = est.tensor.parties();
    let f = sliwa_functional(n)?;
    let observed = evaluate(&f, &est.tensor)?;
    let stderr = propagated_stderr(f.coeffs(), &est.stderr);
    let adjusted = observed - sigmas * stderr;
    let bounds = (1..n)
        .map(|k| {
            let b = bound(k)?;
            Ok(BoundRow { k, bound: b, crossed: adjusted > b + CROSSING_EPS })
        })
        .collect::<Result<Vec<_>>>()?;
    let certified_depth = 1 + bounds.iter().filter(|r| r.crossed).map(|r| r.k).max().unwrap_or(0);
    let mut warnings = Vec::new();
    if adjusted > ceiling + 1e-6 {
        warnings.push(format!("adjusted value {adjusted:.6} exceeds {ceiling_name} {ceiling:.6}"));
    }
    Ok(CertificationReport {
        functional: f.name().to_string(),
        scale,
        n,
        observed,
        stderr,
        sigmas,
        adjusted,
        bounds,
        certified_depth,
        warnings,
        statistics: "Gaussian error propagation, independent settings".into(),
    })
}

/// Entanglement depth certified by the `Iₙ` value of the estimate.
pub fn certify_depth(est: &CorrelatorEstimate, sigmas: f64) -> Result<CertificationReport> {
    let n = est.tensor.parties();
    certify(
        est,
        sigmas,
        Scale::Entanglement,
        |k| Ok(producible_quantum_bound(n, k)?.bound),
        quantum_max(n).value,
        "the n-partite quantum bound",
    )
}

/// Nonlocality depth certified by the `Iₙ` value of the estimate.
pub fn certify_nonlocality_depth(est: &CorrelatorEstimate, sigmas: f64) -> Result<CertificationReport> {
    let n = est.tensor.parties();
    certify(
        est,
        sigmas,
        Scale::Nonlocality,
        |k| Ok(producible_ns_bound(k)?.bound),
        algebraic_max(n),
        "the algebraic maximum",
    )
}

/// Estimate built from exact correlators, with zero error bars.
pub fn exact_estimate(tensor: CorrelationTensor) -> CorrelatorEstimate {
    let stderr = vec![0.0; tensor.values().len()];
    CorrelatorEstimate { tensor, stderr }
}

/// Visibility of a noisy GHZ state implied by an observed `Iₙ` value,
/// assuming the optimal measurements. Identity noise contributes nothing to
/// full correlators of traceless observables, so the value scales linearly.
pub fn visibility_report(n: usize, observed: f64) -> Result<f64> {
    let qmax = quantum_max(n).value;
    if !(1.0..=qmax + 1e-9).contains(&observed) {
        return Err(Error::OutOfRange(format!("observed value {observed} outside [1, {qmax}]")));
    }
    Ok(observed / qmax)
}
