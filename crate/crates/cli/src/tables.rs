//! Reference tables recomputed from scratch and compared with stored values.

use std::fmt::Write as _;

use bellwit::bounds::{algebraic_max, mabk_partition_bound, visibility_threshold, Partition};
use bellwit::quantum::{quantum_max, seesaw_fixed_state, SeesawOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{fixed_state, witness_functional, Failure, StateKind, TableId, Witness};

pub const GOLDEN: &str = include_str!("../data/golden.json");

const SUPPORTED_VERSION: u32 = 1;

#[derive(Deserialize)]
struct GoldenFile {
    version: u32,
    entries: Vec<GoldenEntry>,
}

#[derive(Deserialize)]
struct GoldenEntry {
    table: String,
    label: String,
    quantity: Quantity,
    value: f64,
    tolerance: f64,
    /// The stored value is the best one found so far; exceeding it passes.
    #[serde(default)]
    at_least: bool,
    #[serde(default)]
    note: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Quantity {
    QuantumMax { n: usize },
    Visibility { n: usize },
    AlgebraicMax { n: usize },
    OptimalAngle { n: usize },
    PartitionBound { parts: Vec<usize> },
    FixedState { state: StateKind, witness: FixedWitness, n: usize },
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
enum FixedWitness {
    Iota,
    Mabk,
}

#[derive(Debug, Serialize)]
pub struct Row {
    pub table: String,
    pub label: String,
    pub expected: f64,
    pub computed: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub at_least: bool,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn compute(q: &Quantity, opts: &SeesawOptions) -> bellwit::Result<f64> {
    Ok(match q {
        Quantity::QuantumMax { n } => quantum_max(*n).value,
        Quantity::Visibility { n } => visibility_threshold(*n, 1)?,
        Quantity::AlgebraicMax { n } => algebraic_max(*n),
        Quantity::OptimalAngle { n } => quantum_max(*n).phi,
        Quantity::PartitionBound { parts } => mabk_partition_bound(&Partition::new(parts.clone())?),
        Quantity::FixedState { state, witness, n } => {
            let w = match witness {
                FixedWitness::Iota => Witness::Iota,
                FixedWitness::Mabk => Witness::Mabk,
            };
            let f = witness_functional(w, *n, 2.0)?;
            let psi = fixed_state(*state, *n)?
                .ok_or_else(|| bellwit::Error::MissingData("a fixed-state entry needs a named state".into()))?;
            seesaw_fixed_state(&f, &psi, opts)?.value
        }
    })
}

fn selected(id: TableId, table: &str) -> bool {
    match id {
        TableId::All => true,
        TableId::Maxima => table == "maxima",
        TableId::Angles => table == "angles",
        TableId::Partitions => table == "partitions",
        TableId::States => table == "states",
    }
}

pub fn reproduce(data: &str, id: TableId, opts: &SeesawOptions) -> Result<Vec<Row>, Failure> {
    let file: GoldenFile = serde_json::from_str(data).map_err(bellwit::Error::from)?;
    if file.version != SUPPORTED_VERSION {
        return Err(bellwit::Error::Parse(format!("reference data version {} is not supported", file.version)).into());
    }
    let entries: Vec<_> = file.entries.into_iter().filter(|e| selected(id, &e.table)).collect();
    let computed = entries.par_iter().map(|e| compute(&e.quantity, opts)).collect::<bellwit::Result<Vec<_>>>()?;
    Ok(entries
        .into_iter()
        .zip(computed)
        .map(|(e, computed)| {
            let delta = computed - e.value;
            let ok = if e.at_least { delta >= -e.tolerance } else { delta.abs() <= e.tolerance };
            Row {
                table: e.table,
                label: e.label,
                expected: e.value,
                computed,
                delta,
                tolerance: e.tolerance,
                at_least: e.at_least,
                ok,
                note: e.note,
            }
        })
        .collect())
}

pub fn render(rows: &[Row]) -> String {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(0);
    let mut s = String::new();
    let mut current = "";
    for r in rows {
        if r.table != current {
            current = &r.table;
            let _ = writeln!(s, "{}{current}", if s.is_empty() { "" } else { "\n" });
        }
        let status = match (r.ok, r.at_least && r.delta > r.tolerance) {
            (false, _) => "MISMATCH",
            (true, true) => "ok (exceeds)",
            (true, false) => "ok",
        };
        let _ = writeln!(
            s,
            "  {:<width$}  {:>12.6}  {:>12.6}  {:>+10.2e}  {status}",
            r.label, r.expected, r.computed, r.delta
        );
        if let Some(note) = &r.note {
            let _ = writeln!(s, "  {:<width$}  note: {note}", "");
        }
    }
    s
}
