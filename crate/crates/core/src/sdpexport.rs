//! Level-1 moment matrices with partial-transpose constraints, exported as
//! SDPA sparse problems for external solvers.
//!
//! Each party contributes the local monomials `I, A₀, A₁` (indices 0, 1, 2)
//! and a global monomial is indexed by `Σₖ mₖ·3^{n−1−k}`, party 1 most
//! significant. Entry `(i, j)` of the moment matrix is `Re⟨Oᵢ Oⱼ⟩`. Per
//! party the product of two local monomials is `I`, `A₀`, `A₁` (using
//! `A_s² = I`) or one of the unknown products `A₀A₁`, `A₁A₀`. Entries
//! without unknown products are marginal correlators and are written in
//! terms of the probabilities `P(a⃗|x⃗)`, with unmeasured parties at setting
//! 0. The remaining entries are free variables, one per class `{w, w†}`.
//!
//! Everything is real: the real part of a positive semidefinite Hermitian
//! matrix is positive semidefinite, and partial transposition commutes with
//! taking the real part.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bounds::Partition;
use crate::correl::{bitstring, outcome_parity, Behavior, BellFunctional};
use crate::error::{Error, Result};

pub const MAX_SDP_PARTIES: usize = 4;
pub const SUPPORTED_LEVEL: usize = 1;

/// Per-party factor of a moment-matrix entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Letter {
    I,
    A0,
    A1,
    A0A1,
    A1A0,
}

impl Letter {
    fn product(left: usize, right: usize) -> Letter {
        match (left, right) {
            (0, 0) | (1, 1) | (2, 2) => Letter::I,
            (0, 1) | (1, 0) => Letter::A0,
            (0, 2) | (2, 0) => Letter::A1,
            (1, 2) => Letter::A0A1,
            (2, 1) => Letter::A1A0,
            _ => unreachable!("level-1 monomials are 0, 1, 2"),
        }
    }

    fn adjoint(self) -> Letter {
        match self {
            Letter::A0A1 => Letter::A1A0,
            Letter::A1A0 => Letter::A0A1,
            other => other,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Letter::I => "I",
            Letter::A0 => "A0",
            Letter::A1 => "A1",
            Letter::A0A1 => "A0A1",
            Letter::A1A0 => "A1A0",
        }
    }
}

/// How one moment-matrix entry depends on the problem variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EntryKind {
    /// `Σ coeff·P(a⃗|x⃗)`, probabilities indexed like [`Behavior`].
    Observable(Vec<(usize, i8)>),
    /// Index into [`MomentStructure::free_names`].
    Free(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentStructure {
    pub n: usize,
    pub level: usize,
    pub dim: usize,
    /// Row-major, symmetric.
    entries: Vec<EntryKind>,
    pub free_names: Vec<String>,
}

pub fn build_moment_structure(n: usize, level: usize) -> Result<MomentStructure> {
    if n == 0 || n > MAX_SDP_PARTIES {
        return Err(Error::PartyCount { n, reason: "moment matrices are built for 1..=4 parties" });
    }
    if level != SUPPORTED_LEVEL {
        return Err(Error::Unsupported(format!("hierarchy level {level}; only level 1 is implemented")));
    }
    let dim = 3usize.pow(n as u32);
    let mut free: HashMap<Vec<Letter>, usize> = HashMap::new();
    let mut free_names = Vec::new();
    let mut entries = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        let li = digits(i, n);
        for j in 0..dim {
            let lj = digits(j, n);
            let word: Vec<Letter> = li.iter().zip(&lj).map(|(&a, &b)| Letter::product(a, b)).collect();
            if word.iter().any(|l| matches!(l, Letter::A0A1 | Letter::A1A0)) {
                let adj: Vec<Letter> = word.iter().map(|l| l.adjoint()).collect();
                let key = word.clone().min(adj);
                let next = free.len();
                let id = *free.entry(key.clone()).or_insert_with(|| {
                    free_names.push(format!("u[{}]", key.iter().map(|l| l.name()).collect::<Vec<_>>().join(",")));
                    next
                });
                entries.push(EntryKind::Free(id));
            } else {
                entries.push(EntryKind::Observable(correlator_terms(&word)));
            }
        }
    }
    Ok(MomentStructure { n, level, dim, entries, free_names })
}

fn digits(mut index: usize, n: usize) -> Vec<usize> {
    let mut d = vec![0; n];
    for k in (0..n).rev() {
        d[k] = index % 3;
        index /= 3;
    }
    d
}

fn undigits(d: &[usize]) -> usize {
    d.iter().fold(0, |acc, &v| acc * 3 + v)
}

/// `E_S(x_S) = Σ_a⃗ Π_{k∈S} aₖ P(a⃗|x⃗)` with the other parties at setting 0.
fn correlator_terms(word: &[Letter]) -> Vec<(usize, i8)> {
    let n = word.len();
    let mut x = 0usize;
    let mut mask = 0usize;
    for (k, l) in word.iter().enumerate() {
        let bit = 1 << (n - 1 - k);
        match l {
            Letter::A0 => mask |= bit,
            Letter::A1 => {
                mask |= bit;
                x |= bit;
            }
            _ => {}
        }
    }
    (0..1usize << n).map(|a| ((x << n) + a, outcome_parity(a & mask) as i8)).collect()
}

impl MomentStructure {
    pub fn entry(&self, i: usize, j: usize) -> &EntryKind {
        &self.entries[i * self.dim + j]
    }

    pub fn probability_count(&self) -> usize {
        1 << (2 * self.n)
    }

    /// Moment matrix for given probabilities and free-variable values.
    pub fn assemble(&self, probs: &[f64], free: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| match self.entry(i, j) {
            EntryKind::Observable(terms) => terms.iter().map(|&(p, c)| c as f64 * probs[p]).sum(),
            EntryKind::Free(u) => free[*u],
        })
    }

    /// Entry `(i, j)` of the partial transpose on `group` is entry
    /// `pairing[i·dim + j]` (flattened) of the original matrix.
    pub fn partial_transpose_indexing(&self, group: &[usize]) -> Result<Vec<usize>> {
        let in_group = group_mask(self.n, group)?;
        let mut pairing = Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            let di = digits(i, self.n);
            for j in 0..self.dim {
                let dj = digits(j, self.n);
                let (mut ni, mut nj) = (di.clone(), dj.clone());
                for k in 0..self.n {
                    if in_group[k] {
                        ni[k] = dj[k];
                        nj[k] = di[k];
                    }
                }
                pairing.push(undigits(&ni) * self.dim + undigits(&nj));
            }
        }
        Ok(pairing)
    }
}

fn group_mask(n: usize, group: &[usize]) -> Result<Vec<bool>> {
    if group.is_empty() {
        return Err(Error::InvalidPartition("empty group".into()));
    }
    let mut mask = vec![false; n];
    for &p in group {
        if p >= n || mask[p] {
            return Err(Error::InvalidPartition(format!("group {group:?} is not a set of parties below {n}")));
        }
        mask[p] = true;
    }
    Ok(mask)
}

/// Splits parties `0..n` into consecutive groups of the partition's sizes.
pub fn consecutive_groups(p: &Partition) -> Vec<Vec<usize>> {
    let mut start = 0;
    p.parts()
        .iter()
        .map(|&size| {
            let g = (start..start + size).collect();
            start += size;
            g
        })
        .collect()
}

fn check_groups(n: usize, groups: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; n];
    for g in groups {
        for (k, &inside) in group_mask(n, g)?.iter().enumerate() {
            if inside {
                if seen[k] {
                    return Err(Error::InvalidPartition(format!("party {} is in two groups", k + 1)));
                }
                seen[k] = true;
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidPartition("groups do not cover every party".into()));
    }
    Ok(())
}

/// A problem in SDPA form: minimize `c·x` subject to
/// `Σᵢ Fᵢ xᵢ − F₀ ⪰ 0`, block-diagonal. Negative block sizes denote
/// diagonal (linear-programming) blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    pub objective: Vec<f64>,
    pub block_sizes: Vec<i64>,
    /// `(variable, block, i, j) → value` with 1-based `block`, `i ≤ j`;
    /// variable 0 is the constant matrix `F₀`.
    pub entries: BTreeMap<(usize, usize, usize, usize), f64>,
    pub variable_names: Vec<String>,
}

impl SdpProblem {
    pub fn variable_count(&self) -> usize {
        self.objective.len()
    }

    pub fn to_sdpa(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.variable_count());
        let _ = writeln!(s, "{}", self.block_sizes.len());
        let sizes: Vec<String> = self.block_sizes.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(s, "{}", sizes.join(" "));
        let c: Vec<String> = self.objective.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", c.join(" "));
        for (&(var, block, i, j), v) in &self.entries {
            let _ = writeln!(s, "{var} {block} {i} {j} {v}");
        }
        s
    }

    pub fn sidecar_json(&self) -> String {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            variables: BTreeMap<usize, &'a str>,
        }
        let variables = self.variable_names.iter().enumerate().map(|(i, n)| (i + 1, n.as_str())).collect();
        serde_json::to_string_pretty(&Sidecar { variables }).expect("sidecar serializes")
    }

    /// Reads an SDPA sparse file; names come from `sidecar` when given,
    /// otherwise default to `x1, x2, …`.
    pub fn parse(sdpa: &str, sidecar: Option<&str>) -> Result<Self> {
        let mut lines = sdpa
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('"') && !l.starts_with('*'));
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse(format!("missing {what}")));
        let num_vars: usize = parse_token(next("variable count")?)?;
        let num_blocks: usize = parse_token(next("block count")?)?;
        let block_sizes = next("block sizes")?
            .split(|c: char| c.is_whitespace() || c == ',' || c == '{' || c == '}' || c == '(' || c == ')')
            .filter(|t| !t.is_empty())
            .map(parse_token)
            .collect::<Result<Vec<i64>>>()?;
        if block_sizes.len() != num_blocks {
            return Err(Error::Parse(format!("expected {num_blocks} block sizes, got {}", block_sizes.len())));
        }
        let objective = next("objective")?
            .split(|c: char| c.is_whitespace() || c == ',' || c == '{' || c == '}')
            .filter(|t| !t.is_empty())
            .map(parse_token)
            .collect::<Result<Vec<f64>>>()?;
        if objective.len() != num_vars {
            return Err(Error::Parse(format!("expected {num_vars} objective entries, got {}", objective.len())));
        }
        let mut entries = BTreeMap::new();
        for line in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 5 {
                return Err(Error::Parse(format!("bad entry line {line:?}")));
            }
            let key: (usize, usize, usize, usize) =
                (parse_token(t[0])?, parse_token(t[1])?, parse_token(t[2])?, parse_token(t[3])?);
            let (var, block, i, j) = key;
            if var > num_vars || block == 0 || block > num_blocks || i == 0 || i > j {
                return Err(Error::Parse(format!("entry out of range: {line:?}")));
            }
            if j as i64 > block_sizes[block - 1].abs() {
                return Err(Error::Parse(format!("entry outside its block: {line:?}")));
            }
            *entries.entry(key).or_insert(0.0) += parse_token::<f64>(t[4])?;
        }
        let variable_names = match sidecar {
            Some(text) => {
                #[derive(Deserialize)]
                struct Sidecar {
                    variables: BTreeMap<usize, String>,
                }
                let sc: Sidecar = serde_json::from_str(text)?;
                (1..=num_vars)
                    .map(|i| {
                        sc.variables.get(&i).cloned().ok_or_else(|| Error::Parse(format!("sidecar lacks variable {i}")))
                    })
                    .collect::<Result<_>>()?
            }
            None => (1..=num_vars).map(|i| format!("x{i}")).collect(),
        };
        Ok(Self { objective, block_sizes, entries, variable_names })
    }

    /// Writes the SDPA file at `path` and the variable catalog next to it
    /// with `.vars.json` appended. Returns the sidecar path.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        std::fs::write(path, self.to_sdpa())?;
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".vars.json");
        let sidecar = PathBuf::from(sidecar);
        std::fs::write(&sidecar, self.sidecar_json())?;
        Ok(sidecar)
    }
}

fn parse_token<T: std::str::FromStr>(t: &str) -> Result<T> {
    t.parse().map_err(|_| Error::Parse(format!("cannot parse {t:?}")))
}

/// Accumulates problem data; variables are 1-based as in SDPA.
struct Builder {
    names: Vec<String>,
    objective: Vec<f64>,
    block_sizes: Vec<i64>,
    entries: BTreeMap<(usize, usize, usize, usize), f64>,
    lp_rows: Vec<(f64, Vec<(usize, f64)>)>,
}

impl Builder {
    fn new() -> Self {
        Self { names: Vec::new(), objective: Vec::new(), block_sizes: Vec::new(), entries: BTreeMap::new(), lp_rows: Vec::new() }
    }

    fn add_var(&mut self, name: String) -> usize {
        self.names.push(name);
        self.objective.push(0.0);
        self.names.len()
    }

    fn add(&mut self, var: usize, block: usize, i: usize, j: usize, v: f64) {
        *self.entries.entry((var, block, i, j)).or_insert(0.0) += v;
    }

    /// One PSD block holding the moment matrix, read through `pairing`
    /// when given (partial transposes).
    fn moment_block(&mut self, s: &MomentStructure, vars: &MomentVars, pairing: Option<&[usize]>) {
        self.block_sizes.push(s.dim as i64);
        let block = self.block_sizes.len();
        for i in 0..s.dim {
            for j in i..s.dim {
                let flat = pairing.map_or(i * s.dim + j, |p| p[i * s.dim + j]);
                match &s.entries[flat] {
                    EntryKind::Observable(terms) => {
                        for &(p, c) in terms {
                            self.add(vars.probs[p], block, i + 1, j + 1, c as f64);
                        }
                    }
                    EntryKind::Free(u) => self.add(vars.free[*u], block, i + 1, j + 1, 1.0),
                }
            }
        }
    }

    /// `constant + Σ coeff·var ≥ 0`.
    fn lp_row(&mut self, constant: f64, terms: Vec<(usize, f64)>) {
        self.lp_rows.push((constant, terms));
    }

    fn lp_equal(&mut self, constant: f64, terms: Vec<(usize, f64)>) {
        let neg = terms.iter().map(|&(v, c)| (v, -c)).collect();
        self.lp_row(constant, terms);
        self.lp_row(-constant, neg);
    }

    fn finish(mut self) -> SdpProblem {
        if !self.lp_rows.is_empty() {
            self.block_sizes.push(-(self.lp_rows.len() as i64));
            let block = self.block_sizes.len();
            let rows = std::mem::take(&mut self.lp_rows);
            for (r, (constant, terms)) in rows.into_iter().enumerate() {
                if constant != 0.0 {
                    // The constraint matrix is Σ Fᵢxᵢ − F₀.
                    self.add(0, block, r + 1, r + 1, -constant);
                }
                for (v, c) in terms {
                    self.add(v, block, r + 1, r + 1, c);
                }
            }
        }
        self.entries.retain(|_, v| *v != 0.0);
        SdpProblem { objective: self.objective, block_sizes: self.block_sizes, entries: self.entries, variable_names: self.names }
    }
}

struct MomentVars {
    probs: Vec<usize>,
    free: Vec<usize>,
}

fn add_moment_vars(b: &mut Builder, s: &MomentStructure, tag: &str) -> MomentVars {
    let n = s.n;
    let dim = 1usize << n;
    let probs = (0..s.probability_count())
        .map(|i| b.add_var(format!("{tag}P({}|{})", bitstring(i % dim, n), bitstring(i / dim, n))))
        .collect();
    let free = s.free_names.iter().map(|u| b.add_var(format!("{tag}{u}"))).collect();
    MomentVars { probs, free }
}

/// Positivity, equal normalization across settings, and no-signaling for
/// one set of probability variables. Returns the terms of `Σ_a⃗ P(a⃗|0⃗)`.
fn behavior_constraints(b: &mut Builder, n: usize, probs: &[usize]) -> Vec<(usize, f64)> {
    let dim = 1usize << n;
    let p = |a: usize, x: usize| probs[(x << n) + a];
    for &v in probs {
        b.lp_row(0.0, vec![(v, 1.0)]);
    }
    let norm0: Vec<(usize, f64)> = (0..dim).map(|a| (p(a, 0), 1.0)).collect();
    for x in 1..dim {
        let mut terms: Vec<(usize, f64)> = (0..dim).map(|a| (p(a, x), 1.0)).collect();
        terms.extend(norm0.iter().map(|&(v, _)| (v, -1.0)));
        b.lp_equal(0.0, terms);
    }
    for party in 0..n {
        let bit = 1usize << (n - 1 - party);
        for x in (0..dim).filter(|x| x & bit == 0) {
            for a in (0..dim).filter(|a| a & bit == 0) {
                b.lp_equal(
                    0.0,
                    vec![(p(a, x), 1.0), (p(a | bit, x), 1.0), (p(a, x | bit), -1.0), (p(a | bit, x | bit), -1.0)],
                );
            }
        }
    }
    norm0
}

/// Upper bound on `f` over states that are products across `groups`:
/// maximize `Σβ(x⃗)E(x⃗)` subject to the moment matrix and its partial
/// transposes on each group being positive semidefinite. The SDPA
/// objective is the negated witness value, since SDPA minimizes.
pub fn producible_sdp(f: &BellFunctional, groups: &[Vec<usize>]) -> Result<SdpProblem> {
    let n = f.parties();
    let s = build_moment_structure(n, SUPPORTED_LEVEL)?;
    check_groups(n, groups)?;
    let mut b = Builder::new();
    let vars = add_moment_vars(&mut b, &s, "");
    let dim = 1usize << n;
    for x in 0..dim {
        for a in 0..dim {
            b.objective[vars.probs[(x << n) + a] - 1] = -f.coeffs()[x] * outcome_parity(a);
        }
    }
    b.moment_block(&s, &vars, None);
    for g in groups.iter().filter(|g| g.len() < n) {
        let pairing = s.partial_transpose_indexing(g)?;
        b.moment_block(&s, &vars, Some(&pairing));
    }
    let norm0 = behavior_constraints(&mut b, n, &vars.probs);
    b.lp_equal(-1.0, norm0);
    Ok(b.finish())
}

/// Writes [`producible_sdp`] for the consecutive grouping of `p`.
pub fn export_producible_sdp(f: &BellFunctional, p: &Partition, level: usize, path: &Path) -> Result<PathBuf> {
    if level != SUPPORTED_LEVEL {
        return Err(Error::Unsupported(format!("hierarchy level {level}; only level 1 is implemented")));
    }
    if p.total() != f.parties() {
        return Err(Error::InvalidPartition(format!("partition {p} does not split {} parties", f.parties())));
    }
    producible_sdp(f, &consecutive_groups(p))?.write(path)
}

/// All ways to split parties `0..n` into groups of at most `k`.
pub fn set_partitions(n: usize, k: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    grow(0, n, k, &mut groups, &mut out);
    out
}

fn grow(party: usize, n: usize, k: usize, groups: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
    if party == n {
        out.push(groups.clone());
        return;
    }
    for g in 0..groups.len() {
        if groups[g].len() < k {
            groups[g].push(party);
            grow(party + 1, n, k, groups, out);
            groups[g].pop();
        }
    }
    groups.push(vec![party]);
    grow(party + 1, n, k, groups, out);
    groups.pop();
}

/// Feasibility problem: is `behavior` a mixture of behaviors, each with a
/// moment matrix that is positive under partial transposition on every
/// group of some split into groups of at most `k` parties? Infeasibility
/// certifies entanglement depth above `k`.
pub fn membership_sdp(behavior: &Behavior, k: usize) -> Result<SdpProblem> {
    let n = behavior.parties();
    if k == 0 || k > n {
        return Err(Error::OutOfRange(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
    }
    let s = build_moment_structure(n, SUPPORTED_LEVEL)?;
    let classes = set_partitions(n, k);
    let mut b = Builder::new();
    let class_vars: Vec<MomentVars> =
        (0..classes.len()).map(|j| add_moment_vars(&mut b, &s, &format!("c{}.", j + 1))).collect();
    for (groups, vars) in classes.iter().zip(&class_vars) {
        b.moment_block(&s, vars, None);
        for g in groups.iter().filter(|g| g.len() < n) {
            let pairing = s.partial_transpose_indexing(g)?;
            b.moment_block(&s, vars, Some(&pairing));
        }
    }
    for vars in &class_vars {
        behavior_constraints(&mut b, n, &vars.probs);
    }
    for (idx, &target) in behavior.probabilities().iter().enumerate() {
        let terms = class_vars.iter().map(|v| (v.probs[idx], 1.0)).collect();
        b.lp_equal(-target, terms);
    }
    Ok(b.finish())
}

pub fn export_membership_sdp(behavior: &Behavior, k: usize, level: usize, path: &Path) -> Result<PathBuf> {
    if level != SUPPORTED_LEVEL {
        return Err(Error::Unsupported(format!("hierarchy level {level}; only level 1 is implemented")));
    }
    membership_sdp(behavior, k)?.write(path)
}
