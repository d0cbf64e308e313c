//! Alternating maximization over the state and the per-party observables.
//!
//! Each step is an exact conditional maximization, so the value never
//! decreases along a run. Restarts are independent and are merged by
//! value, ties going to the lower restart index, so the result does not
//! depend on the thread count.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bell_operator, expectation, for_each_branch, Mat2, QuantumStrategy, QubitObservable, StateVector, C64};
use crate::correl::{evaluate, BellFunctional};
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 20_170_621;

/// Largest party count handled.
pub const MAX_SEESAW_PARTIES: usize = 10;

/// Above this party count the state step uses power iteration instead of a
/// full eigendecomposition.
const DENSE_EIGEN_PARTIES: usize = 8;

const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub max_sweeps: usize,
    /// Stop once a sweep improves the value by less than this.
    pub tolerance: f64,
    pub seed: u64,
    /// Also consider the trivial observables `±I` in observable steps.
    pub trivial_observables: bool,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self { restarts: 50, max_sweeps: 500, tolerance: 1e-9, seed: DEFAULT_SEED, trivial_observables: true }
    }
}

#[derive(Clone, Debug)]
pub struct SeesawResult {
    pub strategy: QuantumStrategy,
    pub value: f64,
    pub seed: u64,
    pub best_restart: usize,
    /// Value after every state or observable step, one trace per restart.
    pub traces: Vec<Vec<f64>>,
    pub degenerate_restarts: usize,
}

impl SeesawResult {
    /// True when no trace decreases by more than `tol` between steps.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.traces.iter().all(|t| t.windows(2).all(|w| w[1] >= w[0] - tol))
    }
}

/// Lower bound on the quantum maximum of `f` over `n`-qubit pure states.
pub fn seesaw(f: &BellFunctional, opts: &SeesawOptions) -> Result<SeesawResult> {
    run(f, None, opts)
}

/// Lower bound on the maximal value of `f` on a fixed state.
pub fn seesaw_fixed_state(f: &BellFunctional, state: &StateVector, opts: &SeesawOptions) -> Result<SeesawResult> {
    if state.qubits() != f.parties() {
        return Err(Error::DimensionMismatch { expected: f.parties(), got: state.qubits() });
    }
    run(f, Some(state), opts)
}

struct Restart {
    strategy: QuantumStrategy,
    value: f64,
    trace: Vec<f64>,
    degenerate: bool,
}

fn run(f: &BellFunctional, fixed: Option<&StateVector>, opts: &SeesawOptions) -> Result<SeesawResult> {
    let n = f.parties();
    if n > MAX_SEESAW_PARTIES {
        return Err(Error::PartyCount { n, reason: "see-saw supports up to 10 parties" });
    }
    if opts.restarts == 0 {
        return Err(Error::OutOfRange("at least one restart is required".into()));
    }
    let runs: Vec<Restart> =
        (0..opts.restarts).into_par_iter().map(|r| run_restart(f, fixed, opts, r)).collect::<Result<_>>()?;
    let degenerate_restarts = runs.iter().filter(|r| r.degenerate).count();
    if degenerate_restarts == runs.len() {
        return Err(Error::Degenerate(format!(
            "all {} restarts stalled with vanishing effective observables",
            runs.len()
        )));
    }
    let (best_restart, _) = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.degenerate)
        .fold(None::<(usize, f64)>, |acc, (i, r)| match acc {
            Some((_, v)) if v >= r.value => acc,
            _ => Some((i, r.value)),
        })
        .expect("at least one usable restart");
    let traces = runs.iter().map(|r| r.trace.clone()).collect();
    let best = runs.into_iter().nth(best_restart).unwrap();
    log::debug!("see-saw best value {} from restart {best_restart}", best.value);
    Ok(SeesawResult {
        strategy: best.strategy,
        value: best.value,
        seed: opts.seed,
        best_restart,
        traces,
        degenerate_restarts,
    })
}

fn run_restart(f: &BellFunctional, fixed: Option<&StateVector>, opts: &SeesawOptions, restart: usize) -> Result<Restart> {
    let n = f.parties();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(restart as u64);
    let mut observables: Vec<[QubitObservable; 2]> = (0..n)
        .map(|_| {
            let mut draw = || QubitObservable::new(UnitSphere.sample(&mut rng)).expect("unit sphere sample");
            [draw(), draw()]
        })
        .collect();

    let mut trace = Vec::new();
    let mut state = match fixed {
        Some(s) => s.clone(),
        None => state_step(f, &observables, None)?,
    };
    let mut value = value_of(f, &state, &observables);
    trace.push(value);
    let mut degenerate = false;
    for _ in 0..opts.max_sweeps {
        let start = value;
        degenerate = observable_sweep(f, &state, &mut observables, opts.trivial_observables);
        value = value_of(f, &state, &observables);
        trace.push(value);
        if fixed.is_none() {
            state = state_step(f, &observables, Some(&state))?;
            value = value_of(f, &state, &observables);
            trace.push(value);
        }
        if (value - start).abs() < opts.tolerance {
            break;
        }
    }
    let strategy = QuantumStrategy::new(state, observables)?;
    Ok(Restart { strategy, value, trace, degenerate })
}

fn value_of(f: &BellFunctional, state: &StateVector, observables: &[[QubitObservable; 2]]) -> f64 {
    let s = QuantumStrategy { state: state.clone(), observables: observables.to_vec() };
    evaluate(f, &expectation(&s)).expect("party counts agree")
}

/// Replaces every observable in turn by the best response to the others.
/// Returns true when no observable could be updated.
fn observable_sweep(
    f: &BellFunctional,
    state: &StateVector,
    observables: &mut [[QubitObservable; 2]],
    trivial: bool,
) -> bool {
    let n = f.parties();
    let psi = state.amplitudes();
    let mut all_degenerate = true;
    for party in 0..n {
        for setting in 0..2 {
            let (m, m0) = effective_bloch(f, psi, observables, party, setting);
            let len = m.iter().map(|v| v * v).sum::<f64>().sqrt();
            if trivial && m0.abs() > len && m0.abs() >= DEGENERATE_NORM {
                observables[party][setting] = QubitObservable::trivial(m0 > 0.0);
                all_degenerate = false;
            } else if len >= DEGENERATE_NORM {
                observables[party][setting] = QubitObservable::new(m.map(|v| v / len)).expect("normalized");
                all_degenerate = false;
            }
        }
    }
    all_degenerate
}

/// `mₖ = Re⟨ψ|σₖ⁽ⁱ⁾|φ⟩` with `|φ⟩ = Σ_{x⃗: xᵢ = s} β(x⃗) ⊗_{j≠i} A_{xⱼ}|ψ⟩`,
/// so the value is affine in `A_s⁽ⁱ⁾ = c·I + b⃗·σ⃗` with slope `m` in `b⃗`
/// and `m₀ = Re⟨ψ|φ⟩` in `c`.
fn effective_bloch(
    f: &BellFunctional,
    psi: &[C64],
    observables: &[[QubitObservable; 2]],
    party: usize,
    setting: usize,
) -> ([f64; 3], f64) {
    let n = observables.len();
    let branches: Vec<Vec<Mat2>> = observables
        .iter()
        .enumerate()
        .map(|(j, pair)| if j == party { Vec::new() } else { vec![pair[0].matrix(), pair[1].matrix()] })
        .collect();
    let low_bits = n - 1 - party;
    let mut phi = vec![C64::new(0.0, 0.0); psi.len()];
    for_each_branch(psi, &branches, &mut |rest, v| {
        let x = ((rest >> low_bits) << (low_bits + 1)) | (setting << low_bits) | (rest & ((1 << low_bits) - 1));
        let beta = f.coeffs()[x];
        if beta != 0.0 {
            phi.iter_mut().zip(v).for_each(|(p, a)| *p += a * beta);
        }
    });

    let stride = 1usize << low_bits;
    let i = C64::new(0.0, 1.0);
    let mut m = [0.0; 3];
    for block in (0..psi.len()).step_by(2 * stride) {
        for i0 in block..block + stride {
            let i1 = i0 + stride;
            let (p0, p1) = (psi[i0].conj(), psi[i1].conj());
            m[0] += (p0 * phi[i1] + p1 * phi[i0]).re;
            m[1] += (p0 * (-i) * phi[i1] + p1 * i * phi[i0]).re;
            m[2] += (p0 * phi[i0] - p1 * phi[i1]).re;
        }
    }
    (m, super::inner(psi, &phi).re)
}

/// Principal eigenvector of the Bell operator for the current observables.
fn state_step(f: &BellFunctional, observables: &[[QubitObservable; 2]], warm: Option<&StateVector>) -> Result<StateVector> {
    let n = f.parties();
    let op = bell_operator(f.coeffs(), observables);
    let vector = if n <= DENSE_EIGEN_PARTIES {
        let eig = SymmetricEigen::new(op);
        let top = eig.eigenvalues.imax();
        eig.eigenvectors.column(top).iter().copied().collect()
    } else {
        power_iteration(&op, f.l1_norm(), warm)
    };
    StateVector::from_unnormalized(n, vector)
}

/// Power iteration on `B + c·I`, with `c` bounding the operator norm so the
/// shifted operator is positive semidefinite and the Rayleigh quotient rises
/// monotonically.
fn power_iteration(op: &DMatrix<C64>, shift: f64, warm: Option<&StateVector>) -> Vec<C64> {
    const MAX_ITERATIONS: usize = 20_000;
    let dim = op.nrows();
    let shifted = op + DMatrix::<C64>::identity(dim, dim) * C64::new(shift, 0.0);
    let mut v = match warm {
        Some(s) => DVector::from_column_slice(s.amplitudes()),
        None => DVector::from_element(dim, C64::new(1.0 / (dim as f64).sqrt(), 0.0)),
    };
    for _ in 0..MAX_ITERATIONS {
        let mut next = &shifted * &v;
        let norm = next.norm();
        if norm == 0.0 {
            break;
        }
        next /= C64::new(norm, 0.0);
        let change = (&next - &v).norm();
        v = next;
        if change < 1e-12 {
            break;
        }
    }
    v.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correl::{mabk_functional, sliwa_functional};
    use crate::quantum::{ghz, quantum_max};

    fn rayleigh(op: &DMatrix<C64>, v: &[C64]) -> f64 {
        let y = op * DVector::from_column_slice(v);
        crate::quantum::inner(v, y.as_slice()).re
    }

    fn quick(restarts: usize) -> SeesawOptions {
        SeesawOptions { restarts, ..SeesawOptions::default() }
    }

    #[test]
    fn chsh_reaches_tsirelson() {
        let r = seesaw(&sliwa_functional(2).unwrap(), &quick(20)).unwrap();
        assert!(r.value >= std::f64::consts::SQRT_2 - 1e-6, "{}", r.value);
        assert!(r.value <= std::f64::consts::SQRT_2 + 1e-9);
        assert!(r.is_monotone(1e-10));
    }

    #[test]
    fn effective_bloch_is_the_gradient() {
        let f = sliwa_functional(3).unwrap();
        let s = crate::quantum::ansatz_strategy(3, 0.8).unwrap();
        let psi = s.state.amplitudes();
        let base = value_of(&f, &s.state, &s.observables);
        for party in 0..3 {
            for setting in 0..2 {
                let (m, _) = effective_bloch(&f, psi, &s.observables, party, setting);
                let b = s.observables[party][setting].bloch();
                let mut obs = s.observables.clone();
                obs[party][setting] = QubitObservable::sigma_z();
                let with_z = value_of(&f, &s.state, &obs);
                // Value is affine in the Bloch vector: base − m·b + m·ẑ.
                let dot: f64 = m.iter().zip(b).map(|(a, c)| a * c).sum();
                assert!((with_z - (base - dot + m[2])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fixed_ghz_mabk() {
        let f = mabk_functional(3).unwrap();
        let r = seesaw_fixed_state(&f, &ghz(3).unwrap(), &quick(10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-6, "{}", r.value);
        assert!(r.is_monotone(1e-10));
    }

    #[test]
    fn power_iteration_agrees_with_eigensolver() {
        let f = sliwa_functional(4).unwrap();
        let s = crate::quantum::ansatz_strategy(4, 0.9).unwrap();
        let op = bell_operator(f.coeffs(), &s.observables);
        let top = SymmetricEigen::new(op.clone()).eigenvalues.max();
        let v = power_iteration(&op, f.l1_norm(), None);
        assert!((rayleigh(&op, &v) - top).abs() < 1e-8);
    }

    #[test]
    fn zero_functional_is_degenerate() {
        let f = BellFunctional::new(2, vec![0.0; 4], "zero").unwrap();
        assert!(matches!(seesaw(&f, &quick(3)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn never_exceeds_conjectured_maximum() {
        for n in 3..=5 {
            let r = seesaw(&sliwa_functional(n).unwrap(), &quick(5)).unwrap();
            assert!(r.value <= quantum_max(n).value + 1e-6, "n = {n}: {}", r.value);
        }
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let f = sliwa_functional(3).unwrap();
        let a = seesaw(&f, &quick(4)).unwrap();
        let b = seesaw(&f, &quick(4)).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.best_restart, b.best_restart);
    }
}
