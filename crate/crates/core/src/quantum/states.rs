use super::{check_qubits, StateVector, C64};
use crate::error::Result;

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz(n: usize) -> Result<StateVector> {
    check_qubits(n)?;
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    amps[0] = C64::new(1.0, 0.0);
    amps[(1 << n) - 1] += C64::new(1.0, 0.0);
    StateVector::from_unnormalized(n, amps)
}

/// Equal superposition of the `n` basis states with a single excitation.
pub fn w_state(n: usize) -> Result<StateVector> {
    check_qubits(n)?;
    let amps = (0..1usize << n)
        .map(|i| if i.count_ones() == 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
        .collect();
    StateVector::from_unnormalized(n, amps)
}

pub fn product_zero(n: usize) -> Result<StateVector> {
    check_qubits(n)?;
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    amps[0] = C64::new(1.0, 0.0);
    StateVector::new(n, amps)
}

/// Controlled-Z between neighbours `(i, i+1)` applied to `|+⟩⊗ⁿ`.
pub fn cluster_linear(n: usize) -> Result<StateVector> {
    cluster(n, false)
}

/// Like [`cluster_linear`] with the extra gate `CZ_{n,1}`, which is omitted
/// for `n ≤ 2` where it would duplicate or act on a single qubit.
pub fn cluster_ring(n: usize) -> Result<StateVector> {
    cluster(n, n > 2)
}

fn cluster(n: usize, closed: bool) -> Result<StateVector> {
    check_qubits(n)?;
    let bit = |z: usize, i: usize| (z >> (n - 1 - i)) & 1;
    let amps = (0..1usize << n)
        .map(|z| {
            let mut edges: usize = (0..n - 1).map(|i| bit(z, i) & bit(z, i + 1)).sum();
            if closed {
                edges += bit(z, n - 1) & bit(z, 0);
            }
            C64::new(if edges % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        })
        .collect();
    StateVector::from_unnormalized(n, amps)
}
