//! The one-parameter GHZ measurement family, its optimum, and the
//! two-qubit boundary of the `(ζ, μ)` projection.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{ghz, QuantumStrategy, QubitObservable, C64};
use crate::error::{Error, Result};

/// Measurement angles in the XY plane: `A₀` at `alpha`, `A₁` at `phi + alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParameters {
    pub n: usize,
    pub phi: f64,
    pub alpha: f64,
}

impl AnsatzParameters {
    /// Uses `α = −(n−1)φ/(2n)`, which makes the GHZ correlators symmetric
    /// about the all-zero and all-one settings.
    pub fn new(n: usize, phi: f64) -> Self {
        let alpha = -((n as f64) - 1.0) * phi / (2.0 * n as f64);
        Self { n, phi, alpha }
    }

    pub fn strategy(&self) -> Result<QuantumStrategy> {
        let pair = [QubitObservable::from_angle(self.alpha), QubitObservable::from_angle(self.phi + self.alpha)];
        QuantumStrategy::new(ghz(self.n)?, vec![pair; self.n])
    }
}

/// GHZ state with every party measuring the ansatz pair for angle `phi`.
/// On this strategy `ζ = cos((n+1)φ/2)` and `μ = cosⁿ⁺¹(φ/2)`.
pub fn ansatz_strategy(n: usize, phi: f64) -> Result<QuantumStrategy> {
    AnsatzParameters::new(n, phi).strategy()
}

/// `2cosⁿ⁺¹(φ/2) − cos((n+1)φ/2)`.
pub fn ansatz_value(n: usize, phi: f64) -> f64 {
    gamma_ansatz_value(n, 2.0, phi)
}

/// `γcosⁿ⁺¹(φ/2) − cos((n+1)φ/2)`.
pub fn gamma_ansatz_value(n: usize, gamma: f64, phi: f64) -> f64 {
    let m = n as f64 + 1.0;
    gamma * (phi / 2.0).cos().powi(n as i32 + 1) - (m * phi / 2.0).cos()
}

fn gamma_ansatz_slope(n: usize, gamma: f64, phi: f64) -> f64 {
    let m = n as f64 + 1.0;
    let half = phi / 2.0;
    -gamma * m / 2.0 * half.cos().powi(n as i32) * half.sin() + m / 2.0 * (m * half).sin()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumMax {
    pub phi: f64,
    pub value: f64,
}

/// Maximum of [`ansatz_value`] over `φ ∈ [0, π/2]`.
pub fn quantum_max(n: usize) -> QuantumMax {
    maximize(|p| ansatz_value(n, p), |p| gamma_ansatz_slope(n, 2.0, p), 0.0, PI / 2.0)
}

/// Maximum of [`gamma_ansatz_value`] over `φ ∈ [0, π]`. The wider range is
/// needed because the optimum moves past `π/2` as `γ` decreases.
pub fn gamma_ansatz_max(n: usize, gamma: f64) -> Result<QuantumMax> {
    if !(gamma > 0.0 && gamma <= 2.0) {
        return Err(Error::OutOfRange(format!("gamma = {gamma} must lie in (0, 2]")));
    }
    Ok(maximize(|p| gamma_ansatz_value(n, gamma, p), |p| gamma_ansatz_slope(n, gamma, p), 0.0, PI))
}

/// Grid search for the best cell, then bisection on the derivative.
fn maximize(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, lo: f64, hi: f64) -> QuantumMax {
    const GRID: usize = 4096;
    let step = (hi - lo) / GRID as f64;
    let at = |i: usize| if i == GRID { hi } else { lo + step * i as f64 };
    let best = (0..=GRID).max_by(|&a, &b| f(at(a)).total_cmp(&f(at(b))).then(b.cmp(&a))).unwrap();
    let (mut a, mut b) = (at(best.saturating_sub(1)), at((best + 1).min(GRID)));
    let phi = if df(a) > 0.0 && df(b) < 0.0 {
        while b - a > 1e-13 {
            let mid = 0.5 * (a + b);
            if df(mid) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    } else {
        // Maximum sits at an end of the range, or the function is flat.
        at(best)
    };
    QuantumMax { phi, value: f(phi) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTarget {
    MinusOne,
    Zero,
}

/// GHZ strategies reaching the extreme points of the `(ζ, μ)` projection at
/// `ζ = −1` and `ζ = 0`, for `n ∈ {3, 4, 5}`.
pub fn boundary_strategy(n: usize, target: BoundaryTarget) -> Result<QuantumStrategy> {
    if !(3..=5).contains(&n) {
        return Err(Error::Unsupported(format!("boundary strategies are tabulated for n = 3, 4, 5, not {n}")));
    }
    let nf = n as f64;
    let (a0, a1) = match target {
        BoundaryTarget::MinusOne => ((3.0 * nf + 1.0) * PI / (nf * (nf + 1.0)), PI / nf),
        BoundaryTarget::Zero => ((1.0 - nf) * PI / (2.0 * nf * (nf + 1.0)), PI / (2.0 * nf)),
    };
    let pair = [QubitObservable::from_angle(a0), QubitObservable::from_angle(a1)];
    QuantumStrategy::new(ghz(n)?, vec![pair; n])
}

/// Largest two-party `μ` compatible with `E(1,1) = ζ`: `cos³(arccos(ζ)/3)`.
pub fn u2_boundary(zeta: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&zeta) {
        return Err(Error::OutOfRange(format!("zeta = {zeta} outside [-1, 1]")));
    }
    Ok((zeta.acos() / 3.0).cos().powi(3))
}

/// Both sides of the sum-of-squares identity certifying [`u2_boundary`]:
/// `lhs = u₂(ζ₂) − μ₂` and `rhs` the weighted sum of two squared-operator
/// expectations, which is manifestly non-negative.
///
/// The weights degenerate at `ζ₂ = −1`, where the identity is undefined.
pub fn sos_identity_check(
    rho: &DMatrix<C64>,
    a0: QubitObservable,
    a1: QubitObservable,
    b0: QubitObservable,
    b1: QubitObservable,
) -> Result<(f64, f64)> {
    check_density(rho)?;
    let id = DMatrix::<C64>::identity(2, 2);
    let a = [a0.dense().kronecker(&id), a1.dense().kronecker(&id)];
    let b = [id.kronecker(&b0.dense()), id.kronecker(&b1.dense())];
    let ev = |op: &DMatrix<C64>| (rho * op).trace().re;

    let zeta = ev(&(&a[1] * &b[1])).clamp(-1.0, 1.0);
    let mu = (0..4).map(|k| ev(&(&a[k >> 1] * &b[k & 1]))).sum::<f64>() / 4.0;
    let c = (zeta.acos() / 3.0).cos();
    let (lp, lm) = (2.0 * c + 1.0, 2.0 * c - 1.0);
    if lm < 1e-12 {
        return Err(Error::Degenerate(format!("zeta = {zeta} leaves the identity undefined")));
    }
    let r = |x: f64| C64::new(x, 0.0);
    let p = &a[0] * r(lm) - &a[1] + &b[0] * r(lm) - &b[1];
    let q = &a[0] * r(lp) + &a[1] - &b[0] * r(lp) - &b[1];
    let lhs = c.powi(3) - mu;
    let rhs = (lp * ev(&(&p * &p)) + lm * ev(&(&q * &q))) / (16.0 * lp * lm);
    Ok((lhs, rhs))
}

fn check_density(rho: &DMatrix<C64>) -> Result<()> {
    if rho.shape() != (4, 4) {
        return Err(Error::InvalidState(format!("expected a 4x4 density matrix, got {:?}", rho.shape())));
    }
    if (rho - rho.adjoint()).norm() > 1e-9 {
        return Err(Error::InvalidState("density matrix is not Hermitian".into()));
    }
    if (rho.trace().re - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState("density matrix does not have unit trace".into()));
    }
    let min = SymmetricEigen::new(rho.clone()).eigenvalues.min();
    if min < -1e-9 {
        return Err(Error::InvalidState(format!("density matrix has eigenvalue {min}")));
    }
    Ok(())
}
