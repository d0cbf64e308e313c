//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use bellwit::bounds::algebraic_max;
use bellwit::correl::{BellFunctional, CorrelationTensor};
use bellwit::quantum::{QuantumStrategy, QubitObservable, StateVector};
use bellwit::sdpexport::SdpProblem;
use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};

pub type C64 = Complex<f64>;

/// Correlators of the algebraic-maximum witness scaled so that `Iₙ`
/// evaluates to `value`.
pub fn tensor_with_value(n: usize, value: f64) -> CorrelationTensor {
    let scale = value / algebraic_max(n);
    let mut v = vec![scale; 1 << n];
    *v.last_mut().unwrap() = -scale;
    CorrelationTensor::new(n, v).unwrap()
}

/// `f(r⃗) = Σ_x⃗ β(x⃗)(−1)^{r⃗·x⃗}` by direct summation.
pub fn sign_function_direct(f: &BellFunctional) -> Vec<f64> {
    let dim = f.coeffs().len();
    (0..dim)
        .map(|r| {
            (0..dim)
                .map(|x| if (r & x).count_ones() % 2 == 0 { f.coeffs()[x] } else { -f.coeffs()[x] })
                .sum()
        })
        .collect()
}

/// Party operators as dense `2ⁿ×2ⁿ` matrices, party 1 on the leading
/// tensor factor.
pub fn embed(n: usize, ops: &[(usize, DMatrix<C64>)]) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::identity(1, 1);
    for k in 0..n {
        let local = ops
            .iter()
            .find(|(p, _)| *p == k)
            .map(|(_, o)| o.clone())
            .unwrap_or_else(|| DMatrix::identity(2, 2));
        m = m.kronecker(&local);
    }
    m
}

pub fn state_column(s: &StateVector) -> DVector<C64> {
    DVector::from_column_slice(s.amplitudes())
}

/// Full correlators from explicit Kronecker products.
pub fn dense_correlators(s: &QuantumStrategy) -> Vec<f64> {
    let n = s.parties();
    let psi = state_column(&s.state);
    (0..1usize << n)
        .map(|x| {
            let ops: Vec<_> =
                (0..n).map(|k| (k, s.observables[k][(x >> (n - 1 - k)) & 1].dense())).collect();
            (psi.adjoint() * embed(n, &ops) * &psi)[(0, 0)].re
        })
        .collect()
}

/// Level-1 moment matrix `Re⟨ψ|OᵢOⱼ|ψ⟩` with monomials `I, A₀, A₁` per
/// party, party 1 most significant in base 3.
pub fn dense_moment_matrix(s: &QuantumStrategy) -> DMatrix<f64> {
    let n = s.parties();
    let dim = 3usize.pow(n as u32);
    let psi = state_column(&s.state);
    let monomial = |mut idx: usize| {
        let mut ops = Vec::new();
        for k in (0..n).rev() {
            let d = idx % 3;
            idx /= 3;
            if d > 0 {
                ops.push((k, s.observables[k][d - 1].dense()));
            }
        }
        embed(n, &ops)
    };
    let mons: Vec<_> = (0..dim).map(monomial).collect();
    DMatrix::from_fn(dim, dim, |i, j| (psi.adjoint() * &mons[i] * &mons[j] * &psi)[(0, 0)].re)
}

pub fn random_state(n: usize, rng: &mut impl Rng) -> StateVector {
    let amps = (0..1usize << n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    StateVector::from_unnormalized(n, amps).unwrap()
}

pub fn random_observable(rng: &mut impl Rng) -> QubitObservable {
    let v: [f64; 3] = UnitSphere.sample(rng);
    QubitObservable::new(v).unwrap()
}

pub fn random_strategy(n: usize, rng: &mut impl Rng) -> QuantumStrategy {
    let obs = (0..n).map(|_| [random_observable(rng), random_observable(rng)]).collect();
    QuantumStrategy::new(random_state(n, rng), obs).unwrap()
}

/// Random two-qubit density matrix `GG†/tr(GG†)`.
pub fn random_density(rng: &mut impl Rng) -> DMatrix<C64> {
    let g = DMatrix::<C64>::from_fn(4, 4, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

/// Block matrices `Σᵢ Fᵢxᵢ − F₀` of an SDPA problem at the point `x`
/// (`x[0]` unused, variables are 1-based). Diagonal blocks are returned as
/// diagonal matrices.
pub fn constraint_matrices(p: &SdpProblem, x: &[f64]) -> Vec<DMatrix<f64>> {
    let mut blocks: Vec<DMatrix<f64>> =
        p.block_sizes.iter().map(|&b| DMatrix::zeros(b.unsigned_abs() as usize, b.unsigned_abs() as usize)).collect();
    for (&(var, block, i, j), &v) in &p.entries {
        let w = if var == 0 { -v } else { v * x[var] };
        let m = &mut blocks[block - 1];
        m[(i - 1, j - 1)] += w;
        if i != j {
            m[(j - 1, i - 1)] += w;
        }
    }
    blocks
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// Piecewise-linear function through `(grid[i], values[i])`, evaluated by
/// interpolation.
pub struct PiecewiseLinear {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn at(&self, y: f64) -> f64 {
        let last = self.grid.len() - 1;
        let step = (self.grid[last] - self.grid[0]) / last as f64;
        let t = ((y - self.grid[0]) / step).clamp(0.0, last as f64);
        let i = (t.floor() as usize).min(last - 1);
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

pub fn grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64).collect()
}

/// Concave function on `grid` built from non-increasing random slopes,
/// returned as cumulative values starting at 0.
fn concave_profile(points: usize, nonneg_slopes: bool, rng: &mut impl Rng) -> Vec<f64> {
    let mut slopes: Vec<f64> = (0..points - 1)
        .map(|_| if nonneg_slopes { rng.random::<f64>() } else { rng.random::<f64>() * 2.0 - 1.0 })
        .collect();
    // A few random kinks: flatten stretches so the profile is not smooth.
    for _ in 0..rng.random_range(0..4) {
        let a = rng.random_range(0..slopes.len());
        let b = rng.random_range(a..slopes.len());
        let v = slopes[a];
        slopes[a..=b].iter_mut().for_each(|s| *s = v);
    }
    slopes.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut out = vec![0.0];
    for s in slopes {
        out.push(out.last().unwrap() + s);
    }
    out
}

/// Concave, non-decreasing on `[−1, 1]` with `u(1) = 1` and `u(−1) ≥ 0`.
pub fn random_u(points: usize, rng: &mut impl Rng) -> PiecewiseLinear {
    let prof = concave_profile(points, true, rng);
    let top = *prof.last().unwrap();
    let start: f64 = rng.random::<f64>() * 0.9;
    let values = prof.iter().map(|p| if top > 0.0 { start + (1.0 - start) * p / top } else { 1.0 }).collect();
    PiecewiseLinear { grid: grid(points), values }
}

/// For `ζ ≤ 0`, the largest `Πᵢ uᵢ(ζᵢ)` with `Πᵢ ζᵢ = ζ`, searching the
/// first `m − 1` factors over `search` points and solving for the last.
pub fn product_max(us: &[PiecewiseLinear], zeta: f64, search: &[f64]) -> f64 {
    fn rec(us: &[PiecewiseLinear], k: usize, target: f64, acc: f64, search: &[f64], best: &mut f64) {
        let last = us.len() - 1;
        if k == last {
            // Remaining factor must carry `target` exactly.
            if target.abs() <= 1.0 + 1e-12 {
                *best = best.max(acc * us[k].at(target.clamp(-1.0, 1.0)));
            }
            return;
        }
        for &z in search {
            if z == 0.0 {
                if target == 0.0 {
                    let rest: f64 = us[k + 1..].iter().map(|u| u.at(1.0)).product();
                    *best = best.max(acc * us[k].at(0.0) * rest);
                }
                continue;
            }
            let next = target / z;
            if next.abs() <= 1.0 + 1e-12 {
                rec(us, k + 1, next, acc * us[k].at(z), search, best);
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(us, 0, zeta, 1.0, search, &mut best);
    best
}

/// Concave `g: [−1, 1] → [0, 1]` with `g(0) − g(−1) < 1/2`.
pub fn random_g_small_left_rise(points: usize, rng: &mut impl Rng) -> PiecewiseLinear {
    let prof = concave_profile(points, false, rng);
    let (lo, hi) = prof.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mid = (points - 1) / 2;
    let rise = prof[mid] - prof[0];
    let span = (hi - lo).max(1e-12);
    // Scale to fit [0, 1] and keep the left-half rise below 1/2.
    let mut scale = rng.random::<f64>() / span;
    if rise > 0.0 {
        scale = scale.min(0.499 * rng.random::<f64>() / rise);
    }
    let values = prof.iter().map(|v| (v - lo) * scale).collect();
    PiecewiseLinear { grid: grid(points), values }
}

/// Grid points maximizing `values[i] − s·grid[i]`, within `1e−12`.
pub fn maximizers(grid: &[f64], values: &[f64], s: f64) -> Vec<usize> {
    let h: Vec<f64> = grid.iter().zip(values).map(|(y, g)| g - s * y).collect();
    let best = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..h.len()).filter(|&i| h[i] >= best - 1e-12).collect()
}

/// Counterexamples to: the maximum of `2g(y) − y` lies in `[−1, 0]`.
pub fn left_maximum_counterexamples(g: &PiecewiseLinear) -> usize {
    maximizers(&g.grid, &g.values, 0.5).iter().filter(|&&i| g.grid[i] > 1e-12).count()
}

/// Counterexamples to: for `s' > s` and every maximizer `y_s` of
/// `g(y) − s·y`, `h_{s'}(y_s) > h_{s'}(y)` for all `y > y_s`.
pub fn maximizer_shift_counterexamples(grid: &[f64], g: &[f64], s: f64, s_prime: f64) -> usize {
    let h = |i: usize, t: f64| g[i] - t * grid[i];
    let mut bad = 0;
    for ys in maximizers(grid, g, s) {
        for y in ys + 1..grid.len() {
            if h(ys, s_prime) - h(y, s_prime) <= 0.0 {
                bad += 1;
            }
        }
    }
    bad
}

/// Counterexamples to: `max Πuᵢ(ζᵢ) = maxᵢ uᵢ(ζ)` for `ζ ≤ 0`.
pub fn product_split_counterexamples(us: &[PiecewiseLinear], zetas: &[f64], search: &[f64]) -> usize {
    zetas
        .iter()
        .filter(|&&z| {
            let claimed = us.iter().map(|u| u.at(z)).fold(f64::NEG_INFINITY, f64::max);
            let brute = product_max(us, z, search);
            (brute - claimed).abs() > 1e-9
        })
        .count()
}
