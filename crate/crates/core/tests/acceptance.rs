//! Acceptance suite: one line per criterion, non-zero exit on any failure.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use bellwit::bounds::{
    algebraic_max_witness, mabk_partition_bound, mabk_partition_exponent, mabk_producible_bound, visibility_threshold,
    Partition,
};
use bellwit::certify::{certify_depth, exact_estimate};
use bellwit::correl::{
    check_no_signaling, correlators_from_behavior, evaluate, mabk_functional, sliwa_functional, zeta_mu,
};
use bellwit::localset::{facet_check_full_correlation, facet_check_local_polytope, local_bound, werner_wolf_check};
use bellwit::quantum::{
    boundary_strategy, cluster_linear, cluster_ring, expectation, ghz, quantum_max, seesaw, seesaw_fixed_state,
    sos_identity_check, u2_boundary, w_state, BoundaryTarget, SeesawOptions, StateVector,
};
use bellwit::sdpexport::{build_moment_structure, membership_sdp, producible_sdp, EntryKind, SdpProblem};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

const QUANTUM_MAXIMA: [f64; 7] = [SQRT_2, 5.0 / 3.0, 1.8428, 1.9746, 2.0777, 2.1610, 2.2299];
const CRITICAL_VISIBILITY: [f64; 7] = [FRAC_1_SQRT_2, 3.0 / 5.0, 0.5427, 0.5064, 0.4813, 0.4627, 0.4485];

fn quantum_maxima() -> Outcome {
    let start = Instant::now();
    let values: Vec<f64> = (2..=8).map(|n| quantum_max(n).value).collect();
    let elapsed = start.elapsed();
    for (n, (got, want)) in (2..).zip(values.iter().zip(QUANTUM_MAXIMA)) {
        ensure((got - want).abs() < 5e-4, || format!("n={n}: {got} vs {want}"))?;
    }
    ensure(elapsed.as_secs_f64() < 1.0, || format!("took {elapsed:?}"))?;
    Ok(format!("n=2..8 within 5e-4 in {:.1} ms", elapsed.as_secs_f64() * 1e3))
}

fn optimal_angles() -> Outcome {
    let closed = [
        PI / 2.0,
        2.0 * (2.0f64 / 3.0).sqrt().acos(),
        2.0 * ((6.0 + 22f64.sqrt()) / 14.0).sqrt().acos(),
        2.0 * ((8.0 + 19f64.sqrt()) / 15.0).sqrt().acos(),
    ];
    let mut worst = 0.0f64;
    for (n, want) in (2..).zip(closed) {
        let got = quantum_max(n).phi;
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() < 1e-6, || format!("n={n}: phi {got} vs {want}"))?;
    }
    let alt = (2.0 / 7.0) * ((2.0 / 7.0) * (94.0 + 11.0 * 22f64.sqrt())).sqrt();
    let v4 = quantum_max(4).value;
    ensure((v4 - alt).abs() < 1e-9, || format!("n=4 value {v4} vs {alt}"))?;
    Ok(format!("max angle error {worst:.1e}; n=4 closed-form value within 1e-9"))
}

fn local_bounds() -> Outcome {
    for n in 2..=7 {
        let b = local_bound(&sliwa_functional(n).unwrap()).unwrap();
        ensure(b.value == 1.0, || format!("n={n}: {}", b.value))?;
    }
    let f8 = sliwa_functional(8).unwrap();
    let start = Instant::now();
    let b = local_bound(&f8).unwrap();
    let elapsed = start.elapsed();
    ensure(b.value == 1.0, || format!("n=8: {}", b.value))?;
    let achieved = evaluate(&f8, &b.strategy.correlators()).unwrap();
    ensure(achieved == 1.0, || format!("n=8 maximizer gives {achieved}"))?;
    ensure(elapsed.as_secs_f64() < 1.0, || format!("n=8 took {elapsed:?}"))?;
    Ok(format!("exactly 1 for n=2..8; n=8 in {:.1} ms", elapsed.as_secs_f64() * 1e3))
}

fn werner_wolf() -> Outcome {
    for n in 2..=16 {
        let r = werner_wolf_check(&sliwa_functional(n).unwrap()).unwrap();
        ensure(r.is_member, || format!("n={n} not a member"))?;
        for (idx, &v) in r.sign_function.iter().enumerate() {
            let parity = if idx.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let want = -parity + if idx == 0 { 2.0 } else { 0.0 };
            ensure(v == want, || format!("n={n}, r={idx}: {v} vs {want}"))?;
        }
    }
    for n in 2..=8 {
        let f = sliwa_functional(n).unwrap();
        let fast = werner_wolf_check(&f).unwrap().sign_function;
        ensure(fast == sign_function_direct(&f), || format!("n={n}: transform differs from direct sum"))?;
    }
    Ok("n=2..16 members, closed form matches; direct sum agrees for n<=8".into())
}

fn facet_ranks() -> Outcome {
    for n in 2..=8 {
        let r = facet_check_full_correlation(&sliwa_functional(n).unwrap(), 1.0).unwrap();
        ensure(r.is_facet && r.affine_rank == (1 << n) - 1, || format!("full correlation n={n}: {r:?}"))?;
    }
    for n in 2..=5 {
        let r = facet_check_local_polytope(&sliwa_functional(n).unwrap(), 1.0).unwrap();
        let want = 3usize.pow(n as u32) - 2;
        ensure(r.is_facet && r.affine_rank == want, || format!("behavior space n={n}: {r:?}"))?;
    }
    Ok("rank 2^n-1 for n=2..8; rank 3^n-2 for n=2..5 (n=6 is an ignored test)".into())
}

fn seesaw_convergence() -> Outcome {
    let opts = SeesawOptions::default();
    let mut found = Vec::new();
    for n in 2..=6 {
        let r = seesaw(&sliwa_functional(n).unwrap(), &opts).unwrap();
        let want = QUANTUM_MAXIMA[n - 2];
        ensure(r.is_monotone(1e-10), || format!("n={n}: non-monotone trace"))?;
        ensure((r.value - want).abs() < 1e-4, || format!("n={n}: {} vs {want}", r.value))?;
        found.push(format!("{:.5}", r.value));
    }
    Ok(format!("{} restarts: {}; all traces monotone", opts.restarts, found.join(", ")))
}

fn fixed_state_values() -> Outcome {
    let opts = SeesawOptions::default();
    let iota = |n| sliwa_functional(n).unwrap();
    let mabk = |n| mabk_functional(n).unwrap();
    let cases: Vec<(&str, bellwit::correl::BellFunctional, StateVector, f64)> = vec![
        ("W3/I", iota(3), w_state(3).unwrap(), 1.3631),
        ("W4/I", iota(4), w_state(4).unwrap(), 1.3633),
        ("C-4/I", iota(4), cluster_linear(4).unwrap(), SQRT_2),
        ("Co5/I", iota(5), cluster_ring(5).unwrap(), 1.1535),
        ("GHZ2/M", mabk(2), ghz(2).unwrap(), SQRT_2),
        ("GHZ3/M", mabk(3), ghz(3).unwrap(), 2.0),
        ("GHZ4/M", mabk(4), ghz(4).unwrap(), 2.0 * SQRT_2),
        ("GHZ5/M", mabk(5), ghz(5).unwrap(), 4.0),
        ("W3/M", mabk(3), w_state(3).unwrap(), 1.5230),
    ];
    let mut report = Vec::new();
    for (label, f, state, want) in cases {
        let r = seesaw_fixed_state(&f, &state, &opts).unwrap();
        ensure(r.is_monotone(1e-10), || format!("{label}: non-monotone trace"))?;
        // The listed values are the best found, so reaching them is the
        // requirement; exceeding them is allowed.
        ensure(r.value >= want - 1e-3, || format!("{label}: {} below {want}", r.value))?;
        let local_hit = r.traces.iter().any(|t| (t.last().unwrap() - want).abs() < 1e-3);
        report.push(if (r.value - want).abs() < 1e-3 {
            format!("{label} {:.4}", r.value)
        } else {
            format!("{label} {:.4} (exceeds {want:.4}; a restart {} it)", r.value, if local_hit { "stops at" } else { "never stops at" })
        });
    }
    Ok(report.join(", "))
}

fn visibility_row() -> Outcome {
    for (n, want) in (2..=8).zip(CRITICAL_VISIBILITY) {
        let got = visibility_threshold(n, 1).unwrap();
        ensure((got - want).abs() < 5e-4, || format!("n={n}: {got} vs {want}"))?;
    }
    Ok("n=2..8 within 5e-4".into())
}

fn boundary_points() -> Outcome {
    let table = [
        (3, BoundaryTarget::MinusOne, -1.0, 0.2500),
        (4, BoundaryTarget::MinusOne, -1.0, 0.3466),
        (5, BoundaryTarget::MinusOne, -1.0, 0.4219),
        (3, BoundaryTarget::Zero, 0.0, 0.7286),
        (4, BoundaryTarget::Zero, 0.0, 0.7781),
        (5, BoundaryTarget::Zero, 0.0, 0.8122),
    ];
    for (n, target, zeta, mu) in table {
        let p = zeta_mu(&expectation(&boundary_strategy(n, target).unwrap()));
        ensure((p.zeta - zeta).abs() < 1e-9, || format!("n={n}: zeta {} vs {zeta}", p.zeta))?;
        ensure((p.mu - mu).abs() < 1e-3, || format!("n={n}, zeta={zeta}: mu {} vs {mu}", p.mu))?;
    }
    let pts = 10_000;
    let z: Vec<f64> = (0..pts).map(|i| -1.0 + 2.0 * i as f64 / (pts - 1) as f64).collect();
    let u: Vec<f64> = z.iter().map(|&v| u2_boundary(v).unwrap()).collect();
    for i in 1..pts {
        ensure(u[i] >= u[i - 1] - 1e-15, || format!("u2 decreases at {}", z[i]))?;
    }
    for i in 1..pts - 1 {
        ensure(u[i - 1] + u[i + 1] - 2.0 * u[i] <= 1e-12, || format!("u2 not concave at {}", z[i]))?;
    }
    Ok("six boundary values within 1e-3; u2 monotone and concave on 10^4 points".into())
}

fn sos_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut checked, mut degenerate, mut worst) = (0, 0, 0.0f64);
    while checked < 1000 {
        let rho = random_density(&mut rng);
        let obs: Vec<_> = (0..4).map(|_| random_observable(&mut rng)).collect();
        match sos_identity_check(&rho, obs[0], obs[1], obs[2], obs[3]) {
            Ok((lhs, rhs)) => {
                worst = worst.max((lhs - rhs).abs());
                ensure((lhs - rhs).abs() < 1e-9, || format!("instance {checked}: lhs {lhs} rhs {rhs}"))?;
                ensure(rhs >= -1e-12, || format!("instance {checked}: rhs {rhs}"))?;
                checked += 1;
            }
            Err(_) => degenerate += 1,
        }
    }
    Ok(format!("1000 instances, max |lhs-rhs| {worst:.1e}, {degenerate} degenerate draws skipped"))
}

fn mabk_partitions() -> Outcome {
    let rows: [(&[usize], f64); 16] = [
        (&[3], 2.0),
        (&[4], 2.0 * SQRT_2),
        (&[3, 1], 2.0),
        (&[5], 4.0),
        (&[4, 1], 2.0 * SQRT_2),
        (&[3, 2], 2.0),
        (&[6], 4.0 * SQRT_2),
        (&[5, 1], 4.0),
        (&[4, 2], 2.0 * SQRT_2),
        (&[3, 3], 2.0 * SQRT_2),
        (&[7], 8.0),
        (&[6, 1], 4.0 * SQRT_2),
        (&[5, 2], 4.0),
        (&[4, 3], 4.0),
        (&[3, 3, 1], 2.0 * SQRT_2),
        (&[2, 2, 2], SQRT_2),
    ];
    for (parts, want) in rows {
        let p = Partition::new(parts.to_vec()).unwrap();
        let e = mabk_partition_exponent(&p);
        let from_exponent = 2f64.powf(e as f64 / 2.0);
        ensure((from_exponent - want).abs() < 1e-12, || format!("{p}: exponent {e}"))?;
        ensure((mabk_partition_bound(&p) - want).abs() < 1e-12, || format!("{p}: {}", mabk_partition_bound(&p)))?;
    }
    for (n, k) in [(6, 3), (7, 4)] {
        let (b, _) = mabk_producible_bound(n, k).unwrap();
        let single = 2f64.powf((k as f64 - 1.0) / 2.0);
        ensure(!b.valid && b.bound > single, || format!("({n},{k}) should be flagged: {b:?}"))?;
    }
    for n in 3..=8 {
        let (b, _) = mabk_producible_bound(n, n - 1).unwrap();
        ensure((b.bound - 2f64.powf((n as f64 - 2.0) / 2.0)).abs() < 1e-12, || format!("({n},{}): {}", n - 1, b.bound))?;
    }
    Ok("all partition rows exact powers of sqrt 2; (6,3) and (7,4) flagged invalid".into())
}

fn no_signaling() -> Outcome {
    for n in 2..=4 {
        let b = algebraic_max_witness(n).unwrap();
        ensure(check_no_signaling(&b).no_signaling, || format!("n={n} signals"))?;
        let v = evaluate(&sliwa_functional(n).unwrap(), &correlators_from_behavior(&b).unwrap()).unwrap();
        let want = 3.0 - 2f64.powi(2 - n as i32);
        ensure(v == want, || format!("n={n}: {v} vs {want}"))?;
    }
    Ok("3-2^(2-n) reached exactly for n=2..4 by no-signaling behaviors".into())
}

fn concavity_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let grid201 = grid(201);
    let zetas: Vec<f64> = grid201.iter().copied().filter(|z| *z <= 0.0).step_by(20).collect();
    let coarse = grid(41);
    let mut bad_split = 0;
    for _ in 0..100 {
        let m = rng.random_range(2..=4);
        let us: Vec<_> = (0..m).map(|_| random_u(201, &mut rng)).collect();
        let search = if m == 4 { &coarse } else { &grid201 };
        bad_split += product_split_counterexamples(&us, &zetas, search);
    }
    let mut bad_left = 0;
    for _ in 0..100 {
        bad_left += left_maximum_counterexamples(&random_g_small_left_rise(201, &mut rng));
    }
    let mut bad_shift = 0;
    for _ in 0..100 {
        let g: Vec<f64> = (0..201).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let s = rng.random::<f64>() * 3.0 + 1e-3;
        let s_prime = s + rng.random::<f64>() * 3.0 + 1e-3;
        bad_shift += maximizer_shift_counterexamples(&grid201, &g, s, s_prime);
    }
    ensure(bad_split + bad_left + bad_shift == 0, || format!("counterexamples: {bad_split}, {bad_left}, {bad_shift}"))?;
    Ok("100 instances each, no counterexamples".into())
}

fn certification() -> Outcome {
    let depth = |n, v| certify_depth(&exact_estimate(tensor_with_value(n, v)), 0.0).unwrap().certified_depth;
    ensure(depth(5, 1.7) >= 4, || format!("1.7 at n=5 gives depth {}", depth(5, 1.7)))?;
    ensure(depth(5, 1.2) >= 2, || format!("1.2 at n=5 gives depth {}", depth(5, 1.2)))?;
    for v in [1.0, 0.8, 0.0, -1.0] {
        ensure(depth(5, v) == 1, || format!("{v} at n=5 gives depth {}", depth(5, v)))?;
    }
    Ok(format!("1.7 -> depth {}, 1.2 -> depth {}, <=1 -> nothing", depth(5, 1.7), depth(5, 1.2)))
}

fn sdp_structure() -> Outcome {
    let f = sliwa_functional(3).unwrap();
    let mut problems = vec![
        producible_sdp(&f, &[vec![0, 1], vec![2]]).unwrap(),
        producible_sdp(&sliwa_functional(2).unwrap(), &[vec![0], vec![1]]).unwrap(),
        membership_sdp(&algebraic_max_witness(3).unwrap(), 2).unwrap(),
    ];
    problems.push(producible_sdp(&f, &[vec![0], vec![1], vec![2]]).unwrap());
    for p in &problems {
        let back = SdpProblem::parse(&p.to_sdpa(), Some(&p.sidecar_json())).unwrap();
        ensure(&back == p, || "round trip changed the problem".into())?;
    }

    for n in 1..=4 {
        let s = build_moment_structure(n, 1).unwrap();
        for mask in 1..1usize << n {
            let g: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
            let p = s.partial_transpose_indexing(&g).unwrap();
            ensure(p.iter().enumerate().all(|(i, &j)| p[j] == i), || format!("n={n}, group {g:?}"))?;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for n in 1..=3 {
        let s = build_moment_structure(n, 1).unwrap();
        for _ in 0..5 {
            let strat = random_strategy(n, &mut rng);
            let oracle = dense_moment_matrix(&strat);
            let probs = bellwit::quantum::behavior(&strat).unwrap().probabilities().to_vec();
            let mut free = vec![f64::NAN; s.free_names.len()];
            for i in 0..s.dim {
                for j in 0..s.dim {
                    if let EntryKind::Free(u) = s.entry(i, j) {
                        if free[*u].is_nan() {
                            free[*u] = oracle[(i, j)];
                        }
                    }
                }
            }
            let rebuilt = s.assemble(&probs, &free);
            let err = (&rebuilt - &oracle).abs().max();
            ensure(err < 1e-10, || format!("n={n}: reconstruction error {err}"))?;
        }
        // Every entry of the first block is carried by probabilities or by
        // one free variable, never both.
        let p = producible_sdp(&sliwa_functional(n).unwrap(), &[(0..n).collect()]).unwrap();
        let nprob = 1usize << (2 * n);
        let mut kind = vec![[false; 2]; s.dim * s.dim];
        for &(var, block, i, j) in p.entries.keys() {
            if block == 1 && var > 0 {
                kind[(i - 1) * s.dim + j - 1][usize::from(var > nprob)] = true;
            }
        }
        let ok = (0..s.dim).all(|i| (i..s.dim).all(|j| kind[i * s.dim + j][0] != kind[i * s.dim + j][1]));
        ensure(ok, || format!("n={n}: entry covered twice or not at all"))?;
    }
    Ok("round trip exact; partial transposes are involutions; moment matrices rebuilt from (P, u) for n<=3".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 15] = [
        ("quantum maxima", quantum_maxima),
        ("optimal angles", optimal_angles),
        ("local bounds", local_bounds),
        ("sign-function membership", werner_wolf),
        ("facet ranks", facet_ranks),
        ("see-saw convergence", seesaw_convergence),
        ("fixed-state see-saw values", fixed_state_values),
        ("visibility thresholds", visibility_row),
        ("two-party boundary", boundary_points),
        ("sum-of-squares identity", sos_identity),
        ("MABK partition bounds", mabk_partitions),
        ("no-signaling maximum", no_signaling),
        ("concavity oracles", concavity_oracles),
        ("certification logic", certification),
        ("SDP export structure", sdp_structure),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
