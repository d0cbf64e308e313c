//! Exact rank of integer matrices.
//!
//! Rows are inserted one at a time into a fraction-free echelon basis. Each
//! candidate row is reduced against the basis with integer cross
//! multiplication and its content (gcd of entries) divided out, so entries
//! stay small for the ±1 matrices that show up in polytope computations.
//! The fast path runs on `i64` with checked arithmetic and falls back to
//! arbitrary precision on overflow.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{CheckedMul, CheckedSub, Signed};

/// Rank over the rationals of the matrix whose rows are `rows`.
///
/// Stops early once `cap` independent rows have been found.
pub fn integer_rank(rows: &[Vec<i64>], cap: Option<usize>) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let cap = cap.unwrap_or(usize::MAX).min(cols);
    match rank_generic::<i64>(rows.iter().map(|r| r.clone()), cap) {
        Some(r) => r,
        None => {
            log::debug!("i64 overflow in rank computation, retrying with big integers");
            rank_generic::<BigInt>(rows.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()), cap)
                .expect("big integer arithmetic cannot overflow")
        }
    }
}

trait Magnitude {
    fn is_large(&self) -> bool;
}

impl Magnitude for i64 {
    fn is_large(&self) -> bool {
        self.unsigned_abs() > 1 << 24
    }
}

impl Magnitude for BigInt {
    fn is_large(&self) -> bool {
        self.bits() > 64
    }
}

fn rank_generic<T>(rows: impl Iterator<Item = Vec<T>>, cap: usize) -> Option<usize>
where
    T: Integer + Signed + Clone + CheckedMul + CheckedSub + Magnitude,
{
    let mut basis: Vec<(usize, Vec<T>)> = Vec::new();
    if cap == 0 {
        return Some(0);
    }
    for mut row in rows {
        for (pivot, b) in &basis {
            if row[*pivot].is_zero() {
                continue;
            }
            let g = row[*pivot].gcd(&b[*pivot]);
            let mr = b[*pivot].div_floor(&g);
            let mb = row[*pivot].div_floor(&g);
            let mut large = false;
            for (r, bv) in row.iter_mut().zip(b) {
                if r.is_zero() && bv.is_zero() {
                    continue;
                }
                let v = r.checked_mul(&mr)?.checked_sub(&bv.checked_mul(&mb)?)?;
                large |= v.is_large();
                *r = v;
            }
            debug_assert!(row[*pivot].is_zero());
            if large {
                normalize(&mut row);
            }
        }
        if let Some(p) = row.iter().position(|v| !v.is_zero()) {
            normalize(&mut row);
            basis.push((p, row));
            if basis.len() >= cap {
                break;
            }
        }
    }
    Some(basis.len())
}

fn normalize<T: Integer + Signed + Clone>(row: &mut [T]) {
    let g = row.iter().fold(T::zero(), |g, v| g.gcd(v));
    if !g.is_zero() && !g.is_one() {
        for v in row.iter_mut() {
            *v = v.div_floor(&g);
        }
    }
}
