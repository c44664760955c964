//! Residue arithmetic for exact rank decisions on integer vectors.
//!
//! A set of integer vectors is dependent over ℚ iff every maximal minor is
//! zero. Each minor is bounded by the Hadamard product of column norms, so
//! once the product of the primes exceeds that bound, "dependent modulo every
//! prime" implies "dependent over ℚ", and independence modulo any one prime
//! implies independence over ℚ.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::scalar::Rational;

/// Montgomery arithmetic modulo an odd prime below 2^62.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Field {
    p: u64,
    /// `-p^{-1} mod 2^64`
    neg_inv: u64,
    /// `2^128 mod p`
    r2: u64,
}

impl Field {
    pub(crate) fn new(p: u64) -> Self {
        assert!(p % 2 == 1 && p < (1 << 62));
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r = ((1u128 << 64) % p as u128) as u64;
        let r2 = ((r as u128 * r as u128) % p as u128) as u64;
        Field { p, neg_inv: inv.wrapping_neg(), r2 }
    }

    #[inline]
    pub(crate) fn mul(&self, a: u64, b: u64) -> u64 {
        let t = a as u128 * b as u128;
        let m = (t as u64).wrapping_mul(self.neg_inv);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    #[inline]
    pub(crate) fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    /// Residue of `x`, in Montgomery form.
    pub(crate) fn image(&self, x: &BigInt) -> u64 {
        let r = x.mod_floor(&BigInt::from(self.p)).to_u64().expect("residue fits");
        self.mul(r, self.r2)
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The `count` largest primes below 2^61.
pub(crate) fn large_primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut c = (1u64 << 61) - 1;
    while out.len() < count {
        if is_prime(c) {
            out.push(c);
        }
        c -= 2;
    }
    out
}

/// The vector scaled by the lcm of its denominators.
pub(crate) fn integer_image(v: &[Rational]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::from(1), |acc, x| acc.lcm(x.denom()));
    v.iter().map(|x| x.numer() * (&l / x.denom())).collect()
}

/// Whether the unique solution of `Σ_j w_j·cols[j] = (1,…,1)` is strictly
/// positive, by fraction-free Gauss-Jordan elimination in `i128`. Every entry
/// stays a minor of the augmented matrix, so each division is exact. `None` on
/// overflow or when the columns are not independent.
pub(crate) fn solution_is_positive(cols: &[&[i128]]) -> Option<bool> {
    let k = cols.len();
    let n = cols.first()?.len();
    let mut m: Vec<Vec<i128>> = (0..n).map(|x| cols.iter().map(|c| c[x]).chain([1]).collect()).collect();
    let mut prev: i128 = 1;
    for c in 0..k {
        let r = (c..n).find(|&r| m[r][c] != 0)?;
        m.swap(c, r);
        let pivot_row = m[c].clone();
        let p = pivot_row[c];
        for (i, row) in m.iter_mut().enumerate() {
            if i == c {
                continue;
            }
            let f = row[c];
            for (x, &y) in row.iter_mut().zip(&pivot_row) {
                let num = p.checked_mul(*x)?.checked_sub(f.checked_mul(y)?)?;
                if num % prev != 0 {
                    return None;
                }
                *x = num / prev;
            }
        }
        prev = p;
    }
    Some((0..k).all(|c| m[c][k] != 0 && (m[c][k] > 0) == (m[c][c] > 0)))
}

/// An upper bound on `log2 ||v||`.
pub(crate) fn norm_bits(v: &[BigInt]) -> u64 {
    let sq: BigInt = v.iter().map(|x| x * x).sum();
    if sq.is_zero() {
        0
    } else {
        sq.bits().div_ceil(2)
    }
}

/// Number of primes above 2^60 whose product exceeds `2^bits`.
pub(crate) fn primes_needed(bits: u64) -> usize {
    (bits / 60 + 1) as usize
}

struct Lane {
    field: Field,
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
    /// Residual of the target after reduction by the first `k` rows.
    target: Vec<Vec<u64>>,
    /// Stack depth at which this lane saw a dependency the rationals do not have.
    dead_at: Option<usize>,
}

impl Lane {
    /// Fraction-free reduction: `r <- a·r - r[c]·row` for each row with pivot entry `a`.
    fn reduce(&self, v: &[u64]) -> Vec<u64> {
        let f = &self.field;
        let mut r = v.to_vec();
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            let b = r[c];
            if b == 0 {
                continue;
            }
            let a = row[c];
            for (x, &y) in r.iter_mut().zip(row) {
                *x = f.sub(f.mul(a, *x), f.mul(b, y));
            }
        }
        r
    }
}

/// Residue-based echelon stacks over several primes, tracking whether a
/// fixed target vector lies in the span of the pushed vectors.
pub(crate) struct ModStack {
    lanes: Vec<Lane>,
    depth: usize,
}

impl ModStack {
    pub(crate) fn new(fields: &[Field], target: &[Vec<u64>]) -> Self {
        ModStack {
            lanes: fields
                .iter()
                .zip(target)
                .map(|(f, t)| Lane {
                    field: *f,
                    rows: Vec::new(),
                    pivots: Vec::new(),
                    target: vec![t.clone()],
                    dead_at: None,
                })
                .collect(),
            depth: 0,
        }
    }

    /// Pushes `v` (one residue vector per lane) if it is independent over ℚ.
    pub(crate) fn push(&mut self, v: &[Vec<u64>]) -> bool {
        let reduced: Vec<Option<Vec<u64>>> =
            self.lanes.iter().zip(v).map(|(lane, vi)| lane.dead_at.is_none().then(|| lane.reduce(vi))).collect();
        if !reduced.iter().flatten().any(|r| r.iter().any(|&x| x != 0)) {
            return false;
        }
        self.depth += 1;
        for (lane, r) in self.lanes.iter_mut().zip(reduced) {
            let Some(r) = r else { continue };
            match r.iter().position(|&x| x != 0) {
                Some(c) => {
                    let f = lane.field;
                    let t = lane.target.last().expect("target stack is non-empty");
                    let (a, b) = (r[c], t[c]);
                    let next: Vec<u64> = t
                        .iter()
                        .zip(&r)
                        .map(|(&x, &y)| if b == 0 { x } else { f.sub(f.mul(a, x), f.mul(b, y)) })
                        .collect();
                    lane.rows.push(r);
                    lane.pivots.push(c);
                    lane.target.push(next);
                }
                None => lane.dead_at = Some(self.depth),
            }
        }
        true
    }

    pub(crate) fn pop(&mut self) {
        for lane in &mut self.lanes {
            match lane.dead_at {
                Some(d) if d == self.depth => lane.dead_at = None,
                Some(_) => {}
                None => {
                    lane.rows.pop();
                    lane.pivots.pop();
                    lane.target.pop();
                }
            }
        }
        self.depth -= 1;
    }

    /// Whether the target is in the span of the pushed vectors (over ℚ).
    pub(crate) fn target_in_span(&self) -> bool {
        self.lanes
            .iter()
            .filter(|l| l.dead_at.is_none())
            .all(|l| l.target.last().is_some_and(|t| t.iter().all(|&x| x == 0)))
    }
}
