//! Fixed-point evaluation of `base^sqrt(q)` for rational `base` and `q`,
//! rounded once to a rational with a given number of significant digits.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalar::{round_half_away, Rational};

const GUARD_DIGITS: usize = 24;

fn pow10(k: usize) -> BigInt {
    num_traits::pow(BigInt::from(10), k)
}

/// Fixed-point number `value / scale`.
struct Fixed {
    scale: BigInt,
}

impl Fixed {
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a * b) / &self.scale
    }

    fn div(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a * &self.scale) / b
    }

    /// `atanh(z)` for |z| <= 1/3 by its odd power series.
    fn atanh(&self, z: &BigInt) -> BigInt {
        let z2 = self.mul(z, z);
        let mut term = z.clone();
        let mut acc = BigInt::zero();
        let mut k = 1u64;
        while !term.is_zero() {
            acc += &term / BigInt::from(k);
            term = self.mul(&term, &z2);
            k += 2;
        }
        acc
    }

    fn ln2(&self) -> BigInt {
        // ln 2 = 2 atanh(1/3)
        let third = &self.scale / BigInt::from(3);
        self.atanh(&third) * 2
    }

    /// Natural log of a positive integer.
    fn ln_int(&self, x: &BigInt) -> BigInt {
        assert!(x.is_positive());
        let bits = x.bits();
        let k = bits.saturating_sub(1);
        // y = x / 2^k in [1, 2)
        let y = (x * &self.scale) >> k as usize;
        let z = self.div(&(&y - &self.scale), &(&y + &self.scale));
        self.ln2() * BigInt::from(k) + self.atanh(&z) * 2
    }

    fn exp(&self, x: &BigInt) -> BigInt {
        // x = k ln2 + r, 0 <= r < ln2
        let ln2 = self.ln2();
        let (k, r) = x.div_mod_floor(&ln2);
        // exp(r) by Taylor; r < 0.7 so convergence is quick
        let mut term = self.scale.clone();
        let mut acc = BigInt::zero();
        let mut i = 1u64;
        while !term.is_zero() {
            acc += &term;
            term = self.mul(&term, &r) / BigInt::from(i);
            i += 1;
        }
        let k: i64 = k.try_into().expect("exponent out of range");
        if k >= 0 {
            acc << k as usize
        } else {
            acc >> (-k) as usize
        }
    }

    fn sqrt_rational(&self, q: &Rational) -> BigInt {
        ((q.numer() * &self.scale * &self.scale) / q.denom()).sqrt()
    }
}

/// `base^sqrt(q)` rounded to `digits` significant decimal digits.
pub fn pow_sqrt_rounded(base: &Rational, q: &Rational, digits: usize) -> Rational {
    assert!(base.is_positive() && !q.is_negative() && digits > 0);
    let int_digits = {
        // rough magnitude bound so the working scale keeps enough significant digits
        let approx = crate::scalar::rational_to_f64(base).ln().abs() * crate::scalar::rational_to_f64(q).sqrt();
        (approx / std::f64::consts::LN_10).ceil() as usize + 2
    };
    let fx = Fixed { scale: pow10(digits + GUARD_DIGITS + int_digits) };
    let ln_base = fx.ln_int(base.numer()) - fx.ln_int(base.denom());
    let d = fx.sqrt_rational(q);
    let exponent = fx.mul(&ln_base, &d);
    let value = fx.exp(&exponent);
    round_significant(&Rational::new(value, fx.scale.clone()), digits)
}

/// Rounds a positive rational to `digits` significant decimal digits.
pub fn round_significant(x: &Rational, digits: usize) -> Rational {
    assert!(x.is_positive());
    // Find e with 10^(digits-1) <= x * 10^e < 10^digits.
    let lower = pow10(digits - 1);
    let upper = pow10(digits);
    let mut e: i64 = digits as i64 - 1 - (crate::scalar::rational_to_f64(x).log10().floor() as i64);
    loop {
        let scaled = scale10(x, e);
        let r = round_half_away(&scaled);
        if r < lower {
            e += 1;
        } else if r >= upper {
            e -= 1;
        } else {
            return scale10(&Rational::from_integer(r), -e);
        }
    }
}

fn scale10(x: &Rational, e: i64) -> Rational {
    if e >= 0 {
        x * Rational::from_integer(pow10(e as usize))
    } else {
        x / Rational::from_integer(pow10((-e) as usize))
    }
}

/// `Some(r)` when `q` is the square of a rational `r`.
pub fn exact_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| Rational::new(n, d))
}

/// Exact power for integer exponents.
pub fn pow_int(base: &Rational, exp: &BigInt) -> Rational {
    let e: i32 = exp.try_into().expect("exponent out of range");
    if e >= 0 {
        num_traits::pow(base.clone(), e as usize)
    } else {
        Rational::one() / num_traits::pow(base.clone(), (-e) as usize)
    }
}
