//! Exact scalar arithmetic.
//!
//! Big integers and rationals come from `num-bigint` / `num-rational`; this
//! module adds the handful of number-theoretic helpers the rest of the crate
//! needs: fractional parts, the second Bernoulli polynomial, Legendre symbols,
//! small modular arithmetic, primality testing and factorization.

mod factor;
mod primality;

pub use factor::{factorize, FactorBudget, FactorEntry, Factorization, DEFAULT_RHO_ITERATIONS};
pub use primality::{is_prime, is_prime_u64, Primality};

pub use num_bigint::{BigInt, BigUint};
pub use num_rational::BigRational;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
}

/// Fractional part `<x>` in `[0, 1)`.
pub fn frac_part(x: &BigRational) -> BigRational {
    x - x.floor()
}

/// `B2(t) = t^2 - t + 1/6`.
pub fn bernoulli2(t: &BigRational) -> BigRational {
    let sixth = BigRational::new(BigInt::one(), BigInt::from(6));
    t * t - t + sixth
}

/// Shorthand for the rational `num / den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Legendre symbol `(a / p)` by Euler's criterion.
pub fn legendre(a: &BigInt, p: u64) -> Result<i8, ArithError> {
    if p < 3 || !is_prime_u64(p) {
        return Err(ArithError::NotOddPrime(p));
    }
    let r = a.mod_floor(&BigInt::from(p));
    if r.is_zero() {
        return Ok(0);
    }
    let r = u64::try_from(&r).expect("residue below p fits in u64");
    let e = pow_mod(r, (p - 1) / 2, p);
    Ok(if e == 1 { 1 } else { -1 })
}

/// `a * b mod m` without overflow.
#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Reduce a signed integer into `[0, m)`.
#[inline]
pub fn reduce_i64(x: i64, m: u64) -> u64 {
    x.rem_euclid(m as i64) as u64
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let g = (a as i128).extended_gcd(&(m as i128));
    if g.gcd != 1 {
        return None;
    }
    Some(g.x.rem_euclid(m as i128) as u64)
}

/// Distinct prime divisors of a machine-sized integer, ascending.
pub fn prime_divisors_u64(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn is_squarefree(n: i64) -> bool {
    let mut m = n.unsigned_abs();
    if m == 0 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= m {
        if m.is_multiple_of(d * d) {
            return false;
        }
        if m.is_multiple_of(d) {
            m /= d;
        }
        d += 1;
    }
    true
}

/// Exact conversion of an integral rational; `None` if the denominator is not 1.
pub fn to_integer(x: &BigRational) -> Option<BigInt> {
    if x.is_integer() {
        Some(x.numer().clone())
    } else {
        None
    }
}

/// Natural log of `|x|` for arbitrarily large integers (no overflow).
pub fn ln_abs(x: &BigInt) -> f64 {
    let mag = x.abs();
    let bits = mag.bits();
    if bits <= 1000 {
        return num_traits::ToPrimitive::to_f64(&mag)
            .unwrap_or(f64::INFINITY)
            .ln();
    }
    let shift = bits - 900;
    let top: BigInt = &mag >> shift;
    num_traits::ToPrimitive::to_f64(&top)
        .expect("900-bit value fits in f64")
        .ln()
        + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of `|x|` for a rational.
pub fn ln_abs_rational(x: &BigRational) -> f64 {
    ln_abs(x.numer()) - ln_abs(x.denom())
}
