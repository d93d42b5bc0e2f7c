//! Primality testing: deterministic Miller-Rabin below 2^64, Baillie-PSW above.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{mul_mod, pow_mod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Primality {
    /// Deterministically proven prime.
    Proven,
    /// Passed Baillie-PSW; no known counterexample exists.
    Probable,
    /// Composite (always correct), or a unit.
    Composite,
}

impl Primality {
    pub fn is_prime(self) -> bool {
        !matches!(self, Primality::Composite)
    }
}

// Deterministic for n < 3.3 * 10^24, which covers u64.
const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

const SMALL_PRIMES: [u64; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let (d, s) = odd_part_u64(n - 1);
    MR_BASES
        .iter()
        .all(|&a| strong_probable_prime_u64(n, a, d, s))
}

fn odd_part_u64(mut d: u64) -> (u64, u32) {
    let s = d.trailing_zeros();
    d >>= s;
    (d, s)
}

fn strong_probable_prime_u64(n: u64, a: u64, d: u64, s: u32) -> bool {
    let mut x = pow_mod(a % n, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Classify `n`. Composite answers are always correct; values above 2^64 that
/// pass are reported as [`Primality::Probable`].
pub fn is_prime(n: &BigUint) -> Primality {
    if let Some(small) = n.to_u64() {
        return if is_prime_u64(small) {
            Primality::Proven
        } else {
            Primality::Composite
        };
    }
    for &p in &SMALL_PRIMES {
        if (n % p).is_zero() {
            return Primality::Composite;
        }
    }
    if !strong_probable_prime(n, &BigUint::from(2u32)) {
        return Primality::Composite;
    }
    if strong_lucas_probable_prime(n) {
        Primality::Probable
    } else {
        Primality::Composite
    }
}

fn strong_probable_prime(n: &BigUint, base: &BigUint) -> bool {
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let mut x = base.modpow(&d, n);
    if x == one || x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == n_minus_1 {
            return true;
        }
    }
    false
}

/// Jacobi symbol `(a / n)` for odd positive `n`.
pub(crate) fn jacobi(a: &BigInt, n: &BigInt) -> i8 {
    debug_assert!(n.is_odd() && n.sign() == Sign::Plus);
    let mut a = a.mod_floor(n);
    let mut n = n.clone();
    let mut result = 1i8;
    let three = BigInt::from(3);
    let five = BigInt::from(5);
    let eight = BigInt::from(8);
    let four = BigInt::from(4);
    while !a.is_zero() {
        let tz = a.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            a >>= tz;
            let r = n.mod_floor(&eight);
            if tz % 2 == 1 && (r == three || r == five) {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.mod_floor(&four) == three && n.mod_floor(&four) == three {
            result = -result;
        }
        a = a.mod_floor(&n);
    }
    if n.is_one() {
        result
    } else {
        0
    }
}

fn half_mod(x: BigInt, n: &BigInt) -> BigInt {
    if x.is_odd() {
        (x + n) >> 1
    } else {
        x >> 1
    }
}

/// Strong Lucas probable-prime test with Selfridge's parameters (P = 1).
fn strong_lucas_probable_prime(n_u: &BigUint) -> bool {
    let sq = n_u.sqrt();
    if &sq * &sq == *n_u {
        return false;
    }
    let n = BigInt::from_biguint(Sign::Plus, n_u.clone());

    // D = 5, -7, 9, -11, ... with (D/n) = -1
    let mut d_abs = 5i64;
    let mut sign = 1i64;
    let disc = loop {
        let d = BigInt::from(sign * d_abs);
        match jacobi(&d, &n) {
            -1 => break d,
            0 if BigInt::from(d_abs) != n => {
                return false;
            }
            _ => {}
        }
        d_abs += 2;
        sign = -sign;
    };
    let q: BigInt = (BigInt::one() - &disc) / 4;
    let q_mod = q.mod_floor(&n);
    let disc_mod = disc.mod_floor(&n);

    let n_plus_1: BigInt = &n + BigInt::one();
    let s = n_plus_1.trailing_zeros().unwrap_or(0);
    let d = &n_plus_1 >> s;

    // Left-to-right binary ladder for U_d, V_d, Q^d.
    let mut u = BigInt::zero();
    let mut v = BigInt::from(2);
    let mut qk = BigInt::one();
    let bits = d.bits();
    for i in (0..bits).rev() {
        // double
        u = (&u * &v).mod_floor(&n);
        v = (&v * &v - BigInt::from(2) * &qk).mod_floor(&n);
        qk = (&qk * &qk).mod_floor(&n);
        if d.bit(i) {
            // increment (P = 1)
            let nu = half_mod(&u + &v, &n);
            let nv = half_mod(&disc_mod * &u + &v, &n);
            u = nu.mod_floor(&n);
            v = nv.mod_floor(&n);
            qk = (&qk * &q_mod).mod_floor(&n);
        }
    }
    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 1..s {
        v = (&v * &v - BigInt::from(2) * &qk).mod_floor(&n);
        if v.is_zero() {
            return true;
        }
        qk = (&qk * &qk).mod_floor(&n);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sieve(limit: usize) -> Vec<bool> {
        let mut is = vec![true; limit + 1];
        is[0] = false;
        is[1] = false;
        let mut i = 2;
        while i * i <= limit {
            if is[i] {
                let mut j = i * i;
                while j <= limit {
                    is[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        is
    }

    #[test]
    fn small_values_match_sieve() {
        let s = sieve(20_000);
        for (n, &expected) in s.iter().enumerate() {
            assert_eq!(is_prime_u64(n as u64), expected, "n = {n}");
        }
    }

    #[test]
    fn examples() {
        assert_eq!(is_prime(&BigUint::from(37181u32)), Primality::Proven);
        assert_eq!(is_prime(&BigUint::from(3025u32)), Primality::Composite);
        assert_eq!(is_prime(&BigUint::from(1u32)), Primality::Composite);
        assert_eq!(is_prime(&BigUint::from(0u32)), Primality::Composite);
    }

    #[test]
    fn strong_pseudoprimes_rejected() {
        // strong pseudoprimes to several small bases
        for n in [2047u64, 3215031751, 3825123056546413051] {
            assert!(!is_prime_u64(n), "{n}");
        }
        // Carmichael number
        assert!(!is_prime_u64(561));
    }

    #[test]
    fn large_primes_probable() {
        for s in [
            "58884077243434864347851",
            "9988553613691393812358794271",
            "13070849919225655729061",
            "48833370476331324749419",
            "170141183460469231731687303715884105727", // 2^127 - 1
        ] {
            let n: BigUint = s.parse().unwrap();
            assert_eq!(is_prime(&n), Primality::Probable, "{s}");
        }
    }

    #[test]
    fn large_composites_rejected() {
        let p: BigUint = "58884077243434864347851".parse().unwrap();
        assert_eq!(is_prime(&(&p * &p)), Primality::Composite);
        let q: BigUint = "9988553613691393812358794271".parse().unwrap();
        assert_eq!(is_prime(&(&p * &q)), Primality::Composite);
        // 2^128 + 1 = 59649589127497217 * 5704689200685129054721
        let f7 = (BigUint::one() << 128u32) + 1u32;
        assert_eq!(is_prime(&f7), Primality::Composite);
    }

    #[test]
    fn lucas_alone_agrees_with_sieve_on_odd_nonsquares() {
        let s = sieve(5000);
        for n in (5u32..5000).step_by(2) {
            let nn = BigUint::from(n);
            if nn.sqrt().pow(2) == nn {
                continue;
            }
            if s[n as usize] {
                assert!(strong_lucas_probable_prime(&nn), "prime {n} failed Lucas");
            }
        }
        // known strong Lucas pseudoprimes are the only odd composites that pass
        let slpsp = [5459u32, 5777, 10877, 16109, 18971];
        for n in slpsp {
            assert!(strong_lucas_probable_prime(&BigUint::from(n)), "{n}");
        }
    }

    #[test]
    fn jacobi_matches_legendre_for_primes() {
        for p in [3i64, 5, 7, 11, 13, 101] {
            for a in -20i64..20 {
                let j = jacobi(&BigInt::from(a), &BigInt::from(p));
                let l = crate::arith::legendre(&BigInt::from(a), p as u64).unwrap();
                assert_eq!(j, l, "({a}/{p})");
            }
        }
    }
}
