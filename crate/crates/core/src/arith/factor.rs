//! Integer factorization: trial division, perfect-power detection, then
//! Pollard rho with Brent's cycle detection.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::primality::{is_prime, is_prime_u64, Primality};

pub const DEFAULT_RHO_ITERATIONS: u64 = 100_000_000;
pub const DEFAULT_TRIAL_BOUND: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorBudget {
    /// Trial division runs over all primes up to this bound.
    pub trial_bound: u64,
    /// Rho iterations allowed per composite before it is reported unsplit.
    pub rho_iterations: u64,
}

impl Default for FactorBudget {
    fn default() -> Self {
        Self {
            trial_bound: DEFAULT_TRIAL_BOUND,
            rho_iterations: DEFAULT_RHO_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorEntry {
    #[serde(with = "crate::output::biguint_string")]
    pub prime: BigUint,
    pub exponent: u32,
    /// `Composite` marks a cofactor that could not be split within budget.
    pub certainty: Primality,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub entries: Vec<FactorEntry>,
}

impl Factorization {
    /// Product of all `prime^exponent`.
    pub fn value(&self) -> BigUint {
        self.entries
            .iter()
            .fold(BigUint::one(), |acc, e| acc * e.prime.pow(e.exponent))
    }

    /// True when every entry is a (proven or probable) prime.
    pub fn is_complete(&self) -> bool {
        self.entries.iter().all(|e| e.certainty.is_prime())
    }

    pub fn unsplit(&self) -> impl Iterator<Item = &FactorEntry> {
        self.entries
            .iter()
            .filter(|e| e.certainty == Primality::Composite)
    }
}

impl fmt::Display for Factorization {
    /// `p1^e1 * p2^e2` with ascending primes and `^1` omitted; `1` when empty.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "1");
        }
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, " * ")?;
            }
            if e.certainty == Primality::Composite {
                write!(f, "[composite {}]", e.prime)?;
            } else {
                write!(f, "{}", e.prime)?;
            }
            if e.exponent > 1 {
                write!(f, "^{}", e.exponent)?;
            }
        }
        Ok(())
    }
}

fn small_primes(bound: u64) -> Vec<u64> {
    let limit = bound as usize;
    if limit < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// If `n = r^k` for some `k >= 2`, return `(r, k)` with `k` the smallest prime
/// exponent that works.
pub(crate) fn perfect_power(n: &BigUint) -> Option<(BigUint, u32)> {
    if *n < BigUint::from(4u32) {
        return None;
    }
    let max_k = n.bits() as u32;
    for k in 2..=max_k {
        if !is_prime_u64(k as u64) {
            continue;
        }
        let r = n.nth_root(k);
        if r.pow(k) == *n {
            return Some((r, k));
        }
    }
    None
}

/// Factor `n >= 1`. Cofactors that survive the rho budget are kept as
/// [`Primality::Composite`] entries instead of failing.
pub fn factorize(n: &BigUint, budget: &FactorBudget) -> Factorization {
    assert!(!n.is_zero(), "factorize requires n >= 1");
    let mut found: BTreeMap<BigUint, (u32, Primality)> = BTreeMap::new();
    let record =
        |p: BigUint, e: u32, c: Primality, found: &mut BTreeMap<BigUint, (u32, Primality)>| {
            let slot = found.entry(p).or_insert((0, c));
            slot.0 += e;
            if c == Primality::Proven || slot.1 == Primality::Composite {
                slot.1 = c;
            }
        };

    let mut rest = n.clone();
    for p in small_primes(budget.trial_bound) {
        if rest.is_one() {
            break;
        }
        let pb = BigUint::from(p);
        if &pb * &pb > rest {
            break;
        }
        let mut e = 0u32;
        loop {
            let (q, r) = rest.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e > 0 {
            record(pb, e, Primality::Proven, &mut found);
        }
    }

    let mut stack = vec![(rest, 1u32)];
    while let Some((m, mult)) = stack.pop() {
        if m.is_one() {
            continue;
        }
        let primality = is_prime(&m);
        if primality.is_prime() {
            record(m, mult, primality, &mut found);
            continue;
        }
        if let Some((root, k)) = perfect_power(&m) {
            stack.push((root, mult * k));
            continue;
        }
        match pollard_brent(&m, budget.rho_iterations) {
            Some(d) => {
                let other = &m / &d;
                stack.push((d, mult));
                stack.push((other, mult));
            }
            None => record(m, mult, Primality::Composite, &mut found),
        }
    }

    Factorization {
        entries: found
            .into_iter()
            .map(|(prime, (exponent, certainty))| FactorEntry {
                prime,
                exponent,
                certainty,
            })
            .collect(),
    }
}

const BATCH: u64 = 128;

/// Find a nontrivial divisor of the odd composite `n`, or `None` once the
/// iteration budget is spent.
pub(crate) fn pollard_brent(n: &BigUint, max_iterations: u64) -> Option<BigUint> {
    if n.is_even() {
        return Some(BigUint::from(2u32));
    }
    if let Some(small) = n.to_u128() {
        return pollard_brent_u128(small, max_iterations).map(BigUint::from);
    }
    let mut spent = 0u64;
    let mut c = BigUint::one();
    while spent < max_iterations {
        let f = |y: &BigUint| (y * y + &c) % n;
        let mut y = BigUint::from(2u32);
        let mut x = y.clone();
        let mut ys = y.clone();
        let mut q = BigUint::one();
        let mut g = BigUint::one();
        let mut r = 1u64;
        while g.is_one() && spent < max_iterations {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            spent += r;
            let mut k = 0u64;
            while k < r && g.is_one() {
                ys = y.clone();
                let steps = BATCH.min(r - k);
                for _ in 0..steps {
                    y = f(&y);
                    let diff = if x > y { &x - &y } else { &y - &x };
                    q = (q * diff) % n;
                }
                spent += steps;
                g = q.gcd(n);
                k += BATCH;
            }
            r *= 2;
        }
        if g == *n {
            // batch overshot; replay one step at a time
            loop {
                ys = f(&ys);
                let diff = if x > ys { &x - &ys } else { &ys - &x };
                g = diff.gcd(n);
                if !g.is_one() {
                    break;
                }
            }
        }
        if !g.is_one() && g != *n {
            return Some(g);
        }
        c += 1u32;
    }
    None
}

fn mul_mod_u128(a: u128, b: u128, m: u128) -> u128 {
    if let (Some(a64), Some(b64)) = (u64::try_from(a).ok(), u64::try_from(b).ok()) {
        if m <= u64::MAX as u128 {
            return (a64 as u128 * b64 as u128) % m;
        }
    }
    // double-and-add; only used for moduli above 2^64
    let (mut a, mut b) = (a % m, b % m);
    let mut acc = 0u128;
    while b > 0 {
        if b & 1 == 1 {
            acc = add_mod_u128(acc, a, m);
        }
        a = add_mod_u128(a, a, m);
        b >>= 1;
    }
    acc
}

#[inline]
fn add_mod_u128(a: u128, b: u128, m: u128) -> u128 {
    let (s, overflow) = a.overflowing_add(b);
    if overflow || s >= m {
        s.wrapping_sub(m)
    } else {
        s
    }
}

fn gcd_u128(a: u128, b: u128) -> u128 {
    a.gcd(&b)
}

const LOW64: u128 = u64::MAX as u128;

/// Full 256-bit product as `(high, low)`.
fn wide_mul(a: u128, b: u128) -> (u128, u128) {
    let (a1, a0) = (a >> 64, a & LOW64);
    let (b1, b0) = (b >> 64, b & LOW64);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & LOW64) + (p10 & LOW64);
    let lo = (p00 & LOW64) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

/// Montgomery multiplication modulo an odd `n < 2^127`, with `R = 2^128`.
struct Montgomery {
    n: u128,
    neg_inv: u128,
}

impl Montgomery {
    fn new(n: u128) -> Self {
        debug_assert!(n % 2 == 1 && n < 1 << 127);
        let mut inv = n;
        for _ in 0..7 {
            inv = inv.wrapping_mul(2u128.wrapping_sub(n.wrapping_mul(inv)));
        }
        Self {
            n,
            neg_inv: inv.wrapping_neg(),
        }
    }

    /// `a b R^-1 mod n` for `a, b < n`.
    fn mul(&self, a: u128, b: u128) -> u128 {
        let (hi, lo) = wide_mul(a, b);
        let m = lo.wrapping_mul(self.neg_inv);
        let (mhi, mlo) = wide_mul(m, self.n);
        let carry = u128::from(lo.overflowing_add(mlo).1);
        let t = hi + mhi + carry;
        if t >= self.n {
            t - self.n
        } else {
            t
        }
    }
}

fn pollard_brent_u128(n: u128, max_iterations: u64) -> Option<u128> {
    if n.is_multiple_of(2) {
        return Some(2);
    }
    if n < 1 << 127 {
        let mont = Montgomery::new(n);
        brent_with(n, max_iterations, |a, b| mont.mul(a, b))
    } else {
        brent_with(n, max_iterations, |a, b| mul_mod_u128(a, b, n))
    }
}

/// Brent's cycle search for `y -> y^2 + c` under the multiplication `mul`.
/// Any multiplication of the form `a b u mod n` with `u` a unit works.
fn brent_with<M: Fn(u128, u128) -> u128>(n: u128, max_iterations: u64, mul: M) -> Option<u128> {
    let mut spent = 0u64;
    let mut c = 1u128;
    while spent < max_iterations {
        let f = |y: u128| add_mod_u128(mul(y, y), c, n);
        let mut y = 2u128;
        let mut x = y;
        let mut ys = y;
        let mut q = 1u128;
        let mut g = 1u128;
        let mut r = 1u64;
        while g == 1 && spent < max_iterations {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            spent += r;
            let mut k = 0u64;
            while k < r && g == 1 {
                ys = y;
                let steps = BATCH.min(r - k);
                for _ in 0..steps {
                    y = f(y);
                    q = mul(q, x.abs_diff(y));
                }
                spent += steps;
                g = gcd_u128(q, n);
                k += BATCH;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd_u128(x.abs_diff(ys), n);
                if g != 1 {
                    break;
                }
            }
        }
        if g != 1 && g != n {
            return Some(g);
        }
        c += 1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trial_division_oracle(mut n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        let mut d = 2;
        while d * d <= n {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            if e > 0 {
                out.push((d, e));
            }
            d += 1;
        }
        if n > 1 {
            out.push((n, 1));
        }
        out
    }

    fn as_pairs(f: &Factorization) -> Vec<(u64, u32)> {
        f.entries
            .iter()
            .map(|e| (e.prime.to_u64().unwrap(), e.exponent))
            .collect()
    }

    #[test]
    fn examples() {
        let f = factorize(&BigUint::from(1183u32), &FactorBudget::default());
        assert_eq!(as_pairs(&f), vec![(7, 1), (13, 2)]);
        assert_eq!(f.to_string(), "7 * 13^2");

        let one = factorize(&BigUint::one(), &FactorBudget::default());
        assert!(one.entries.is_empty());
        assert_eq!(one.to_string(), "1");
    }

    #[test]
    fn squared_large_prime_via_perfect_power() {
        let p: BigUint = "58884077243434864347851".parse().unwrap();
        let f = factorize(&(&p * &p), &FactorBudget::default());
        assert_eq!(f.entries.len(), 1);
        assert_eq!(f.entries[0].prime, p);
        assert_eq!(f.entries[0].exponent, 2);
        assert_eq!(f.entries[0].certainty, Primality::Probable);
    }

    #[test]
    fn product_of_squares_is_one_perfect_square() {
        // 3341773^2 * 11596933^2 is itself a square; its root needs rho
        let a = BigUint::from(3_341_773u64);
        let b = BigUint::from(11_596_933u64);
        let n = (&a * &b).pow(2);
        let f = factorize(&n, &FactorBudget::default());
        assert_eq!(as_pairs(&f), vec![(3_341_773, 2), (11_596_933, 2)]);
    }

    #[test]
    fn rho_splits_semiprime_above_u128() {
        let p: BigUint = "18934761332741".parse().unwrap();
        let q: BigUint = "9988553613691393812358794271".parse().unwrap();
        let f = factorize(&(&p * &q), &FactorBudget::default());
        assert!(f.is_complete());
        assert_eq!(f.value(), &p * &q);
        assert_eq!(f.entries[0].prime, p);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let p: BigUint = "9988553613691393812358794271".parse().unwrap();
        let q: BigUint = "13070849919225655729061".parse().unwrap();
        let budget = FactorBudget {
            trial_bound: 1000,
            rho_iterations: 1000,
        };
        let f = factorize(&(&p * &q), &budget);
        assert!(!f.is_complete());
        assert_eq!(f.unsplit().count(), 1);
        assert_eq!(f.value(), &p * &q);
        assert!(f.to_string().starts_with("[composite "));
    }

    #[test]
    fn perfect_power_detection() {
        assert_eq!(
            perfect_power(&BigUint::from(3125u32)),
            Some((BigUint::from(5u32), 5))
        );
        assert_eq!(
            perfect_power(&BigUint::from(36u32)),
            Some((BigUint::from(6u32), 2))
        );
        assert_eq!(perfect_power(&BigUint::from(35u32)), None);
    }

    #[test]
    fn montgomery_matches_bigint() {
        let r = BigUint::one() << 128u32;
        for n in [(1u128 << 100) + 277, (1u128 << 126) + 1, 1_000_000_007, 3] {
            let mont = Montgomery::new(n);
            for (a, b) in [(n - 1, n - 2), (12345, 67890), (0, n - 1), (n / 3, n / 7)] {
                let got = BigUint::from(mont.mul(a, b));
                let lhs = (got * &r) % BigUint::from(n);
                let rhs = (BigUint::from(a) * BigUint::from(b)) % BigUint::from(n);
                assert_eq!(lhs, rhs, "n={n} a={a} b={b}");
            }
        }
    }

    #[test]
    fn u128_mulmod_above_64_bits() {
        let m: u128 = (1u128 << 100) + 277;
        let a: u128 = (1u128 << 99) + 12345;
        let b: u128 = (1u128 << 98) + 6789;
        let expected = (BigUint::from(a) * BigUint::from(b)) % BigUint::from(m);
        assert_eq!(BigUint::from(mul_mod_u128(a, b, m)), expected);
    }

    proptest! {
        #[test]
        fn matches_trial_division(n in 1u64..1_000_000) {
            let f = factorize(&BigUint::from(n), &FactorBudget::default());
            prop_assert_eq!(f.value(), BigUint::from(n));
            prop_assert_eq!(as_pairs(&f), trial_division_oracle(n));
        }

        #[test]
        fn small_trial_bound_still_complete(n in 2u64..1_000_000_000_000) {
            let budget = FactorBudget { trial_bound: 10, rho_iterations: 10_000_000 };
            let f = factorize(&BigUint::from(n), &budget);
            prop_assert!(f.is_complete());
            prop_assert_eq!(f.value(), BigUint::from(n));
            for e in &f.entries {
                prop_assert!(is_prime_u64(e.prime.to_u64().unwrap()));
            }
        }
    }
}
