//! Arithmetic in `(O_K / p^k O_K) = (Z/p^k Z)[sqrt(eps)]` and the curve-level
//! counting formulas.
//!
//! An element `s = a1 + a2 sqrt(eps)` is stored as the residue pair `(a1, a2)`.
//! The cusps of `X+ns(p^k)` are indexed by `H = (Z/p^k Z)^* / {±1}`, which is
//! cyclic of order `n = (p-1) p^(k-1) / 2`; positions in `H` are exponents of
//! a fixed generator `w`, with position `0` the identity.

use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{
    is_prime_u64, is_squarefree, legendre, mul_mod, pow_mod, prime_divisors_u64, reduce_i64,
};

/// Hard cap on `p^k`; the residue tables are dense.
pub const MAX_MODULUS: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CartanError {
    #[error("p must be a prime >= 5 (got {0})")]
    InvalidPrime(u64),
    #[error("k must be at least 1")]
    InvalidExponent,
    #[error("p^k = {p}^{k} exceeds the supported modulus")]
    ModulusTooLarge { p: u64, k: u32 },
    #[error("epsilon = {epsilon} is not admissible: {reason}")]
    BadEpsilon { epsilon: i64, reason: &'static str },
    #[error("{w} does not generate (Z/{modulus}Z)^*/{{±1}}")]
    NotGenerator { w: u64, modulus: u64 },
    #[error("({a1}, {a2}) is not invertible mod {modulus}")]
    NotInvertible { a1: u64, a2: u64, modulus: u64 },
    #[error("genus formula gave a non-integer for p = {0}")]
    GenusNotIntegral(u64),
}

/// `eps = -1` when `p ≡ 3 mod 4`, otherwise the first squarefree
/// `eps ≡ 3 mod 4` in `3, 7, 11, ...` that is a non-residue mod `p`.
pub fn choose_epsilon(p: u64) -> i64 {
    if p % 4 == 3 {
        return -1;
    }
    let mut e = 3i64;
    loop {
        if is_squarefree(e) && legendre(&BigInt::from(e), p) == Ok(-1) {
            return e;
        }
        e += 4;
    }
}

fn validate_prime(p: u64) -> Result<(), CartanError> {
    if p < 5 || !is_prime_u64(p) {
        return Err(CartanError::InvalidPrime(p));
    }
    Ok(())
}

fn checked_modulus(p: u64, k: u32) -> Result<u64, CartanError> {
    if k == 0 {
        return Err(CartanError::InvalidExponent);
    }
    p.checked_pow(k)
        .filter(|&m| m <= MAX_MODULUS)
        .ok_or(CartanError::ModulusTooLarge { p, k })
}

/// Order of `H = (Z/p^k Z)^* / {±1}`.
pub fn h_order(p: u64, k: u32) -> u64 {
    (p - 1) * p.pow(k - 1) / 2
}

/// Order of the class of `g` in `H`, or `None` if `p | g`.
pub fn order_in_h(g: u64, p: u64, modulus: u64) -> Option<u64> {
    if g.is_multiple_of(p) {
        return None;
    }
    let n = (p - 1) * (modulus / p) / 2;
    let is_pm_one = |x: u64| x == 1 || x == modulus - 1;
    let mut order = n;
    for q in prime_divisors_u64(n) {
        while order.is_multiple_of(q) && is_pm_one(pow_mod(g, order / q, modulus)) {
            order /= q;
        }
    }
    Some(order)
}

/// Smallest positive integer whose class generates `H`.
pub fn find_generator_h(p: u64, k: u32) -> Result<u64, CartanError> {
    validate_prime(p)?;
    let m = checked_modulus(p, k)?;
    let n = h_order(p, k);
    Ok((1..m)
        .find(|&g| order_in_h(g, p, m) == Some(n))
        .expect("H is cyclic"))
}

/// Number of cusps of `X+ns(p^k)`: `p^(k-1) (p-1) / 2`.
pub fn cusp_count_plus(p: u64, k: u32) -> u64 {
    h_order(p, k)
}

/// Genus of `X+ns(p)`: `(p^2 - 10p + 23 + 6(-1/p) + 4(-3/p)) / 24`.
pub fn genus_plus(p: u64) -> Result<u64, CartanError> {
    validate_prime(p)?;
    let l1 = legendre(&BigInt::from(-1), p).expect("p is an odd prime") as i64;
    let l3 = legendre(&BigInt::from(-3), p).expect("p is an odd prime") as i64;
    let p = p as i64;
    let num = p * p - 10 * p + 23 + 6 * l1 + 4 * l3;
    if num < 0 || num % 24 != 0 {
        return Err(CartanError::GenusNotIntegral(p as u64));
    }
    Ok((num / 24) as u64)
}

/// Order of the unit group `(O_K / p^k O_K)^*`: `p^(2k-2) (p^2 - 1)`.
pub fn unit_group_order(p: u64, k: u32) -> u64 {
    p.pow(2 * k - 2) * (p * p - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CartanElement {
    pub a1: u64,
    pub a2: u64,
}

/// Canonical representative of `{s, -s}`: `0 <= a1 <= (p^k-1)/2`, and
/// `a2 <= (p^k-1)/2` when `a1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CartanClass {
    pub a1: u64,
    pub a2: u64,
}

impl CartanClass {
    pub fn element(self) -> CartanElement {
        CartanElement {
            a1: self.a1,
            a2: self.a2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CartanContext {
    p: u64,
    k: u32,
    epsilon: i64,
    modulus: u64,
    n: usize,
    w: u64,
    // residue -> position in H (u32::MAX for non-units)
    dlog: Vec<u32>,
    // position in H -> smallest positive representative of w^i
    powers: Vec<u64>,
}

impl CartanContext {
    /// Context with the default `eps` and the smallest generator of `H`.
    pub fn new(p: u64, k: u32) -> Result<Self, CartanError> {
        Self::with_params(p, k, None, None)
    }

    pub fn with_params(
        p: u64,
        k: u32,
        epsilon: Option<i64>,
        w: Option<u64>,
    ) -> Result<Self, CartanError> {
        validate_prime(p)?;
        let modulus = checked_modulus(p, k)?;
        let epsilon = epsilon.unwrap_or_else(|| choose_epsilon(p));
        if epsilon.rem_euclid(4) != 3 {
            return Err(CartanError::BadEpsilon {
                epsilon,
                reason: "not 3 mod 4",
            });
        }
        if !is_squarefree(epsilon) {
            return Err(CartanError::BadEpsilon {
                epsilon,
                reason: "not squarefree",
            });
        }
        if legendre(&BigInt::from(epsilon), p) != Ok(-1) {
            return Err(CartanError::BadEpsilon {
                epsilon,
                reason: "not a quadratic non-residue mod p",
            });
        }
        let n = h_order(p, k);
        let w = match w {
            Some(w) => {
                let w = w % modulus;
                if order_in_h(w, p, modulus) != Some(n) {
                    return Err(CartanError::NotGenerator { w, modulus });
                }
                w
            }
            None => find_generator_h(p, k)?,
        };
        let mut dlog = vec![u32::MAX; modulus as usize];
        let mut powers = Vec::with_capacity(n as usize);
        let mut x = 1u64;
        for i in 0..n {
            dlog[x as usize] = i as u32;
            dlog[(modulus - x) as usize] = i as u32;
            powers.push(x.min(modulus - x));
            x = mul_mod(x, w, modulus);
        }
        Ok(Self {
            p,
            k,
            epsilon,
            modulus,
            n: n as usize,
            w,
            dlog,
            powers,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn epsilon(&self) -> i64 {
        self.epsilon
    }
    pub fn modulus(&self) -> u64 {
        self.modulus
    }
    /// `|H|`.
    pub fn n(&self) -> usize {
        self.n
    }
    /// The generator `w` of `H`.
    pub fn w(&self) -> u64 {
        self.w
    }

    /// `d = 12 / gcd(12, p+1)`.
    pub fn d(&self) -> u64 {
        12 / 12u64.gcd(&(self.p + 1))
    }

    /// Position `i` of the class of `r` in `H` (so `±r = w^i`).
    pub fn h_index(&self, r: u64) -> Option<usize> {
        match self.dlog[(r % self.modulus) as usize] {
            u32::MAX => None,
            i => Some(i as usize),
        }
    }

    /// Smallest positive representative of `w^i`.
    pub fn w_pow(&self, i: usize) -> u64 {
        self.powers[i % self.n]
    }

    pub fn element(&self, a1: i64, a2: i64) -> CartanElement {
        CartanElement {
            a1: reduce_i64(a1, self.modulus),
            a2: reduce_i64(a2, self.modulus),
        }
    }

    pub fn is_invertible(&self, s: CartanElement) -> bool {
        !s.a1.is_multiple_of(self.p) || !s.a2.is_multiple_of(self.p)
    }

    fn eps_mod(&self) -> u64 {
        reduce_i64(self.epsilon, self.modulus)
    }

    /// `|s| = s * conj(s) = a1^2 - eps a2^2 mod p^k`.
    pub fn norm(&self, s: CartanElement) -> u64 {
        let m = self.modulus;
        let sq1 = mul_mod(s.a1, s.a1, m);
        let sq2 = mul_mod(mul_mod(s.a2, s.a2, m), self.eps_mod(), m);
        (sq1 + m - sq2) % m
    }

    /// `(s + conj(s)) / 2 = a1`.
    pub fn trace_half(&self, s: CartanElement) -> u64 {
        s.a1
    }

    pub fn mul(&self, s: CartanElement, t: CartanElement) -> CartanElement {
        let m = self.modulus;
        let e = self.eps_mod();
        let a1 = (mul_mod(s.a1, t.a1, m) + mul_mod(mul_mod(s.a2, t.a2, m), e, m)) % m;
        let a2 = (mul_mod(s.a1, t.a2, m) + mul_mod(s.a2, t.a1, m)) % m;
        CartanElement { a1, a2 }
    }

    pub fn neg(&self, s: CartanElement) -> CartanElement {
        let m = self.modulus;
        CartanElement {
            a1: (m - s.a1) % m,
            a2: (m - s.a2) % m,
        }
    }

    pub fn conj(&self, s: CartanElement) -> CartanElement {
        CartanElement {
            a1: s.a1,
            a2: (self.modulus - s.a2) % self.modulus,
        }
    }

    /// Multiplicative order of an invertible element (brute force).
    pub fn element_order(&self, s: CartanElement) -> u64 {
        let one = CartanElement { a1: 1, a2: 0 };
        let mut x = s;
        let mut ord = 1;
        while x != one {
            x = self.mul(x, s);
            ord += 1;
        }
        ord
    }

    pub fn canonical_class(&self, s: CartanElement) -> Result<CartanClass, CartanError> {
        if !self.is_invertible(s) {
            return Err(CartanError::NotInvertible {
                a1: s.a1,
                a2: s.a2,
                modulus: self.modulus,
            });
        }
        let half = (self.modulus - 1) / 2;
        let s = CartanElement {
            a1: s.a1 % self.modulus,
            a2: s.a2 % self.modulus,
        };
        let keep = if s.a1 != 0 {
            s.a1 <= half
        } else {
            s.a2 <= half
        };
        let t = if keep { s } else { self.neg(s) };
        Ok(CartanClass { a1: t.a1, a2: t.a2 })
    }

    /// All classes of `(O_K / p^k O_K)^* / {±1}` in canonical form, ordered by
    /// `(a1, a2)`.
    pub fn classes(&self) -> impl Iterator<Item = CartanClass> + '_ {
        let m = self.modulus;
        let half = (m - 1) / 2;
        let p = self.p;
        (0..=half).flat_map(move |a1| {
            let top = if a1 == 0 { half } else { m - 1 };
            (0..=top)
                .filter(move |&a2| a1 % p != 0 || a2 % p != 0)
                .map(move |a2| CartanClass { a1, a2 })
        })
    }

    /// Buckets of classes keyed by the position in `H` of `±|s|`.
    /// Every bucket has `(p+1) p^(k-1)` classes.
    pub fn norm_class_partition(&self) -> Vec<Vec<CartanClass>> {
        let mut buckets = vec![Vec::new(); self.n];
        for c in self.classes() {
            let i = self
                .h_index(self.norm(c.element()))
                .expect("norm of a unit is a unit");
            buckets[i].push(c);
        }
        buckets
    }

    /// Classes whose norm is exactly `h` (not `±h`).
    pub fn classes_with_norm(&self, h: u64) -> Vec<CartanClass> {
        let h = h % self.modulus;
        self.classes()
            .filter(|c| self.norm(c.element()) == h)
            .collect()
    }
}
