//! Order and structure of the cuspidal divisor class group of `X+ns(p^k)`.
//!
//! Three independent routes to the order are provided: the circulant
//! determinant of `θ'` (Bareiss), the product of the Smith invariant factors
//! of the generator matrix of `R_d θ` in `R_0`, and (for `k = 1`) the explicit
//! Bernoulli determinant over a generator of `F_(p^2)^*`.

mod linalg;

use std::time::Instant;

use num_bigint::{BigInt, BigUint, Sign};
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use linalg::{bareiss_det, rational_det, snf};

use crate::arith::{
    bernoulli2, factorize, frac_part, ln_abs, mul_mod, prime_divisors_u64, BigRational,
    FactorBudget, Factorization,
};
use crate::cartan::{choose_epsilon, cusp_count_plus, genus_plus, CartanContext, CartanError};
use crate::stickelberger::{r_d_theta_generators, StickelbergerData, StickelbergerError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassGroupError {
    #[error(transparent)]
    Cartan(#[from] CartanError),
    #[error(transparent)]
    Stickelberger(#[from] StickelbergerError),
    #[error("circulant matrix is singular")]
    Singular,
    #[error("scale {scale} does not clear the denominator of entry {entry}")]
    ScaleTooSmall { scale: BigInt, entry: BigRational },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl ClassGroupError {
    /// True for errors caused by bad user input rather than an internal bug.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            ClassGroupError::Cartan(
                CartanError::InvalidPrime(_)
                    | CartanError::InvalidExponent
                    | CartanError::ModulusTooLarge { .. }
                    | CartanError::BadEpsilon { .. }
                    | CartanError::NotGenerator { .. }
            )
        )
    }
}

/// Circulant matrix given by its first row; entry `(i, j)` is
/// `first_row[(j - i) mod n]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CirculantMatrix {
    first_row: Vec<BigRational>,
}

impl CirculantMatrix {
    pub fn new(first_row: Vec<BigRational>) -> Self {
        assert!(!first_row.is_empty(), "empty circulant");
        Self { first_row }
    }

    pub fn from_integers(row: &[i64]) -> Self {
        Self::new(
            row.iter()
                .map(|&x| BigRational::from_integer(x.into()))
                .collect(),
        )
    }

    /// `A_θ'`: `a'_j` is the coefficient of `w^(-j)` in `θ'`.
    pub fn from_theta_prime(theta_prime: &crate::stickelberger::GroupRingElement) -> Self {
        let n = theta_prime.len();
        Self::new(
            (0..n)
                .map(|j| theta_prime.coeff((n - j) % n).clone())
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[BigRational] {
        &self.first_row
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigRational {
        let n = self.n();
        &self.first_row[(j % n + n - i % n) % n]
    }

    /// `scale · A` as an integer matrix.
    pub fn scaled_integer_matrix(
        &self,
        scale: &BigInt,
    ) -> Result<Vec<Vec<BigInt>>, ClassGroupError> {
        let s = BigRational::from_integer(scale.clone());
        let row: Vec<BigInt> = self
            .first_row
            .iter()
            .map(|x| {
                let y = x * &s;
                if y.is_integer() {
                    Ok(y.to_integer())
                } else {
                    Err(ClassGroupError::ScaleTooSmall {
                        scale: scale.clone(),
                        entry: x.clone(),
                    })
                }
            })
            .collect::<Result<_, _>>()?;
        let n = self.n();
        Ok((0..n)
            .map(|i| (0..n).map(|j| row[(j + n - i) % n].clone()).collect())
            .collect())
    }

    /// `λ_m = Σ_j a'_j exp(2πi jm/n)` for `m = 0..n`.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let n = self.n();
        let row: Vec<f64> = self.first_row.iter().map(rational_to_f64).collect();
        (0..n)
            .map(|m| {
                row.iter()
                    .enumerate()
                    .fold(Complex64::new(0.0, 0.0), |acc, (j, &a)| {
                        let angle = 2.0 * std::f64::consts::PI * ((j * m) % n) as f64 / n as f64;
                        acc + Complex64::from_polar(a, angle)
                    })
            })
            .collect()
    }
}

fn rational_to_f64(x: &BigRational) -> f64 {
    x.numer().to_f64().unwrap_or(f64::NAN) / x.denom().to_f64().unwrap_or(f64::NAN)
}

/// Exact determinant of `m`, computed as `det(scale · m) / scale^n`.
pub fn det_exact(m: &CirculantMatrix, scale: &BigInt) -> Result<BigRational, ClassGroupError> {
    let int = m.scaled_integer_matrix(scale)?;
    let det = bareiss_det(int);
    let n = u32::try_from(m.n()).expect("matrix dimension fits in u32");
    Ok(BigRational::new(det, scale.pow(n)))
}

/// `12 p^k`, which clears every denominator of `θ'`.
pub fn default_scale(ctx: &CartanContext) -> BigInt {
    BigInt::from(12u64) * BigInt::from(ctx.modulus())
}

/// `(p^2 - 1)/24 · p^(k-1) · e`.
pub fn order_denominator(ctx: &CartanContext, e: &BigInt) -> BigRational {
    let p = BigInt::from(ctx.p());
    BigRational::new(
        (&p * &p - BigInt::one()) * p.pow(ctx.k() - 1) * e,
        BigInt::from(24),
    )
}

/// Intermediate quantities of the determinant route.
#[derive(Debug, Clone)]
pub struct OrderComputation {
    pub matrix: CirculantMatrix,
    pub det: BigRational,
    pub denominator: BigRational,
    pub order: BigInt,
}

pub fn order_computation(ctx: &CartanContext) -> Result<OrderComputation, ClassGroupError> {
    let data = StickelbergerData::compute(ctx)?;
    order_from_data(ctx, &data)
}

fn order_from_data(
    ctx: &CartanContext,
    data: &StickelbergerData,
) -> Result<OrderComputation, ClassGroupError> {
    let matrix = CirculantMatrix::from_theta_prime(&data.theta_prime);
    let det = det_exact(&matrix, &default_scale(ctx))?;
    if det.is_zero() {
        return Err(ClassGroupError::Singular);
    }
    let denominator = order_denominator(ctx, &data.e);
    let q = det.abs() / &denominator;
    if !q.is_integer() {
        return Err(ClassGroupError::Invariant(format!(
            "|det A_θ'| = {} is not divisible by {denominator}",
            det.abs()
        )));
    }
    Ok(OrderComputation {
        matrix,
        det,
        denominator,
        order: q.to_integer(),
    })
}

/// `|det A_θ'| / ((p^2-1)/24 · p^(k-1) · e)`.
pub fn order(ctx: &CartanContext) -> Result<BigInt, ClassGroupError> {
    Ok(order_computation(ctx)?.order)
}

/// Integer matrix whose rows are the generators of `R_d θ` in the basis
/// `{w^i - 1 : i = 1..n-1}` of `R_0`.
pub fn generator_matrix(
    ctx: &CartanContext,
    data: &StickelbergerData,
) -> Result<Vec<Vec<BigInt>>, ClassGroupError> {
    r_d_theta_generators(ctx, &data.theta)
        .iter()
        .enumerate()
        .map(|(r, g)| {
            if !g.degree().is_zero() {
                return Err(ClassGroupError::Invariant(format!(
                    "generator row {r} has nonzero degree"
                )));
            }
            let ints = g.to_integers().ok_or_else(|| {
                ClassGroupError::Invariant(format!("generator row {r} is not integral: {g}"))
            })?;
            Ok(ints[1..].to_vec())
        })
        .collect()
}

fn structure_from_data(
    ctx: &CartanContext,
    data: &StickelbergerData,
) -> Result<Vec<BigInt>, ClassGroupError> {
    let m = generator_matrix(ctx, data)?;
    let diag = snf(&m);
    if diag.len() != ctx.n() - 1 {
        return Err(ClassGroupError::Invariant(format!(
            "R_d θ has rank {} in R_0, expected {}",
            diag.len(),
            ctx.n() - 1
        )));
    }
    Ok(diag.into_iter().filter(|x| !x.is_one()).collect())
}

/// Invariant factors (> 1) of `R_0 / R_d θ`.
pub fn structure(ctx: &CartanContext) -> Result<Vec<BigInt>, ClassGroupError> {
    let data = StickelbergerData::compute(ctx)?;
    structure_from_data(ctx, &data)
}

/// Outcome of the floating-point eigenvalue check.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatCheck {
    pub log_det_exact: f64,
    pub log_det_float: f64,
    pub relative_error: f64,
    pub trivial_eigenvalue: f64,
    pub degree: f64,
    pub tolerance: f64,
}

impl FloatCheck {
    pub fn log_det_ok(&self) -> bool {
        self.relative_error <= self.tolerance
    }

    pub fn trivial_ok(&self) -> bool {
        (self.trivial_eigenvalue - self.degree).abs() <= self.tolerance * self.degree.abs().max(1.0)
    }

    pub fn passed(&self) -> bool {
        self.log_det_ok() && self.trivial_ok()
    }
}

pub fn float_crosscheck_report(
    ctx: &CartanContext,
    tol: f64,
) -> Result<FloatCheck, ClassGroupError> {
    let oc = order_computation(ctx)?;
    let eig = oc.matrix.eigenvalues();
    let log_det_float: f64 = eig.iter().map(|z| z.norm().ln()).sum();
    let log_det_exact = ln_abs(oc.det.numer()) - ln_abs(oc.det.denom());
    let relative_error = if log_det_exact == 0.0 {
        log_det_float.abs()
    } else {
        ((log_det_float - log_det_exact) / log_det_exact).abs()
    };
    let degree = rational_to_f64(&crate::stickelberger::expected_theta_prime_degree(ctx));
    Ok(FloatCheck {
        log_det_exact,
        log_det_float,
        relative_error,
        trivial_eigenvalue: eig[0].re,
        degree,
        tolerance: tol,
    })
}

/// `Σ log|λ_m|` against `log|det A_θ'|`, and `λ_0` against `deg θ'`.
pub fn float_crosscheck(ctx: &CartanContext, tol: f64) -> bool {
    float_crosscheck_report(ctx, tol)
        .map(|r| r.passed())
        .unwrap_or(false)
}

/// Arithmetic in `F_p[sqrt(eps)]`, kept separate from [`CartanContext`] so
/// this route shares no code with the main computation.
#[derive(Clone, Copy)]
struct Fp2 {
    p: u64,
    eps: u64,
}

impl Fp2 {
    fn mul(&self, x: (u64, u64), y: (u64, u64)) -> (u64, u64) {
        let p = self.p;
        let re = (mul_mod(x.0, y.0, p) + mul_mod(self.eps, mul_mod(x.1, y.1, p), p)) % p;
        let im = (mul_mod(x.0, y.1, p) + mul_mod(x.1, y.0, p)) % p;
        (re, im)
    }

    fn pow(&self, mut x: (u64, u64), mut e: u64) -> (u64, u64) {
        let mut acc = (1, 0);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, x);
            }
            x = self.mul(x, x);
            e >>= 1;
        }
        acc
    }

    fn generator(&self) -> (u64, u64) {
        let order = self.p * self.p - 1;
        let primes = prime_divisors_u64(order);
        for a2 in 0..self.p {
            for a1 in 0..self.p {
                if (a1, a2) == (0, 0) {
                    continue;
                }
                if primes
                    .iter()
                    .all(|&q| self.pow((a1, a2), order / q) != (1, 0))
                {
                    return (a1, a2);
                }
            }
        }
        unreachable!("F_(p^2)^* is cyclic")
    }
}

/// `576 |det M| / ((p-1)^2 p (p+1) gcd(12, p+1))` with
/// `M_ij = (p/2)(Σ_(l=0..p) B2(<Tr(v^(i-j+l(p-1)/2))/(2p)>) - (p+1)/6)`,
/// `1 <= i, j <= (p-1)/2`, `v` a generator of `F_(p^2)^*`.
pub fn bernoulli_formula_k1(p: u64) -> Result<BigInt, ClassGroupError> {
    if p < 5 || !crate::arith::is_prime_u64(p) {
        return Err(CartanError::InvalidPrime(p).into());
    }
    let eps = crate::arith::reduce_i64(choose_epsilon(p), p);
    let field = Fp2 { p, eps };
    let v = field.generator();
    let group_order = p * p - 1;
    let mut trace_half = Vec::with_capacity(group_order as usize);
    let mut x = (1, 0);
    for _ in 0..group_order {
        trace_half.push(x.0);
        x = field.mul(x, v);
    }

    let half = (p - 1) / 2;
    let p_big = BigInt::from(p);
    let shift = BigRational::new(BigInt::from(p + 1), BigInt::from(6));
    let factor = BigRational::new(p_big.clone(), BigInt::from(2));
    let entry = |diff: i64| -> BigRational {
        let sum = (0..=p).fold(BigRational::zero(), |acc, l| {
            let e = (diff + (l * half) as i64).rem_euclid(group_order as i64) as usize;
            let t = BigRational::new(BigInt::from(trace_half[e]), p_big.clone());
            acc + bernoulli2(&frac_part(&t))
        });
        (sum - &shift) * &factor
    };
    let m: Vec<Vec<BigRational>> = (1..=half as i64)
        .map(|i| (1..=half as i64).map(|j| entry(i - j)).collect())
        .collect();
    let det = rational_det(m);
    let denom = BigInt::from((p - 1) * (p - 1) * p * (p + 1) * (p + 1).gcd(&12));
    let num = det.abs() * BigRational::from_integer(BigInt::from(576));
    let q = num / BigRational::from_integer(denom);
    if !q.is_integer() {
        return Err(ClassGroupError::Invariant(format!(
            "Bernoulli formula gave non-integer {q}"
        )));
    }
    Ok(q.to_integer())
}

/// Wall-clock time spent in each stage, in milliseconds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timings {
    pub order_ms: u64,
    pub structure_ms: Option<u64>,
    pub factor_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassGroupResult {
    pub p: u64,
    pub k: u32,
    #[serde(with = "crate::output::biguint_string")]
    pub order: BigUint,
    pub factorization: Option<Factorization>,
    #[serde(with = "crate::output::option_biguint_string_vec", default)]
    pub invariant_factors: Option<Vec<BigUint>>,
    pub genus: Option<u64>,
    pub cusps: u64,
    pub epsilon: i64,
    pub w: u64,
    pub timings: Timings,
}

#[derive(Debug, Clone, Default)]
pub struct ComputeOptions {
    pub factor: bool,
    pub structure: bool,
    pub budget: FactorBudget,
}

fn to_biguint(x: &BigInt) -> BigUint {
    debug_assert!(x.sign() != Sign::Minus);
    x.magnitude().clone()
}

fn elapsed_ms(t: Instant) -> u64 {
    u64::try_from(t.elapsed().as_millis()).unwrap_or(u64::MAX)
}

/// Order, and optionally factorization and invariant factors, for one context.
pub fn compute(
    ctx: &CartanContext,
    opts: &ComputeOptions,
) -> Result<ClassGroupResult, ClassGroupError> {
    let t0 = Instant::now();
    let data = StickelbergerData::compute(ctx)?;
    let oc = order_from_data(ctx, &data)?;
    let order = to_biguint(&oc.order);
    let mut timings = Timings {
        order_ms: elapsed_ms(t0),
        ..Timings::default()
    };

    let invariant_factors = if opts.structure {
        let t = Instant::now();
        let factors = structure_from_data(ctx, &data)?;
        let product = factors.iter().fold(BigInt::one(), |a, b| a * b);
        if product != oc.order {
            return Err(ClassGroupError::Invariant(format!(
                "invariant factors multiply to {product}, determinant route gave {}",
                oc.order
            )));
        }
        timings.structure_ms = Some(elapsed_ms(t));
        Some(factors.iter().map(to_biguint).collect())
    } else {
        None
    };

    let factorization = if opts.factor {
        let t = Instant::now();
        let f = factorize(&order, &opts.budget);
        if f.value() != order {
            return Err(ClassGroupError::Invariant(
                "factorization does not reassemble the order".into(),
            ));
        }
        timings.factor_ms = Some(elapsed_ms(t));
        Some(f)
    } else {
        None
    };

    let genus = if ctx.k() == 1 {
        Some(genus_plus(ctx.p())?)
    } else {
        None
    };
    Ok(ClassGroupResult {
        p: ctx.p(),
        k: ctx.k(),
        order,
        factorization,
        invariant_factors,
        genus,
        cusps: cusp_count_plus(ctx.p(), ctx.k()),
        epsilon: ctx.epsilon(),
        w: ctx.w(),
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;

    fn ctx(p: u64, k: u32) -> CartanContext {
        CartanContext::new(p, k).unwrap()
    }

    #[test]
    fn p5_fixture() {
        let c = ctx(5, 1);
        let oc = order_computation(&c).unwrap();
        assert_eq!(oc.matrix, CirculantMatrix::from_integers(&[-3, -2]));
        assert_eq!(oc.det, BigRational::from_integer(5.into()));
        assert_eq!(oc.denominator, BigRational::from_integer(5.into()));
        assert_eq!(oc.order, BigInt::one());
        assert!(structure(&c).unwrap().is_empty());
    }

    #[test]
    fn det_exact_examples() {
        let s = BigInt::from(60);
        let m = CirculantMatrix::from_integers(&[-3, -2]);
        assert_eq!(
            det_exact(&m, &s).unwrap(),
            BigRational::from_integer(5.into())
        );
        let id = CirculantMatrix::from_integers(&[1, 0, 0, 0, 0]);
        assert_eq!(det_exact(&id, &s).unwrap(), BigRational::one());
        let single = CirculantMatrix::new(vec![ratio(-7, 3)]);
        assert_eq!(det_exact(&single, &BigInt::from(3)).unwrap(), ratio(-7, 3));
        assert!(matches!(
            det_exact(&single, &BigInt::from(2)),
            Err(ClassGroupError::ScaleTooSmall { .. })
        ));
    }

    #[test]
    fn circulant_entries() {
        let m = CirculantMatrix::from_integers(&[1, 2, 3]);
        assert_eq!(m.entry(1, 0), &ratio(3, 1));
        assert_eq!(m.entry(2, 0), &ratio(2, 1));
        assert_eq!(m.entry(1, 2), &ratio(2, 1));
    }

    #[test]
    fn small_orders() {
        assert_eq!(order(&ctx(5, 1)).unwrap(), BigInt::one());
        assert_eq!(order(&ctx(7, 1)).unwrap(), BigInt::one());
        assert_eq!(order(&ctx(11, 1)).unwrap(), BigInt::from(11));
        assert_eq!(order(&ctx(13, 1)).unwrap(), BigInt::from(1183));
        assert_eq!(
            order(&ctx(17, 1)).unwrap(),
            BigInt::from(16 * 3 * 17 * 17 * 17)
        );
    }

    #[test]
    fn structures() {
        assert_eq!(structure(&ctx(11, 1)).unwrap(), vec![BigInt::from(11)]);
        let s17: BigInt = structure(&ctx(17, 1)).unwrap().iter().product();
        assert_eq!(s17, BigInt::from(16 * 3 * 17 * 17 * 17));
    }

    #[test]
    fn bernoulli_route() {
        assert_eq!(bernoulli_formula_k1(5).unwrap(), BigInt::one());
        assert_eq!(bernoulli_formula_k1(13).unwrap(), BigInt::from(1183));
        assert_eq!(
            bernoulli_formula_k1(19).unwrap(),
            BigInt::from(10_020_999u64)
        );
        assert_eq!(
            bernoulli_formula_k1(23).unwrap(),
            BigInt::from(23u64.pow(4) * 37181)
        );
        assert!(bernoulli_formula_k1(9).is_err());
    }

    #[test]
    fn float_check_p5() {
        let r = float_crosscheck_report(&ctx(5, 1), 1e-9).unwrap();
        assert!((r.log_det_float - 5f64.ln()).abs() < 1e-12);
        assert!((r.trivial_eigenvalue + 5.0).abs() < 1e-12);
        assert!(r.passed());
        let eig = CirculantMatrix::from_integers(&[-3, -2]).eigenvalues();
        assert!((eig[0].re + 5.0).abs() < 1e-12 && (eig[1].re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn k2_p5_internal_assertions() {
        let c = ctx(5, 2);
        let oc = order_computation(&c).unwrap();
        let factors: BigInt = structure(&c).unwrap().iter().product();
        assert_eq!(factors, oc.order);
    }

    #[test]
    fn compute_populates_fields() {
        let opts = ComputeOptions {
            factor: true,
            structure: true,
            ..ComputeOptions::default()
        };
        let r = compute(&ctx(13, 1), &opts).unwrap();
        assert_eq!(r.order, BigUint::from(1183u32));
        assert_eq!(r.factorization.unwrap().to_string(), "7 * 13^2");
        assert_eq!(
            r.invariant_factors.unwrap().iter().product::<BigUint>(),
            BigUint::from(1183u32)
        );
        assert_eq!(r.genus, Some(3));
        assert_eq!(r.cusps, 6);
    }
}
