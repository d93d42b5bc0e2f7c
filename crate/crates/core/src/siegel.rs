//! Numerical Siegel functions and Klein forms as truncated q-products, with
//! checks of their transformation laws, the order at infinity, and the sign
//! character of the products `T+_h` under the normalizer.
//!
//! `g_a(τ) = -q^(B2(a1)/2) e^(πi a2(a1-1)) (1 - q_z) Π_(n>=1) (1 - q^n q_z)(1 - q^n/q_z)`
//! with `q_z = e^(2πi(a1 τ + a2))`, and `𝔨_a = g_a / η²` where
//! `η² = 2πi q^(1/12) Π (1 - q^n)²`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::reduce_i64;
use crate::cartan::{CartanContext, CartanElement};

pub const DEFAULT_TERMS: usize = 200;
/// Required bound on `|q|^terms`.
pub const TRUNCATION_BOUND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SiegelError {
    #[error("index ({a1}, {a2}) lies in Z^2")]
    IntegralIndex { a1: Rational64, a2: Rational64 },
    #[error("tau = {tau} is not in the upper half plane")]
    NotInUpperHalfPlane { tau: Complex64 },
    #[error("|q|^{terms} = {bound:e} at tau = {tau} exceeds the truncation bound")]
    NonConvergent {
        tau: Complex64,
        terms: usize,
        bound: f64,
    },
    #[error("matrix {0:?} does not reduce to an element of the Cartan normalizer")]
    NotInNormalizer([[i64; 2]; 2]),
    #[error("no SL2(Z) lift of {target:?} mod {p}")]
    LiftFailed { target: [[u64; 2]; 2], p: u64 },
    #[error("the sign check needs k = 1")]
    UnsupportedLevel,
}

/// Evaluation point and truncation for one q-product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSeriesParams {
    pub tau: Complex64,
    pub terms: usize,
    pub a: (Rational64, Rational64),
}

impl QSeriesParams {
    pub fn new(a: (Rational64, Rational64), tau: Complex64) -> Self {
        Self {
            tau,
            terms: DEFAULT_TERMS,
            a,
        }
    }

    pub fn with_terms(mut self, terms: usize) -> Self {
        self.terms = terms;
        self
    }

    fn validate(&self) -> Result<(), SiegelError> {
        if self.a.0.is_integer() && self.a.1.is_integer() {
            return Err(SiegelError::IntegralIndex {
                a1: self.a.0,
                a2: self.a.1,
            });
        }
        validate_tau(self.tau, self.terms)
    }
}

fn validate_tau(tau: Complex64, terms: usize) -> Result<(), SiegelError> {
    if tau.im <= 0.0 {
        return Err(SiegelError::NotInUpperHalfPlane { tau });
    }
    let bound = (-2.0 * PI * tau.im * terms as f64).exp();
    if bound >= TRUNCATION_BOUND {
        return Err(SiegelError::NonConvergent { tau, terms, bound });
    }
    Ok(())
}

fn to_f64(x: Rational64) -> f64 {
    x.to_f64().expect("finite rational")
}

fn e(x: Complex64) -> Complex64 {
    (Complex64::new(0.0, 2.0 * PI) * x).exp()
}

/// `t^2 - t + 1/6` in floating point.
fn b2(t: f64) -> f64 {
    t * t - t + 1.0 / 6.0
}

/// The q-product of `g_a` for real `a`, without any reduction of `a`.
fn siegel_raw(a1: f64, a2: f64, tau: Complex64, terms: usize) -> Complex64 {
    let q = e(tau);
    let qz = e(tau * a1 + a2);
    let qz_inv = qz.inv();
    let lead = -e(tau * (b2(a1) / 2.0)) * Complex64::from_polar(1.0, PI * a2 * (a1 - 1.0));
    let mut prod = Complex64::new(1.0, 0.0) - qz;
    let mut qn = Complex64::new(1.0, 0.0);
    for _ in 0..terms {
        qn *= q;
        prod *= (1.0 - qn * qz) * (1.0 - qn * qz_inv);
    }
    lead * prod
}

/// `η(τ)² = 2πi q^(1/12) Π (1 - q^n)²`.
pub fn eta_squared(tau: Complex64, terms: usize) -> Complex64 {
    let q = e(tau);
    let mut prod = Complex64::new(0.0, 2.0 * PI) * e(tau / 12.0);
    let mut qn = Complex64::new(1.0, 0.0);
    for _ in 0..terms {
        qn *= q;
        let f = 1.0 - qn;
        prod *= f * f;
    }
    prod
}

fn klein_raw(a1: f64, a2: f64, tau: Complex64, terms: usize) -> Complex64 {
    siegel_raw(a1, a2, tau, terms) / eta_squared(tau, terms)
}

/// `ε(a, b) = (-1)^(b1 b2 + b1 + b2) e^(-πi (b1 a2 - b2 a1))` for `b ∈ Z^2`.
pub fn klein_translation_factor(a: (f64, f64), b: (i64, i64)) -> Complex64 {
    let parity = (b.0 * b.1 + b.0 + b.1).rem_euclid(2);
    let sign = if parity == 0 { 1.0 } else { -1.0 };
    Complex64::from_polar(sign, -PI * (b.0 as f64 * a.1 - b.1 as f64 * a.0))
}

/// `g_a(τ)` with `a` first reduced to `[0, 1)^2`. The value is therefore
/// determined only up to a root of unity relative to the unreduced `a`.
pub fn siegel_eval(params: &QSeriesParams) -> Result<Complex64, SiegelError> {
    params.validate()?;
    let (a1, a2) = reduce(params.a);
    Ok(siegel_raw(to_f64(a1), to_f64(a2), params.tau, params.terms))
}

/// `𝔨_a(τ)` with `a` first reduced to `[0, 1)^2`.
pub fn klein_eval(params: &QSeriesParams) -> Result<Complex64, SiegelError> {
    params.validate()?;
    let (a1, a2) = reduce(params.a);
    Ok(klein_raw(to_f64(a1), to_f64(a2), params.tau, params.terms))
}

/// `𝔨_a(τ)` for arbitrary `a`: the reduced value times the exact translation
/// factor, so `𝔨_(a+b) = ε(a, b) 𝔨_a` holds by construction.
pub fn klein_eval_exact(params: &QSeriesParams) -> Result<Complex64, SiegelError> {
    params.validate()?;
    let (r1, r2) = reduce(params.a);
    let m1 = (params.a.0 - r1).to_integer();
    let m2 = (params.a.1 - r2).to_integer();
    let (f1, f2) = (to_f64(r1), to_f64(r2));
    Ok(klein_translation_factor((f1, f2), (m1, m2)) * klein_raw(f1, f2, params.tau, params.terms))
}

/// `𝔨_a(τ)` straight from the q-product with no reduction of `a`. Only
/// sensible for small `|a1|`.
pub fn klein_eval_unreduced(params: &QSeriesParams) -> Result<Complex64, SiegelError> {
    params.validate()?;
    Ok(klein_raw(
        to_f64(params.a.0),
        to_f64(params.a.1),
        params.tau,
        params.terms,
    ))
}

fn frac(x: Rational64) -> Rational64 {
    x - x.floor()
}

fn reduce(a: (Rational64, Rational64)) -> (Rational64, Rational64) {
    (frac(a.0), frac(a.1))
}

/// Möbius action of an integer matrix.
pub fn mobius(g: [[i64; 2]; 2], tau: Complex64) -> Complex64 {
    (tau * g[0][0] as f64 + g[0][1] as f64) / (tau * g[1][0] as f64 + g[1][1] as f64)
}

/// Row-vector action `a γ`.
pub fn act_on_index(a: (Rational64, Rational64), g: [[i64; 2]; 2]) -> (Rational64, Rational64) {
    (a.0 * g[0][0] + a.1 * g[1][0], a.0 * g[0][1] + a.1 * g[1][1])
}

fn relative_gap(x: Complex64, y: Complex64) -> f64 {
    (x - y).norm() / x.norm().max(y.norm()).max(f64::MIN_POSITIVE)
}

/// `|𝔨_(-a) + 𝔨_a|` relative, from the raw q-product.
pub fn klein_odd_gap(a: (Rational64, Rational64), tau: Complex64) -> Result<f64, SiegelError> {
    let plus = klein_eval_unreduced(&QSeriesParams::new(a, tau))?;
    let minus = klein_eval_unreduced(&QSeriesParams::new((-a.0, -a.1), tau))?;
    Ok(relative_gap(minus, -plus))
}

/// `𝔨_(a+b)` from the raw q-product against `ε(a, b) 𝔨_a`.
pub fn klein_translation_gap(
    a: (Rational64, Rational64),
    b: (i64, i64),
    tau: Complex64,
) -> Result<f64, SiegelError> {
    let shifted = klein_eval_unreduced(&QSeriesParams::new((a.0 + b.0, a.1 + b.1), tau))?;
    let base = klein_eval_unreduced(&QSeriesParams::new(a, tau))?;
    let f = klein_translation_factor((to_f64(a.0), to_f64(a.1)), b);
    Ok(relative_gap(shifted, f * base))
}

/// `| |𝔨_a(γτ)(rτ+s)| - |𝔨_(aγ)(τ)| |` relative.
pub fn klein_modular_gap(
    a: (Rational64, Rational64),
    g: [[i64; 2]; 2],
    tau: Complex64,
) -> Result<f64, SiegelError> {
    let lhs = klein_eval(&QSeriesParams::new(a, mobius(g, tau)))?;
    let j = tau * g[1][0] as f64 + g[1][1] as f64;
    let rhs = klein_eval(&QSeriesParams::new(act_on_index(a, g), tau))?;
    let (x, y) = ((lhs * j).norm(), rhs.norm());
    Ok((x - y).abs() / x.max(y))
}

/// Least-squares slope of `log|g_(a1, 0)(iy)|` in `y`, divided by `-2π`.
/// Tends to `B2(<a1>)/2`.
pub fn order_at_infinity_slope(
    a1: Rational64,
    ys: &[f64],
    terms: usize,
) -> Result<f64, SiegelError> {
    let mut pts = Vec::with_capacity(ys.len());
    for &y in ys {
        let v = siegel_eval(
            &QSeriesParams::new((a1, Rational64::zero()), Complex64::new(0.0, y)).with_terms(terms),
        )?;
        pts.push((y, v.norm().ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx / (-2.0 * PI))
}

/// A matrix in `SL2(Z)` congruent to `target` mod `p`, with `c ≠ 0`.
pub fn lift_to_sl2(target: [[u64; 2]; 2], p: u64) -> Result<[[i64; 2]; 2], SiegelError> {
    let fail = SiegelError::LiftFailed { target, p };
    let pi = p as i64;
    let [[a, b], [c, d]] = target.map(|r| r.map(|x| (x % p) as i64));
    if (a * d - b * c).rem_euclid(pi) != 1 {
        return Err(fail);
    }
    let c1 = match c {
        0 => pi,
        c if c > pi / 2 => c - pi,
        c => c,
    };
    let mut d1 = d;
    while d1.gcd(&c1) != 1 {
        d1 += pi;
    }
    // x d1 - y c1 = 1
    let eg = d1.extended_gcd(&c1);
    let sign = eg.gcd.signum();
    let (x, y) = (eg.x * sign, -eg.y * sign);
    for t in 0..pi {
        let (xx, yy) = (x + t * c1, y + t * d1);
        if (xx - a).rem_euclid(pi) == 0 && (yy - b).rem_euclid(pi) == 0 {
            return Ok([[xx, yy], [c1, d1]]);
        }
    }
    Err(fail)
}

/// `M_s = (a b; eps b a)`, the matrix of multiplication by `s = a + b sqrt(eps)`
/// acting on row vectors.
pub fn cartan_matrix(ctx: &CartanContext, s: CartanElement) -> [[u64; 2]; 2] {
    let m = ctx.modulus();
    let eps = reduce_i64(ctx.epsilon(), m);
    [[s.a1, s.a2], [(eps * s.a2) % m, s.a1]]
}

/// `M_s C = (a -b; eps b -a)`: multiplication by `s` followed by conjugation.
pub fn normalizer_matrix(ctx: &CartanContext, s: CartanElement) -> [[u64; 2]; 2] {
    let m = ctx.modulus();
    let eps = reduce_i64(ctx.epsilon(), m);
    [[s.a1, (m - s.a2) % m], [(eps * s.a2) % m, (m - s.a1) % m]]
}

/// Sign predicted for `T+_h(γτ) / (T+_h(τ) (cτ+d)^(-(p+1)))`: `+1` on the
/// Cartan, and on the other coset `+1` for `p ≡ 3 mod 4`, `-1` for `p ≡ 1 mod 4`.
pub fn predicted_sign(ctx: &CartanContext, g: [[i64; 2]; 2]) -> Result<i8, SiegelError> {
    let p = ctx.p() as i64;
    let eps = ctx.epsilon();
    let r = |x: i64| x.rem_euclid(p);
    let [[a, b], [c, d]] = g;
    if r(d - a) == 0 && r(c - eps * b) == 0 {
        Ok(1)
    } else if r(d + a) == 0 && r(c + eps * b) == 0 {
        Ok(if p % 4 == 3 { 1 } else { -1 })
    } else {
        Err(SiegelError::NotInNormalizer(g))
    }
}

/// `T+_h(τ) = Π 𝔨_(t/p)(τ)` over the canonical classes `t` of bucket `h`.
pub fn t_plus(
    ctx: &CartanContext,
    h: usize,
    tau: Complex64,
    terms: usize,
) -> Result<Complex64, SiegelError> {
    let m = ctx.modulus() as i64;
    let bucket = &ctx.norm_class_partition()[h % ctx.n()];
    let mut prod = Complex64::new(1.0, 0.0);
    for c in bucket {
        let a = (
            Rational64::new(c.a1 as i64, m),
            Rational64::new(c.a2 as i64, m),
        );
        prod *= klein_eval(&QSeriesParams::new(a, tau).with_terms(terms))?;
    }
    Ok(prod)
}

/// Outcome of one sign check.
#[derive(Debug, Clone, PartialEq)]
pub struct ThWeightReport {
    pub gamma: [[i64; 2]; 2],
    pub tau: Complex64,
    pub ratio: Complex64,
    pub expected: i8,
    pub tolerance: f64,
}

impl ThWeightReport {
    /// `+1` or `-1` when the ratio is real of modulus one within tolerance.
    pub fn observed(&self) -> Option<i8> {
        [1i8, -1]
            .into_iter()
            .find(|&s| (self.ratio - f64::from(s)).norm() <= self.tolerance)
    }

    pub fn passed(&self) -> bool {
        self.observed() == Some(self.expected)
    }
}

/// Evaluates `T+_h(γτ) (cτ+d)^(p+1) / T+_h(τ)` and compares with the sign
/// predicted for `γ`.
pub fn check_th_weight(
    ctx: &CartanContext,
    h: usize,
    gamma: [[i64; 2]; 2],
    tau: Complex64,
    tol: f64,
) -> Result<ThWeightReport, SiegelError> {
    if ctx.k() != 1 {
        return Err(SiegelError::UnsupportedLevel);
    }
    let expected = predicted_sign(ctx, gamma)?;
    let terms = terms_for(tau.im.min(mobius(gamma, tau).im));
    let j = tau * gamma[1][0] as f64 + gamma[1][1] as f64;
    let weight = (ctx.p() + 1) as i32;
    let ratio =
        t_plus(ctx, h, mobius(gamma, tau), terms)? * j.powi(weight) / t_plus(ctx, h, tau, terms)?;
    Ok(ThWeightReport {
        gamma,
        tau,
        ratio,
        expected,
        tolerance: tol,
    })
}

/// Enough terms for `|q|^terms < 1e-16` at height `y`.
pub fn terms_for(y: f64) -> usize {
    ((16.0 * 10f64.ln()) / (2.0 * PI * y))
        .ceil()
        .max(DEFAULT_TERMS as f64) as usize
}

/// Point at which `γ` has `|cτ + d| = 1` and `Im τ = Im γτ = 1/|c|`.
pub fn balanced_point(gamma: [[i64; 2]; 2]) -> Complex64 {
    let c = gamma[1][0] as f64;
    let d = gamma[1][1] as f64;
    Complex64::new(-d / c, 1.0 / c.abs())
}

/// Every `s` with `|s| = ±1` as a lifted matrix: `M_s` for norm `1`,
/// `M_s C` for norm `-1`.
pub fn normalizer_lifts(ctx: &CartanContext) -> Result<Vec<[[i64; 2]; 2]>, SiegelError> {
    let p = ctx.p();
    let mut out = Vec::new();
    for a1 in 0..p {
        for a2 in 0..p {
            let s = ctx.element(a1 as i64, a2 as i64);
            match ctx.norm(s) {
                1 => out.push(lift_to_sl2(cartan_matrix(ctx, s), p)?),
                n if n == p - 1 => out.push(lift_to_sl2(normalizer_matrix(ctx, s), p)?),
                _ => {}
            }
        }
    }
    Ok(out)
}

/// Result line of the analytic suite.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub const KLEIN_TOL: f64 = 1e-8;
pub const SLOPE_REL_TOL: f64 = 0.01;
pub const SIGN_TOL: f64 = 1e-6;
pub const SLOPE_HEIGHTS: [f64; 3] = [20.0, 30.0, 40.0];

pub fn test_taus() -> [Complex64; 3] {
    [
        Complex64::new(0.0, 1.0),
        Complex64::new(0.3, 1.0),
        Complex64::new(0.0, 2.0),
    ]
}

pub const T_MATRIX: [[i64; 2]; 2] = [[1, 1], [0, 1]];
pub const S_MATRIX: [[i64; 2]; 2] = [[0, -1], [1, 0]];

/// `(i/5, j/5)` for `0 <= i, j < 5`, excluding `(0, 0)`.
pub fn fifth_grid() -> Vec<(Rational64, Rational64)> {
    let mut v = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            if (i, j) != (0, 0) {
                v.push((Rational64::new(i, 5), Rational64::new(j, 5)));
            }
        }
    }
    v
}

fn max_over<F>(mut f: F) -> Result<f64, SiegelError>
where
    F: FnMut(&mut dyn FnMut(f64)) -> Result<(), SiegelError>,
{
    let mut worst = 0f64;
    f(&mut |x| worst = worst.max(x))?;
    Ok(worst)
}

/// Klein-form laws on the grid, the slope fit, truncation stability and,
/// for `k = 1` and `p ∈ {5, 7}`, the sign character of `T+_h`.
pub fn analytic_suite(ctx: &CartanContext) -> Result<Vec<AnalyticCheck>, SiegelError> {
    let mut out = Vec::new();
    let grid = fifth_grid();
    let taus = test_taus();

    let odd = max_over(|push| {
        for &a in &grid {
            for &tau in &taus {
                push(klein_odd_gap(a, tau)?);
            }
        }
        Ok(())
    })?;
    out.push(AnalyticCheck {
        name: "klein odd symmetry".into(),
        passed: odd <= KLEIN_TOL,
        detail: format!("max relative gap {odd:.2e}"),
    });

    let shifts = [(1, 0), (0, 1), (1, 1), (-1, 2)];
    let (trans, trans_mod) = {
        let mut worst = 0f64;
        let mut worst_mod = 0f64;
        for &a in &grid {
            for &tau in &taus {
                for &b in &shifts {
                    worst = worst.max(klein_translation_gap(a, b, tau)?);
                    let x = klein_eval_unreduced(&QSeriesParams::new((a.0 + b.0, a.1 + b.1), tau))?
                        .norm();
                    let y = klein_eval_unreduced(&QSeriesParams::new(a, tau))?.norm();
                    worst_mod = worst_mod.max((x - y).abs() / x.max(y));
                }
            }
        }
        (worst, worst_mod)
    };
    out.push(AnalyticCheck {
        name: "klein translation".into(),
        passed: trans <= KLEIN_TOL && trans_mod <= KLEIN_TOL,
        detail: format!("max relative gap {trans:.2e} (pointwise), {trans_mod:.2e} (modulus)"),
    });

    let modular = max_over(|push| {
        for &a in &grid {
            for &tau in &taus {
                for g in [T_MATRIX, S_MATRIX] {
                    push(klein_modular_gap(a, g, tau)?);
                }
            }
        }
        Ok(())
    })?;
    out.push(AnalyticCheck {
        name: "klein modular law".into(),
        passed: modular <= KLEIN_TOL,
        detail: format!("max relative gap {modular:.2e}"),
    });

    let mut slope_worst = 0f64;
    for den in [5i64, 7] {
        for num in 1..den {
            let a1 = Rational64::new(num, den);
            let est = order_at_infinity_slope(a1, &SLOPE_HEIGHTS, DEFAULT_TERMS)?;
            let exact = b2(to_f64(a1)) / 2.0;
            slope_worst = slope_worst.max(((est - exact) / exact).abs());
        }
    }
    out.push(AnalyticCheck {
        name: "order at infinity".into(),
        passed: slope_worst <= SLOPE_REL_TOL,
        detail: format!("max relative slope error {slope_worst:.2e}"),
    });

    let trunc = max_over(|push| {
        for &a in &grid {
            let tau = Complex64::new(0.0, 1.0);
            let x = siegel_eval(&QSeriesParams::new(a, tau).with_terms(DEFAULT_TERMS))?;
            let y = siegel_eval(&QSeriesParams::new(a, tau).with_terms(2 * DEFAULT_TERMS))?;
            push((x - y).norm());
        }
        Ok(())
    })?;
    out.push(AnalyticCheck {
        name: "truncation stability".into(),
        passed: trunc <= 1e-10,
        detail: format!("max change on doubling terms {trunc:.2e}"),
    });

    if ctx.k() == 1 && matches!(ctx.p(), 5 | 7) {
        let mut failures = Vec::new();
        let mut seen = [0usize; 2];
        for g in normalizer_lifts(ctx)? {
            for h in 0..ctx.n() {
                let r = check_th_weight(ctx, h, g, balanced_point(g), SIGN_TOL)?;
                seen[usize::from(r.expected < 0)] += 1;
                if !r.passed() {
                    failures.push(format!("{g:?} h={h}: ratio {}", r.ratio));
                }
            }
        }
        out.push(AnalyticCheck {
            name: "T+_h sign character".into(),
            passed: failures.is_empty(),
            detail: if failures.is_empty() {
                format!("{} checks with sign +1, {} with sign -1", seen[0], seen[1])
            } else {
                failures.join("; ")
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn reflection_moduli() {
        let tau = Complex64::new(0.0, 1.0);
        let x = siegel_eval(&QSeriesParams::new((r(1, 5), r(0, 1)), tau)).unwrap();
        let y = siegel_eval(&QSeriesParams::new((r(4, 5), r(0, 1)), tau)).unwrap();
        assert!((x.norm() - y.norm()).abs() < 1e-14 * x.norm());
    }

    #[test]
    fn truncation_doubling() {
        let tau = Complex64::new(0.0, 1.0);
        let p = QSeriesParams::new((r(1, 5), r(0, 1)), tau);
        let x = siegel_eval(&p).unwrap();
        let y = siegel_eval(&p.with_terms(400)).unwrap();
        assert!((x - y).norm() < 1e-12);
    }

    #[test]
    fn slope_recovers_b2() {
        let est = order_at_infinity_slope(r(1, 5), &SLOPE_HEIGHTS, DEFAULT_TERMS).unwrap();
        let exact = b2(0.2) / 2.0;
        assert!(((est - exact) / exact).abs() < 0.01);
    }

    #[test]
    fn errors() {
        let tau = Complex64::new(0.0, 1.0);
        assert!(matches!(
            siegel_eval(&QSeriesParams::new((r(1, 1), r(0, 1)), tau)),
            Err(SiegelError::IntegralIndex { .. })
        ));
        assert!(matches!(
            siegel_eval(&QSeriesParams::new(
                (r(1, 2), r(0, 1)),
                Complex64::new(0.0, -1.0)
            )),
            Err(SiegelError::NotInUpperHalfPlane { .. })
        ));
        assert!(matches!(
            siegel_eval(
                &QSeriesParams::new((r(1, 2), r(0, 1)), Complex64::new(0.0, 0.01)).with_terms(10)
            ),
            Err(SiegelError::NonConvergent { .. })
        ));
    }

    #[test]
    fn klein_laws_spot() {
        let tau = Complex64::new(0.3, 1.0);
        let a = (r(1, 5), r(0, 1));
        assert!(klein_odd_gap(a, tau).unwrap() < 1e-10);
        assert!(klein_translation_gap(a, (1, 2), tau).unwrap() < 1e-10);
        assert!(klein_modular_gap(a, T_MATRIX, tau).unwrap() < 1e-8);
        assert!(klein_modular_gap(a, S_MATRIX, tau).unwrap() < 1e-8);
    }

    #[test]
    fn exact_eval_matches_raw_for_small_shifts() {
        let tau = Complex64::new(0.1, 1.2);
        let a = (r(7, 5), r(-3, 5));
        let x = klein_eval_exact(&QSeriesParams::new(a, tau)).unwrap();
        let y = klein_eval_unreduced(&QSeriesParams::new(a, tau)).unwrap();
        assert!(relative_gap(x, y) < 1e-10);
    }

    #[test]
    fn lifts_are_in_sl2_and_congruent() {
        let p = 7;
        for target in [[[3, 0], [0, 5]], [[0, 1], [6, 0]], [[2, 3], [1, 2]]] {
            let g = lift_to_sl2(target, p).unwrap();
            assert_eq!(g[0][0] * g[1][1] - g[0][1] * g[1][0], 1);
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(g[i][j].rem_euclid(p as i64) as u64, target[i][j]);
                }
            }
        }
        assert!(lift_to_sl2([[1, 1], [1, 1]], 7).is_err());
    }

    #[test]
    fn sign_character() {
        let c5 = CartanContext::new(5, 1).unwrap();
        // norm 1: s = 2 + sqrt(3), 4 - 3 = 1
        let g = lift_to_sl2(cartan_matrix(&c5, c5.element(2, 1)), 5).unwrap();
        let rep = check_th_weight(&c5, 0, g, balanced_point(g), SIGN_TOL).unwrap();
        assert_eq!(rep.observed(), Some(1));
        // norm -1
        let s = (0..5)
            .flat_map(|a| (0..5).map(move |b| (a, b)))
            .map(|(a, b)| c5.element(a, b))
            .find(|&s| c5.norm(s) == 4)
            .unwrap();
        let g = lift_to_sl2(normalizer_matrix(&c5, s), 5).unwrap();
        let rep = check_th_weight(&c5, 1, g, balanced_point(g), SIGN_TOL).unwrap();
        assert_eq!(rep.expected, -1);
        assert_eq!(rep.observed(), Some(-1));

        let c7 = CartanContext::new(7, 1).unwrap();
        for g in normalizer_lifts(&c7).unwrap() {
            let rep = check_th_weight(&c7, 2, g, balanced_point(g), SIGN_TOL).unwrap();
            assert_eq!(rep.observed(), Some(1), "{g:?}");
        }
    }

    #[test]
    fn outside_normalizer_is_rejected() {
        let c5 = CartanContext::new(5, 1).unwrap();
        assert!(matches!(
            predicted_sign(&c5, T_MATRIX),
            Err(SiegelError::NotInNormalizer(_))
        ));
    }

    #[test]
    fn suite_passes_p5() {
        let c5 = CartanContext::new(5, 1).unwrap();
        for check in analytic_suite(&c5).unwrap() {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }
}
