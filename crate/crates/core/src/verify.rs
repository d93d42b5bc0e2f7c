//! Verification suites run by `cuspgroup verify`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::{to_integer, BigRational};
use crate::cartan::{order_in_h, CartanContext};
use crate::classgroup::{self, bernoulli_formula_k1, float_crosscheck_report, ClassGroupError};
use crate::siegel;
use crate::stickelberger::{
    a_denominators, bucket_family, check_sign_independence, expected_theta_prime_degree,
    kl_unit_check, r_d_theta_generators, somme_identities_check, theta, StickelbergerData,
};

pub const FLOAT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckLine {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{}] {}", self.suite, self.name)?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub lines: Vec<CheckLine>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    fn push(
        &mut self,
        suite: &'static str,
        name: impl Into<String>,
        passed: bool,
        detail: impl Into<String>,
    ) {
        self.lines.push(CheckLine {
            suite,
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Suites {
    pub structure: bool,
    pub analytic: bool,
    pub eps_independence: bool,
}

/// Sums, degrees, integrality, unit criteria and the quadratic identities.
pub fn algebraic_suite(
    ctx: &CartanContext,
    report: &mut VerifyReport,
) -> Result<(), ClassGroupError> {
    const S: &str = "algebraic";
    let data = StickelbergerData::compute(ctx)?;
    let sum = data.a.iter().fold(BigRational::zero(), |acc, x| acc + x);
    report.push(S, "sum of a_i is 0", sum.is_zero(), format!("sum = {sum}"));

    let expected = expected_theta_prime_degree(ctx);
    let deg = data.theta_prime.degree();
    report.push(
        S,
        "deg θ' = -(p^2-1) p^(3k-2) / 24",
        deg == expected,
        format!("deg θ' = {deg}"),
    );

    let d = BigRational::from_integer(ctx.d().into());
    let integral = data.a.iter().all(|x| (x * &d).is_integer());
    let dens: Vec<String> = a_denominators(&data.a)
        .iter()
        .map(|x| x.to_string())
        .collect();
    report.push(
        S,
        "d·a_i integral",
        integral,
        format!("d = {}, denominators of a_i: {}", ctx.d(), dens.join(",")),
    );

    let gens = r_d_theta_generators(ctx, &data.theta);
    let rows_ok = gens.iter().all(|g| g.is_integral() && g.degree().is_zero());
    report.push(
        S,
        "generators of R_d θ integral of degree 0",
        rows_ok,
        format!("{} rows", gens.len()),
    );

    report.push(
        S,
        "B2 sums independent of the sign of s",
        check_sign_independence(ctx),
        "",
    );

    let n = ctx.n();
    let failed: Vec<u64> = (0..n)
        .map(|i| ctx.w_pow(i))
        .filter(|&h| !somme_identities_check(ctx, h))
        .collect();
    report.push(
        S,
        "quadratic sum identities for every h",
        failed.is_empty(),
        if failed.is_empty() {
            format!("{n} classes h")
        } else {
            format!("fails for h in {failed:?}")
        },
    );

    let d_exp = i64::try_from(ctx.d()).expect("d <= 12");
    let kl_fail: Vec<usize> = (0..n)
        .filter(|&j| !kl_unit_check(ctx.p(), ctx.k(), &bucket_family(ctx, j, d_exp)))
        .collect();
    report.push(
        S,
        "(G+_h)^d satisfies the unit criterion",
        kl_fail.is_empty(),
        if kl_fail.is_empty() {
            String::new()
        } else {
            format!("fails for buckets {kl_fail:?}")
        },
    );

    let oc = classgroup::order_computation(ctx)?;
    report.push(
        S,
        "order divides exactly",
        to_integer(&(oc.det.clone() / &oc.denominator)).is_some(),
        format!("|det A_θ'| = {}, order = {}", oc.det.numer(), oc.order),
    );

    let fc = float_crosscheck_report(ctx, FLOAT_TOL)?;
    report.push(
        S,
        "eigenvalue log-determinant",
        fc.log_det_ok(),
        format!("relative error {:.2e}", fc.relative_error),
    );
    report.push(
        S,
        "trivial eigenvalue equals deg θ'",
        fc.trivial_ok(),
        format!("{} vs {}", fc.trivial_eigenvalue, fc.degree),
    );
    Ok(())
}

/// Smallest generator of `H` in a different class from the default one.
pub fn alternative_generator(ctx: &CartanContext) -> Option<u64> {
    let m = ctx.modulus();
    (ctx.w() + 1..m)
        .find(|&x| x != m - ctx.w() && order_in_h(x, ctx.p(), m) == Some(ctx.n() as u64))
}

/// Order against the invariant-factor product, the Bernoulli determinant
/// (`k = 1`), and an alternative generator.
pub fn structure_suite(
    ctx: &CartanContext,
    report: &mut VerifyReport,
) -> Result<(), ClassGroupError> {
    const S: &str = "structure";
    let order = classgroup::order(ctx)?;
    let factors = classgroup::structure(ctx)?;
    let product = factors.iter().fold(BigInt::one(), |a, b| a * b);
    let shown: Vec<String> = factors.iter().map(|x| x.to_string()).collect();
    report.push(
        S,
        "order equals product of invariant factors",
        product == order,
        format!("order {order}, invariant factors [{}]", shown.join(", ")),
    );
    if ctx.k() == 1 {
        let b = bernoulli_formula_k1(ctx.p())?;
        report.push(
            S,
            "order equals Bernoulli determinant",
            b == order,
            format!("{b}"),
        );
    }
    if let Some(w2) = alternative_generator(ctx) {
        let alt = CartanContext::with_params(ctx.p(), ctx.k(), Some(ctx.epsilon()), Some(w2))?;
        let o2 = classgroup::order(&alt)?;
        report.push(
            S,
            "order independent of the generator",
            o2 == order,
            format!("w = {} and w = {w2}", ctx.w()),
        );
    }
    Ok(())
}

/// The first `count` admissible values of `eps` for `p`, in scan order.
pub fn admissible_epsilons(p: u64, k: u32, count: usize) -> Vec<i64> {
    std::iter::once(-1)
        .chain((3..).step_by(4))
        .filter(|&e| CartanContext::with_params(p, k, Some(e), None).is_ok())
        .take(count)
        .collect()
}

/// θ computed with each `eps` must agree exactly.
pub fn eps_independence(p: u64, k: u32, epsilons: &[i64]) -> Result<CheckLine, ClassGroupError> {
    let mut thetas = Vec::new();
    for &e in epsilons {
        let ctx = CartanContext::with_params(p, k, Some(e), None)?;
        thetas.push(theta(&ctx));
    }
    let same = thetas.windows(2).all(|w| w[0] == w[1]);
    Ok(CheckLine {
        suite: "eps-independence",
        name: "θ independent of eps".into(),
        passed: same && thetas.len() >= 2,
        detail: format!("eps in {epsilons:?}"),
    })
}

pub fn analytic_suite(
    ctx: &CartanContext,
    report: &mut VerifyReport,
) -> Result<(), siegel::SiegelError> {
    for c in siegel::analytic_suite(ctx)? {
        report.push("analytic", c.name, c.passed, c.detail);
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    ClassGroup(#[from] ClassGroupError),
    #[error(transparent)]
    Siegel(#[from] siegel::SiegelError),
}

/// Runs the algebraic suite and whichever of the others are selected.
pub fn run(
    ctx: &CartanContext,
    suites: Suites,
    epsilons: Option<&[i64]>,
) -> Result<VerifyReport, VerifyError> {
    let mut report = VerifyReport::default();
    algebraic_suite(ctx, &mut report)?;
    if suites.structure {
        structure_suite(ctx, &mut report)?;
    }
    if suites.eps_independence {
        let eps = match epsilons {
            Some(e) => e.to_vec(),
            None => admissible_epsilons(ctx.p(), ctx.k(), 2),
        };
        report.lines.push(eps_independence(ctx.p(), ctx.k(), &eps)?);
    }
    if suites.analytic {
        analytic_suite(ctx, &mut report)?;
    }
    Ok(report)
}
