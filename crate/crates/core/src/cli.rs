//! Command-line interface.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 internal invariant violation.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use rayon::prelude::*;

use crate::arith::{is_prime_u64, FactorBudget, DEFAULT_RHO_ITERATIONS};
use crate::cartan::{cusp_count_plus, genus_plus, CartanContext, CartanError};
use crate::classgroup::{compute, ClassGroupError, ClassGroupResult, ComputeOptions};
use crate::crosscheck::{self, gcd_harness, matches_reference, primes_present, RecordFormat};
use crate::output::OutputRecord;
use crate::verify::{self, Suites};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

pub const DEFAULT_SIZE_GUARD: u64 = 10_000;
pub const DEFAULT_PMAX_GUARD: u64 = 101;
pub const RHO_BUDGET_ENV: &str = "CUSPGROUP_RHO_BUDGET";

#[derive(Debug, Parser)]
#[command(
    name = "cuspgroup",
    version,
    about = "Cuspidal divisor class groups of X+ns(p^k)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Level {
    /// Prime p >= 5.
    #[arg(short = 'p', long)]
    pub p: u64,
    /// Exponent k >= 1.
    #[arg(short = 'k', long, default_value_t = 1)]
    pub k: u32,
    /// Allow p^k above the size guard.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args, Clone)]
pub struct FactorArgs {
    /// Pollard rho iterations per composite before giving up.
    #[arg(long, env = RHO_BUDGET_ENV, default_value_t = DEFAULT_RHO_ITERATIONS)]
    pub rho_budget: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Order of the cuspidal divisor class group.
    Order {
        #[command(flatten)]
        level: Level,
        /// Also print the prime factorization.
        #[arg(long)]
        factor: bool,
        /// Also print the invariant factors.
        #[arg(long)]
        structure: bool,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        factor_args: FactorArgs,
    },
    /// Orders and factorizations for all primes 5 <= p <= pmax (k = 1).
    Table {
        #[arg(long, default_value_t = DEFAULT_PMAX_GUARD)]
        pmax: u64,
        #[arg(long)]
        json: bool,
        /// Compute different p concurrently.
        #[arg(long)]
        parallel: bool,
        /// Allow pmax above the guard.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        factor_args: FactorArgs,
    },
    /// Run verification suites; the algebraic suite always runs.
    Verify {
        #[command(flatten)]
        level: Level,
        #[arg(long)]
        structure: bool,
        #[arg(long)]
        analytic: bool,
        #[arg(long)]
        eps_independence: bool,
        /// Values of eps to compare (default: the first two admissible ones).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        eps: Option<Vec<i64>>,
        /// All suites.
        #[arg(long)]
        all: bool,
    },
    /// Compare the class-group order with point counts of Jacobians.
    Crosscheck {
        /// CSV file with header `p,q,label,value` (default: bundled data).
        path: Option<PathBuf>,
        #[arg(short = 'p', long)]
        p: Option<u64>,
    },
    /// Genus and number of cusps of X+ns(p).
    Genus {
        #[arg(short = 'p', long)]
        p: u64,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Verify,
    Internal(String),
}

impl From<ClassGroupError> for Failure {
    fn from(e: ClassGroupError) -> Self {
        if e.is_input_error() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

impl From<CartanError> for Failure {
    fn from(e: CartanError) -> Self {
        ClassGroupError::from(e).into()
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(format!("write failed: {e}"))
    }
}

fn context(level: &Level) -> Result<CartanContext, Failure> {
    if level.p < 5 || !is_prime_u64(level.p) {
        return Err(CartanError::InvalidPrime(level.p).into());
    }
    if level.k == 0 {
        return Err(CartanError::InvalidExponent.into());
    }
    let size = level.p.checked_pow(level.k);
    if !level.force && size.is_none_or(|s| s > DEFAULT_SIZE_GUARD) {
        return Err(Failure::Usage(format!(
            "p^k = {}^{} exceeds the size guard {DEFAULT_SIZE_GUARD}; pass --force to override",
            level.p, level.k
        )));
    }
    Ok(CartanContext::new(level.p, level.k)?)
}

fn budget(args: &FactorArgs) -> FactorBudget {
    FactorBudget {
        rho_iterations: args.rho_budget,
        ..FactorBudget::default()
    }
}

fn run_one(ctx: &CartanContext, opts: &ComputeOptions) -> Result<OutputRecord, ClassGroupError> {
    let t = Instant::now();
    let r = compute(ctx, opts)?;
    Ok(OutputRecord::new(
        r,
        u64::try_from(t.elapsed().as_millis()).unwrap_or(u64::MAX),
    ))
}

fn factor_string(r: &ClassGroupResult) -> String {
    r.factorization
        .as_ref()
        .map(|f| f.to_string())
        .unwrap_or_default()
}

fn join(xs: &[BigUint]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn cmd_order(
    out: &mut dyn Write,
    level: &Level,
    factor: bool,
    structure: bool,
    json: bool,
    factor_args: &FactorArgs,
) -> Result<(), Failure> {
    let ctx = context(level)?;
    let opts = ComputeOptions {
        factor,
        structure,
        budget: budget(factor_args),
    };
    let rec = run_one(&ctx, &opts)?;
    if json {
        writeln!(out, "{}", rec.to_json())?;
        return Ok(());
    }
    let r = &rec.result;
    if factor {
        writeln!(out, "{} = {}", r.order, factor_string(r))?;
    } else {
        writeln!(out, "{}", r.order)?;
    }
    if let Some(inv) = &r.invariant_factors {
        writeln!(out, "invariant factors: [{}]", join(inv))?;
    }
    Ok(())
}

/// Primes `5 <= p <= pmax`.
pub fn table_primes(pmax: u64) -> Vec<u64> {
    (5..=pmax).filter(|&p| is_prime_u64(p)).collect()
}

/// One table line: `p<TAB>order<TAB>factorization`.
pub fn table_line(r: &ClassGroupResult) -> String {
    format!("{}\t{}\t{}", r.p, r.order, factor_string(r))
}

fn cmd_table(
    out: &mut dyn Write,
    pmax: u64,
    json: bool,
    parallel: bool,
    force: bool,
    factor_args: &FactorArgs,
) -> Result<(), Failure> {
    if pmax > DEFAULT_PMAX_GUARD && !force {
        return Err(Failure::Usage(format!(
            "pmax = {pmax} exceeds the guard {DEFAULT_PMAX_GUARD}; pass --force to override"
        )));
    }
    let opts = ComputeOptions {
        factor: true,
        structure: false,
        budget: budget(factor_args),
    };
    let primes = table_primes(pmax);
    let work = |&p: &u64| -> Result<OutputRecord, ClassGroupError> {
        let ctx = CartanContext::new(p, 1)?;
        run_one(&ctx, &opts)
    };
    let results: Vec<Result<OutputRecord, ClassGroupError>> = if parallel {
        primes.par_iter().map(work).collect()
    } else {
        primes.iter().map(work).collect()
    };
    for r in results {
        let rec = r?;
        if json {
            writeln!(out, "{}", rec.to_json())?;
        } else {
            writeln!(out, "{}", table_line(&rec.result))?;
        }
    }
    Ok(())
}

fn cmd_verify(
    out: &mut dyn Write,
    level: &Level,
    suites: Suites,
    eps: Option<&[i64]>,
) -> Result<(), Failure> {
    let ctx = context(level)?;
    if let Some(e) = eps {
        for &x in e {
            CartanContext::with_params(ctx.p(), ctx.k(), Some(x), None)?;
        }
    }
    let report = verify::run(&ctx, suites, eps).map_err(|e| match e {
        verify::VerifyError::ClassGroup(c) => Failure::from(c),
        verify::VerifyError::Siegel(s) => Failure::Internal(s.to_string()),
    })?;
    for line in &report.lines {
        writeln!(out, "{line}")?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn cmd_crosscheck(
    out: &mut dyn Write,
    err: &mut dyn Write,
    path: Option<&PathBuf>,
    p: Option<u64>,
) -> Result<(), Failure> {
    let bundled = path.is_none();
    let loaded = match path {
        Some(path) => crosscheck::load_records(path, RecordFormat::Csv)
            .map_err(|e| Failure::Usage(e.to_string()))?,
        None => crosscheck::load_bundled(),
    };
    for r in &loaded.rejected {
        writeln!(err, "rejected {r}")?;
    }
    let primes = match p {
        Some(p) => vec![p],
        None => primes_present(&loaded.records),
    };
    let mut all_ok = true;
    for p in primes {
        let ctx = context(&Level {
            p,
            k: 1,
            force: false,
        })?;
        let order = crate::classgroup::order(&ctx)?;
        let order = order.magnitude().clone();
        let report =
            gcd_harness(p, &loaded.records, &order).map_err(|e| Failure::Usage(e.to_string()))?;
        writeln!(out, "{report}")?;
        let ok = if bundled {
            matches_reference(&report)
        } else {
            report.all_divisible()
        };
        if bundled {
            writeln!(
                out,
                "  {}",
                if ok {
                    "identities hold"
                } else {
                    "identities FAIL"
                }
            )?;
        }
        all_ok &= ok;
    }
    if all_ok {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn cmd_genus(out: &mut dyn Write, p: u64) -> Result<(), Failure> {
    let g = genus_plus(p)?;
    writeln!(out, "genus {g}, cusps {}", cusp_count_plus(p, 1))?;
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Order {
            level,
            factor,
            structure,
            json,
            factor_args,
        } => cmd_order(out, level, *factor, *structure, *json, factor_args),
        Command::Table {
            pmax,
            json,
            parallel,
            force,
            factor_args,
        } => cmd_table(out, *pmax, *json, *parallel, *force, factor_args),
        Command::Verify {
            level,
            structure,
            analytic,
            eps_independence,
            eps,
            all,
        } => {
            let suites = Suites {
                structure: *structure || *all,
                analytic: *analytic || *all,
                eps_independence: *eps_independence || *all || eps.is_some(),
            };
            cmd_verify(out, level, suites, eps.as_deref())
        }
        Command::Crosscheck { path, p } => cmd_crosscheck(out, err, path.as_ref(), *p),
        Command::Genus { p } => cmd_genus(out, *p),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Verify) => EXIT_VERIFY,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Internal(m)) => {
            let _ = writeln!(err, "internal error: {m}");
            EXIT_INTERNAL
        }
    }
}
