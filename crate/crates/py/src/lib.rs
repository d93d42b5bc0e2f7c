//! Python bindings for `cuspgroup`.

use pyo3::prelude::*;

#[pymodule(name = "cuspgroup")]
mod cuspgroup_py {
    use std::path::PathBuf;
    use std::time::Instant;

    use num_bigint::{BigInt, BigUint};
    use pyo3::exceptions::{PyRuntimeError, PyValueError};
    use pyo3::prelude::*;

    use cuspgroup::arith::{self, FactorBudget, DEFAULT_RHO_ITERATIONS};
    use cuspgroup::cartan::{self, CartanContext, CartanError};
    use cuspgroup::classgroup::{self, ClassGroupError, ClassGroupResult, ComputeOptions};
    use cuspgroup::crosscheck::RecordFormat;
    use cuspgroup::output::OutputRecord;
    use cuspgroup::stickelberger::{self, GroupRingElement};
    use cuspgroup::verify::{Suites, VerifyError};

    fn cg_err(e: ClassGroupError) -> PyErr {
        if e.is_input_error() {
            PyValueError::new_err(e.to_string())
        } else {
            PyRuntimeError::new_err(e.to_string())
        }
    }

    fn cartan_err(e: CartanError) -> PyErr {
        cg_err(e.into())
    }

    fn budget(rho_budget: Option<u64>) -> FactorBudget {
        FactorBudget {
            rho_iterations: rho_budget.unwrap_or(DEFAULT_RHO_ITERATIONS),
            ..FactorBudget::default()
        }
    }

    fn fractions(x: &GroupRingElement) -> Vec<(BigInt, BigInt)> {
        x.coeffs()
            .iter()
            .map(|c| (c.numer().clone(), c.denom().clone()))
            .collect()
    }

    /// Result of a class group computation.
    #[pyclass(frozen, name = "ClassGroup")]
    struct PyClassGroup {
        inner: ClassGroupResult,
        elapsed_ms: u64,
    }

    #[pymethods]
    impl PyClassGroup {
        #[getter]
        fn p(&self) -> u64 {
            self.inner.p
        }

        #[getter]
        fn k(&self) -> u32 {
            self.inner.k
        }

        #[getter]
        fn order(&self) -> BigUint {
            self.inner.order.clone()
        }

        /// `[(prime, exponent), ...]`, or `None` if not requested.
        #[getter]
        fn factorization(&self) -> Option<Vec<(BigUint, u32)>> {
            self.inner.factorization.as_ref().map(|f| {
                f.entries
                    .iter()
                    .map(|e| (e.prime.clone(), e.exponent))
                    .collect()
            })
        }

        #[getter]
        fn factorization_complete(&self) -> Option<bool> {
            self.inner.factorization.as_ref().map(|f| f.is_complete())
        }

        #[getter]
        fn invariant_factors(&self) -> Option<Vec<BigUint>> {
            self.inner.invariant_factors.clone()
        }

        #[getter]
        fn genus(&self) -> Option<u64> {
            self.inner.genus
        }

        #[getter]
        fn cusps(&self) -> u64 {
            self.inner.cusps
        }

        #[getter]
        fn epsilon(&self) -> i64 {
            self.inner.epsilon
        }

        #[getter]
        fn w(&self) -> u64 {
            self.inner.w
        }

        fn to_json(&self) -> String {
            OutputRecord::new(self.inner.clone(), self.elapsed_ms).to_json()
        }

        fn __repr__(&self) -> String {
            match &self.inner.factorization {
                Some(f) => format!(
                    "ClassGroup(p={}, k={}, order={} = {f})",
                    self.inner.p, self.inner.k, self.inner.order
                ),
                None => format!(
                    "ClassGroup(p={}, k={}, order={})",
                    self.inner.p, self.inner.k, self.inner.order
                ),
            }
        }
    }

    /// The level `p^k` with a choice of `eps` and generator `w` of `H`.
    #[pyclass(frozen, name = "CartanLevel")]
    struct PyCartanLevel {
        ctx: CartanContext,
    }

    #[pymethods]
    impl PyCartanLevel {
        #[new]
        #[pyo3(signature = (p, k=1, epsilon=None, w=None))]
        fn new(p: u64, k: u32, epsilon: Option<i64>, w: Option<u64>) -> PyResult<Self> {
            let ctx = CartanContext::with_params(p, k, epsilon, w).map_err(cartan_err)?;
            Ok(Self { ctx })
        }

        #[getter]
        fn p(&self) -> u64 {
            self.ctx.p()
        }

        #[getter]
        fn k(&self) -> u32 {
            self.ctx.k()
        }

        #[getter]
        fn epsilon(&self) -> i64 {
            self.ctx.epsilon()
        }

        #[getter]
        fn w(&self) -> u64 {
            self.ctx.w()
        }

        #[getter]
        fn modulus(&self) -> u64 {
            self.ctx.modulus()
        }

        /// Order of `H = (Z/p^k)^* / {±1}`.
        #[getter]
        fn n(&self) -> usize {
            self.ctx.n()
        }

        #[getter]
        fn d(&self) -> u64 {
            self.ctx.d()
        }

        /// Coefficients of θ as `(numerator, denominator)` pairs, position `j` for `w^j`.
        fn theta(&self) -> Vec<(BigInt, BigInt)> {
            fractions(&stickelberger::theta(&self.ctx))
        }

        fn theta_prime(&self) -> PyResult<Vec<(BigInt, BigInt)>> {
            let t = stickelberger::theta_prime(&self.ctx).map_err(|e| cg_err(e.into()))?;
            Ok(fractions(&t))
        }

        fn order(&self, py: Python<'_>) -> PyResult<BigInt> {
            py.detach(|| classgroup::order(&self.ctx)).map_err(cg_err)
        }

        fn structure(&self, py: Python<'_>) -> PyResult<Vec<BigInt>> {
            py.detach(|| classgroup::structure(&self.ctx))
                .map_err(cg_err)
        }

        fn __repr__(&self) -> String {
            format!(
                "CartanLevel(p={}, k={}, epsilon={}, w={})",
                self.ctx.p(),
                self.ctx.k(),
                self.ctx.epsilon(),
                self.ctx.w()
            )
        }
    }

    /// Order of the cuspidal divisor class group of `X+ns(p^k)`.
    #[pyfunction]
    #[pyo3(signature = (p, k=1))]
    fn order(py: Python<'_>, p: u64, k: u32) -> PyResult<BigInt> {
        let ctx = CartanContext::new(p, k).map_err(cartan_err)?;
        py.detach(|| classgroup::order(&ctx)).map_err(cg_err)
    }

    /// Invariant factors greater than one.
    #[pyfunction]
    #[pyo3(signature = (p, k=1))]
    fn structure(py: Python<'_>, p: u64, k: u32) -> PyResult<Vec<BigInt>> {
        let ctx = CartanContext::new(p, k).map_err(cartan_err)?;
        py.detach(|| classgroup::structure(&ctx)).map_err(cg_err)
    }

    #[pyfunction]
    #[pyo3(signature = (p, k=1, factor=false, structure=false, rho_budget=None))]
    fn compute(
        py: Python<'_>,
        p: u64,
        k: u32,
        factor: bool,
        structure: bool,
        rho_budget: Option<u64>,
    ) -> PyResult<PyClassGroup> {
        let ctx = CartanContext::new(p, k).map_err(cartan_err)?;
        let opts = ComputeOptions {
            factor,
            structure,
            budget: budget(rho_budget),
        };
        let t = Instant::now();
        let inner = py
            .detach(|| classgroup::compute(&ctx, &opts))
            .map_err(cg_err)?;
        Ok(PyClassGroup {
            inner,
            elapsed_ms: u64::try_from(t.elapsed().as_millis()).unwrap_or(u64::MAX),
        })
    }

    /// Order via the Bernoulli determinant (`k = 1` only).
    #[pyfunction]
    fn bernoulli_order(p: u64) -> PyResult<BigInt> {
        classgroup::bernoulli_formula_k1(p).map_err(cg_err)
    }

    /// `[(prime, exponent), ...]`; unsplit cofactors appear with `complete=False`.
    #[pyfunction]
    #[pyo3(signature = (n, rho_budget=None))]
    fn factorize(
        py: Python<'_>,
        n: BigUint,
        rho_budget: Option<u64>,
    ) -> PyResult<(Vec<(BigUint, u32)>, bool)> {
        if n == BigUint::ZERO {
            return Err(PyValueError::new_err("cannot factor 0"));
        }
        let f = py.detach(|| arith::factorize(&n, &budget(rho_budget)));
        let entries = f
            .entries
            .iter()
            .map(|e| (e.prime.clone(), e.exponent))
            .collect();
        Ok((entries, f.is_complete()))
    }

    #[pyfunction]
    fn genus(p: u64) -> PyResult<u64> {
        cartan::genus_plus(p).map_err(cartan_err)
    }

    #[pyfunction]
    #[pyo3(signature = (p, k=1))]
    fn cusps(p: u64, k: u32) -> PyResult<u64> {
        CartanContext::new(p, k).map_err(cartan_err)?;
        Ok(cartan::cusp_count_plus(p, k))
    }

    /// Runs the verification suites; returns `[(suite, name, passed, detail), ...]`.
    #[pyfunction]
    #[pyo3(signature = (p, k=1, structure=false, analytic=false, eps_independence=false))]
    fn verify(
        py: Python<'_>,
        p: u64,
        k: u32,
        structure: bool,
        analytic: bool,
        eps_independence: bool,
    ) -> PyResult<Vec<(String, String, bool, String)>> {
        let ctx = CartanContext::new(p, k).map_err(cartan_err)?;
        let suites = Suites {
            structure,
            analytic,
            eps_independence,
        };
        let report = py
            .detach(|| cuspgroup::verify::run(&ctx, suites, None))
            .map_err(|e| match e {
                VerifyError::ClassGroup(e) => cg_err(e),
                e => PyValueError::new_err(e.to_string()),
            })?;
        Ok(report
            .lines
            .into_iter()
            .map(|l| (l.suite.to_string(), l.name, l.passed, l.detail))
            .collect())
    }

    /// Compares the order for `p` with the Jacobian data in `path` (default:
    /// bundled). Returns `(identities_hold, report)`.
    #[pyfunction]
    #[pyo3(signature = (p, path=None))]
    fn crosscheck(p: u64, path: Option<PathBuf>) -> PyResult<(bool, String)> {
        let loaded = match path {
            Some(path) => cuspgroup::crosscheck::load_records(&path, RecordFormat::Csv)
                .map_err(|e| PyValueError::new_err(e.to_string()))?,
            None => cuspgroup::crosscheck::load_bundled(),
        };
        let ctx = CartanContext::new(p, 1).map_err(cartan_err)?;
        let order = classgroup::order(&ctx).map_err(cg_err)?;
        let order = order.magnitude().clone();
        let report = cuspgroup::crosscheck::gcd_harness(p, &loaded.records, &order)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok((
            cuspgroup::crosscheck::matches_reference(&report),
            report.to_string(),
        ))
    }

    #[pymodule_init]
    fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
        m.add("__version__", cuspgroup::output::TOOL_VERSION)
    }
}
