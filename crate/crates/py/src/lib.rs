//! Python bindings for `arithfact`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use pyo3::exceptions::{PyOverflowError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use arithfact::arithfun::{self, ArithFn, SigmaOptions};
use arithfact::bhargava::{self, SetSpec};
use arithfact::factored::{self, CofactorKind, FactoredNat, DEFAULT_BIT_CAP, DEFAULT_RHO_ITERS};
use arithfact::lemmalab::{self, Suite, VerifyParams, VerifyReport};
use arithfact::primes::{self, PrimeSieve};
use arithfact::search::{parse_alpha, EquationSpec, SearchOptions, SearchReport};
use arithfact::valuations;
use arithfact::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Argument(_) | Error::OutOfRange { .. } => PyValueError::new_err(e.to_string()),
        Error::BitCap { .. } => PyOverflowError::new_err(e.to_string()),
        Error::Resource(_) | Error::Internal(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn kind_name(k: CofactorKind) -> &'static str {
    match k {
        CofactorKind::Unit => "unit",
        CofactorKind::Prime => "prime",
        CofactorKind::Composite => "composite",
        CofactorKind::Unknown => "unknown",
    }
}

/// Smallest-prime-factor sieve up to `limit`.
#[pyclass(name = "Sieve", module = "pyarithfact", frozen)]
struct PySieve {
    inner: PrimeSieve,
}

#[pymethods]
impl PySieve {
    #[new]
    fn new(py: Python<'_>, limit: u64) -> PyResult<Self> {
        let inner = py.detach(|| PrimeSieve::new(limit)).map_err(to_py)?;
        Ok(PySieve { inner })
    }

    #[getter]
    fn limit(&self) -> u64 {
        self.inner.limit()
    }

    fn is_prime(&self, n: u64) -> bool {
        self.inner.is_prime(n)
    }

    fn prime_count(&self, x: u64) -> PyResult<u64> {
        self.inner.prime_count(x).map_err(to_py)
    }

    fn prime_count_ap(&self, x: u64, h: u64, a: i64) -> PyResult<u64> {
        self.inner.prime_count_ap(x, h, a).map_err(to_py)
    }

    fn primes_up_to(&self, x: u64) -> Vec<u32> {
        self.inner.primes_up_to(x).to_vec()
    }

    fn interval_primes(&self, n: u64, ell: u64) -> PyResult<Vec<u32>> {
        self.inner
            .interval_primes(n, ell)
            .map(<[u32]>::to_vec)
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Sieve(limit={})", self.inner.limit())
    }
}

/// An exactly factored natural number.
#[pyclass(name = "Factored", module = "pyarithfact", frozen, eq)]
#[derive(PartialEq)]
struct PyFactored {
    inner: FactoredNat,
}

impl From<FactoredNat> for PyFactored {
    fn from(inner: FactoredNat) -> Self {
        PyFactored { inner }
    }
}

#[pymethods]
impl PyFactored {
    /// Builds from a `{prime: exponent}` mapping.
    #[new]
    #[pyo3(signature = (pairs = BTreeMap::new()))]
    fn new(pairs: BTreeMap<u64, u64>) -> PyResult<Self> {
        for &p in pairs.keys() {
            let f = factored::factor_u64(p.max(1));
            if p < 2 || f.len() != 1 || f.exponent(p) != 1 {
                return Err(PyValueError::new_err(format!("{p} is not prime")));
            }
        }
        Ok(FactoredNat::from_pairs(pairs).into())
    }

    fn items(&self) -> BTreeMap<u64, u64> {
        self.inner.iter().collect()
    }

    fn exponent(&self, p: u64) -> u64 {
        self.inner.exponent(p)
    }

    /// The value as a Python int; raises OverflowError above `bit_cap` bits.
    #[pyo3(signature = (bit_cap = DEFAULT_BIT_CAP))]
    fn value(&self, bit_cap: u64) -> PyResult<BigUint> {
        self.inner.expand(bit_cap).map_err(to_py)
    }

    fn ln(&self) -> f64 {
        self.inner.ln()
    }

    #[getter]
    fn bits(&self) -> u64 {
        self.inner.bit_estimate()
    }

    fn divides(&self, other: &PyFactored) -> bool {
        self.inner.divides(&other.inner)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __mul__(&self, other: &PyFactored) -> PyFactored {
        self.inner.mul(&other.inner).into()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Factored({:?})", self.items())
    }
}

#[pyfunction]
fn legendre(n: u64, p: u64) -> PyResult<u64> {
    if p < 2 {
        return Err(PyValueError::new_err("p must be at least 2"));
    }
    Ok(valuations::legendre(n, p))
}

#[pyfunction]
fn digit_sum(n: u64, p: u64) -> PyResult<u64> {
    if p < 2 {
        return Err(PyValueError::new_err("base must be at least 2"));
    }
    Ok(valuations::digit_sum(n, p))
}

#[pyfunction]
fn log_integral(x: f64) -> PyResult<f64> {
    primes::log_integral(x).map_err(to_py)
}

#[pyfunction]
fn factorial(n: u64, sieve: &PySieve) -> PyResult<PyFactored> {
    valuations::factorial_factored(n, &sieve.inner)
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
fn phi_factorial(n: u64, sieve: &PySieve) -> PyResult<PyFactored> {
    arithfun::phi_factorial(n, &sieve.inner)
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
fn sigma0_factorial(n: u64, sieve: &PySieve) -> PyResult<PyFactored> {
    arithfun::sigma0_factorial(n, &sieve.inner)
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n, k, sieve, bit_cap = DEFAULT_BIT_CAP))]
fn sigma_k_value(
    py: Python<'_>,
    n: u64,
    k: u32,
    sieve: &PySieve,
    bit_cap: u64,
) -> PyResult<BigUint> {
    py.detach(|| arithfun::sigma_k_value(n, k, &sieve.inner, bit_cap))
        .map_err(to_py)
}

/// σ_k(n!) as `(factored_part, cofactor, cofactor_kind)`.
#[pyfunction]
#[pyo3(signature = (n, k, sieve, rho_iters = 0, bit_cap = DEFAULT_BIT_CAP))]
fn sigma_k_factorial(
    py: Python<'_>,
    n: u64,
    k: u32,
    sieve: &PySieve,
    rho_iters: u64,
    bit_cap: u64,
) -> PyResult<(PyFactored, BigUint, &'static str)> {
    let opts = SigmaOptions {
        rho_iters,
        bit_cap,
        ..SigmaOptions::default()
    };
    let s = py
        .detach(|| arithfun::sigma_k_factorial(n, k, &sieve.inner, &opts))
        .map_err(to_py)?;
    let h = s.hybrid;
    Ok((
        h.factored_part.into(),
        h.cofactor,
        kind_name(h.cofactor_kind),
    ))
}

/// Trial division and Pollard rho; returns `(factored_part, cofactor, cofactor_kind)`.
#[pyfunction]
#[pyo3(signature = (n, trial_bound = 1 << 16, effort = DEFAULT_RHO_ITERS))]
fn factor(
    py: Python<'_>,
    n: BigUint,
    trial_bound: u64,
    effort: u64,
) -> PyResult<(PyFactored, BigUint, &'static str)> {
    let pf = py
        .detach(|| factored::factor_big(&n, trial_bound, effort))
        .map_err(to_py)?;
    Ok((
        pf.factored_part.into(),
        pf.cofactor,
        kind_name(pf.cofactor_kind),
    ))
}

/// m!_S from the closed form, or from p-orderings with `general=True`.
#[pyfunction]
#[pyo3(signature = (set, m, general = false, stability_doublings = bhargava::DEFAULT_STABILITY_DOUBLINGS))]
fn bhargava_factorial(
    set: &str,
    m: u64,
    general: bool,
    stability_doublings: u32,
) -> PyResult<PyFactored> {
    let spec: SetSpec = set.parse().map_err(to_py)?;
    if general || matches!(spec, SetSpec::Explicit(_)) {
        let outcome = bhargava::bhargava_general(&spec, m, stability_doublings).map_err(to_py)?;
        outcome.value().cloned().map(Into::into).ok_or_else(|| {
            PyRuntimeError::new_err(format!("{m}!_{spec}: truncations did not stabilize"))
        })
    } else {
        let sieve = PrimeSieve::new(2).map_err(to_py)?;
        bhargava::bhargava_closed(&spec, m, &sieve)
            .map(Into::into)
            .map_err(to_py)
    }
}

/// Result of [`search`].
#[pyclass(name = "SearchReport", module = "pyarithfact", frozen)]
struct PySearchReport {
    inner: SearchReport,
}

#[pymethods]
impl PySearchReport {
    /// `[(n, (m1, ..., mr)), ...]` in ascending order.
    #[getter]
    fn solutions(&self) -> Vec<(u64, Vec<u64>)> {
        self.inner.solution_pairs()
    }

    #[getter]
    fn complete(&self) -> bool {
        self.inner.complete
    }

    #[getter]
    fn last_solution_n(&self) -> Option<u64> {
        self.inner.last_solution_n
    }

    #[getter]
    fn wall_time(&self) -> f64 {
        self.inner.wall_time.as_secs_f64()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(to_py)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.solutions.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "SearchReport({}, n_max={}, solutions={})",
            self.inner.spec,
            self.inner.n_max,
            self.inner.solutions.len()
        )
    }
}

/// All solutions of `alpha * m1!_S1 ... mr!_Sr = f(n!)` for `n <= n_max`.
#[pyfunction]
#[pyo3(signature = (f, alpha, sets, n_max, sieve, m_cap = None, workers = 1, bit_cap = DEFAULT_BIT_CAP))]
#[allow(clippy::too_many_arguments)]
fn search(
    py: Python<'_>,
    f: &str,
    alpha: &str,
    sets: Vec<String>,
    n_max: u64,
    sieve: &PySieve,
    m_cap: Option<u64>,
    workers: usize,
    bit_cap: u64,
) -> PyResult<PySearchReport> {
    let f: ArithFn = f.parse().map_err(to_py)?;
    let sets = sets
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<SetSpec>, _>>()
        .map_err(to_py)?;
    let spec = EquationSpec::new(f, parse_alpha(alpha).map_err(to_py)?, sets).map_err(to_py)?;
    let opts = SearchOptions {
        m_cap,
        bit_cap,
        workers: workers.max(1),
        verify: true,
    };
    let inner = py
        .detach(|| arithfact::search::search(&spec, n_max, &sieve.inner, &opts))
        .map_err(to_py)?;
    Ok(PySearchReport { inner })
}

/// Result of [`verify`].
#[pyclass(name = "VerifyReport", module = "pyarithfact", frozen)]
struct PyVerifyReport {
    inner: VerifyReport,
}

#[pymethods]
impl PyVerifyReport {
    #[getter]
    fn checks_run(&self) -> u64 {
        self.inner.checks_run
    }

    #[getter]
    fn failures(&self) -> u64 {
        self.inner.failures
    }

    #[getter]
    fn passed(&self) -> bool {
        self.inner.failures == 0
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    /// CSV rows of one suite, header first.
    fn rows(&self, suite: &str) -> PyResult<Vec<Vec<String>>> {
        let suite: Suite = suite.parse().map_err(to_py)?;
        let rep = self
            .inner
            .suites
            .iter()
            .find(|r| r.suite == suite)
            .ok_or_else(|| PyValueError::new_err(format!("suite {suite} was not run")))?;
        let mut out = vec![suite.columns().iter().map(|c| c.to_string()).collect()];
        out.extend(rep.rows.iter().cloned());
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!(
            "VerifyReport(checks_run={}, failures={})",
            self.inner.checks_run, self.inner.failures
        )
    }
}

/// Runs a lemma suite (`legendre`, `intervals`, `lemma4`, `brun`, `sigma0`,
/// `stewart` or `all`).
#[pyfunction]
#[pyo3(signature = (suite, sieve, n = None, q_max = 50, ell_max = 30, stewart_min = 2, stewart_max = 64, rho_iters = DEFAULT_RHO_ITERS))]
#[allow(clippy::too_many_arguments)]
fn verify(
    py: Python<'_>,
    suite: &str,
    sieve: &PySieve,
    n: Option<u64>,
    q_max: u64,
    ell_max: u64,
    stewart_min: u32,
    stewart_max: u32,
    rho_iters: u64,
) -> PyResult<PyVerifyReport> {
    let suites = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![suite.parse().map_err(to_py)?]
    };
    let params = VerifyParams {
        n,
        q_max,
        ell_max,
        stewart_min,
        stewart_max,
        rho_iters,
    };
    let reports = py
        .detach(|| {
            suites
                .iter()
                .map(|&s| lemmalab::run_suite(s, &params, &sieve.inner))
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(to_py)?;
    Ok(PyVerifyReport {
        inner: VerifyReport::new(reports),
    })
}

/// `(exact, counting, main_term)` for ν_q of `∏_{p≤n}(p−1)`.
#[pyfunction]
fn nu_q_prime_product(n: u64, q: u64, sieve: &PySieve) -> PyResult<(u64, u64, f64)> {
    let r = lemmalab::nu_q_prime_product(n, q, &sieve.inner).map_err(to_py)?;
    Ok((r.exact, r.counting, r.main_term))
}

#[pymodule]
fn pyarithfact(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySieve>()?;
    m.add_class::<PyFactored>()?;
    m.add_class::<PySearchReport>()?;
    m.add_class::<PyVerifyReport>()?;
    m.add_function(wrap_pyfunction!(legendre, m)?)?;
    m.add_function(wrap_pyfunction!(digit_sum, m)?)?;
    m.add_function(wrap_pyfunction!(log_integral, m)?)?;
    m.add_function(wrap_pyfunction!(factorial, m)?)?;
    m.add_function(wrap_pyfunction!(phi_factorial, m)?)?;
    m.add_function(wrap_pyfunction!(sigma0_factorial, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_k_value, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_k_factorial, m)?)?;
    m.add_function(wrap_pyfunction!(factor, m)?)?;
    m.add_function(wrap_pyfunction!(bhargava_factorial, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(nu_q_prime_product, m)?)?;
    Ok(())
}
