use num_rational::Ratio;
use primegap::equidistribution::{discrepancy_report, DiscrepancyOptions};
use primegap::sums::PredictionOptions;
use primegap::{EvalConfig, OmegaParams};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError, PyZeroDivisionError};
use pyo3::prelude::*;

create_exception!(
    primegap_py,
    InadmissibleError,
    PyValueError,
    "Offsets cover every class modulo some prime."
);
create_exception!(
    primegap_py,
    ResourceLimitError,
    PyRuntimeError,
    "A configured resource cap would be exceeded."
);

fn to_py(e: primegap::Error) -> PyErr {
    match e {
        primegap::Error::InvalidInput(msg) => PyValueError::new_err(msg),
        primegap::Error::Inadmissible { witness } => {
            InadmissibleError::new_err((e.to_string(), witness))
        }
        primegap::Error::Resource { .. } => ResourceLimitError::new_err(e.to_string()),
        primegap::Error::DivisionByZero => PyZeroDivisionError::new_err(e.to_string()),
    }
}

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for primegap::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[pyclass(name = "AdmissibleTuple", frozen, eq, hash)]
#[derive(PartialEq, Eq, Hash)]
struct PyTuple {
    inner: primegap::AdmissibleTuple,
}

#[pymethods]
impl PyTuple {
    #[new]
    #[pyo3(signature = (offsets, normalize = false))]
    fn new(offsets: Vec<u64>, normalize: bool) -> PyResult<Self> {
        let inner = if normalize {
            primegap::AdmissibleTuple::normalized(&offsets)
        } else {
            primegap::AdmissibleTuple::new(offsets)
        }
        .py()?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: primegap::AdmissibleTuple::parse(text, false).py()?,
        })
    }

    #[getter]
    fn offsets(&self) -> Vec<u64> {
        self.inner.offsets().to_vec()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn width(&self) -> u64 {
        self.inner.width()
    }

    /// Truncated singular series with its tail bound: `(value, tail_bound)`.
    #[pyo3(signature = (p_max = 1_000_000))]
    fn singular_series(&self, p_max: u64) -> PyResult<(f64, f64)> {
        let s = self.inner.singular_series(p_max).py()?;
        Ok((s.value, s.tail_bound))
    }

    fn __len__(&self) -> usize {
        self.inner.k()
    }

    fn __repr__(&self) -> String {
        format!(
            "AdmissibleTuple([{}])",
            self.inner.to_string().replace(',', ", ")
        )
    }
}

#[pyclass(name = "SieveParams", frozen)]
struct PySieveParams {
    inner: primegap::SieveParams,
}

#[pymethods]
impl PySieveParams {
    /// `varpi` is a `(numerator, denominator)` pair. `d` and `d1` override
    /// the levels derived from `x`.
    #[new]
    #[pyo3(signature = (k0, l0, varpi, x, d = None, d1 = None))]
    fn new(
        k0: usize,
        l0: usize,
        varpi: (u64, u64),
        x: u64,
        d: Option<u64>,
        d1: Option<u64>,
    ) -> PyResult<Self> {
        if varpi.1 == 0 {
            return Err(PyZeroDivisionError::new_err("varpi denominator is zero"));
        }
        let mut inner = primegap::SieveParams::new(k0, l0, Ratio::new(varpi.0, varpi.1), x).py()?;
        if d.is_some() || d1.is_some() {
            let (dd, dd1) = (d.unwrap_or(inner.d), d1.unwrap_or(inner.d1));
            inner = inner.with_levels(dd, dd1).py()?;
        }
        Ok(Self { inner })
    }

    #[getter]
    fn k0(&self) -> usize {
        self.inner.k0
    }

    #[getter]
    fn l0(&self) -> usize {
        self.inner.l0
    }

    #[getter]
    fn varpi(&self) -> (u64, u64) {
        (*self.inner.varpi.numer(), *self.inner.varpi.denom())
    }

    #[getter]
    fn x(&self) -> u64 {
        self.inner.x
    }

    #[getter(D)]
    fn d(&self) -> u64 {
        self.inner.d
    }

    #[getter(D1)]
    fn d1(&self) -> u64 {
        self.inner.d1
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "SieveParams(k0={}, l0={}, varpi={}/{}, x={}, D={}, D1={})",
            p.k0,
            p.l0,
            p.varpi.numer(),
            p.varpi.denom(),
            p.x,
            p.d,
            p.d1
        )
    }
}

/// The closed interval `[x, x + delta]`, with `delta` given directly or as
/// `x / (ln x)^a`.
#[pyclass(name = "Interval", frozen)]
struct PyInterval {
    inner: primegap::IntervalSpec,
}

#[pymethods]
impl PyInterval {
    #[new]
    #[pyo3(signature = (x, delta = None, a = None))]
    fn new(x: u64, delta: Option<u64>, a: Option<f64>) -> PyResult<Self> {
        let inner = match (delta, a) {
            (Some(d), None) => primegap::IntervalSpec::explicit(x, d),
            (None, Some(a)) => primegap::IntervalSpec::log_power(x, a),
            _ => return Err(PyValueError::new_err("give exactly one of delta and a")),
        }
        .py()?;
        Ok(Self { inner })
    }

    #[getter]
    fn lo(&self) -> u64 {
        self.inner.lo()
    }

    #[getter]
    fn hi(&self) -> u64 {
        self.inner.hi()
    }

    #[getter]
    fn delta(&self) -> u64 {
        self.inner.delta()
    }

    fn __len__(&self) -> usize {
        self.inner.len() as usize
    }

    fn __repr__(&self) -> String {
        format!("Interval({}, {})", self.inner.lo(), self.inner.hi())
    }
}

#[pyclass(name = "SumReport", frozen)]
struct PySumReport {
    inner: primegap::SumReport,
}

#[pymethods]
impl PySumReport {
    #[getter]
    fn s1(&self) -> f64 {
        self.inner.s1
    }

    #[getter]
    fn s2(&self) -> f64 {
        self.inner.s2
    }

    #[getter]
    fn statistic(&self) -> f64 {
        self.inner.statistic
    }

    #[getter]
    fn singular_series(&self) -> f64 {
        self.inner.singular_series
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }
}

#[pyclass(name = "DiscrepancyReport", frozen)]
struct PyDiscrepancyReport {
    inner: primegap::DiscrepancyReport,
}

#[pymethods]
impl PyDiscrepancyReport {
    #[getter]
    fn bv_sum(&self) -> f64 {
        self.inner.bv_sum
    }

    #[getter]
    fn bv_sums(&self) -> Vec<f64> {
        self.inner.bv_sums.clone()
    }

    #[getter]
    fn e_terms(&self) -> Vec<f64> {
        self.inner.e_terms.clone()
    }

    #[getter]
    fn cauchy_rhs(&self) -> Vec<f64> {
        self.inner.cauchy_rhs.clone()
    }

    fn ratio_at_b(&self) -> f64 {
        self.inner.ratio_at_b()
    }

    /// `(d, c, delta)` rows.
    fn rows(&self) -> Vec<(u64, u64, f64)> {
        self.inner
            .per_modulus
            .iter()
            .flat_map(|m| m.classes.iter().map(move |&(c, v)| (m.d, c, v)))
            .collect()
    }

    fn summary_json(&self) -> String {
        self.inner.summary_json().to_string()
    }
}

#[pyfunction]
fn sieve_primes(lo: u64, hi: u64) -> PyResult<Vec<u64>> {
    Ok(primegap::sieve_primes(lo, hi).py()?.as_slice().to_vec())
}

#[pyfunction]
fn is_prime(n: u64) -> bool {
    primegap::is_prime(n)
}

#[pyfunction]
fn factorize(n: u64) -> PyResult<Vec<(u64, u32)>> {
    Ok(primegap::factorize(n).py()?.factors)
}

#[pyfunction]
fn mobius(n: u64) -> PyResult<i8> {
    primegap::mobius(n).py()
}

#[pyfunction]
fn euler_phi(n: u64) -> PyResult<u64> {
    primegap::euler_phi(n).py()
}

#[pyfunction]
fn tau3(n: u64) -> PyResult<u64> {
    primegap::tau3(n).py()
}

#[pyfunction]
fn rho2(d: u64, tuple: PyRef<'_, PyTuple>) -> PyResult<u64> {
    primegap::rho2(d, &tuple.inner).py()
}

/// `(admissible, witness)` for any strictly increasing offsets.
#[pyfunction]
fn is_admissible(offsets: Vec<u64>) -> PyResult<(bool, Option<u64>)> {
    let v = primegap::is_admissible(&offsets).py()?;
    Ok((v.admissible, v.witness))
}

#[pyfunction]
#[pyo3(signature = (k, search_width = None))]
fn greedy_narrow(k: usize, search_width: Option<u64>) -> PyResult<PyTuple> {
    let w = search_width.unwrap_or(64 + 8 * k as u64 * (k as f64).ln().ceil().max(1.0) as u64);
    Ok(PyTuple {
        inner: primegap::greedy_narrow(k, w).py()?,
    })
}

#[pyfunction]
fn lambda_weight(
    n: u64,
    tuple: PyRef<'_, PyTuple>,
    params: PyRef<'_, PySieveParams>,
) -> PyResult<f64> {
    primegap::lambda_weight(n, &tuple.inner, &params.inner).py()
}

#[pyfunction]
fn lambda_batch(
    py: Python<'_>,
    interval: PyRef<'_, PyInterval>,
    tuple: PyRef<'_, PyTuple>,
    params: PyRef<'_, PySieveParams>,
) -> PyResult<Vec<f64>> {
    let (iv, t, p) = (interval.inner, tuple.inner.clone(), params.inner.clone());
    let table = py
        .detach(|| primegap::lambda_batch(&iv, &t, &p, &EvalConfig::default()))
        .py()?;
    Ok(table.values)
}

#[pyfunction]
fn lemma3_statistic(
    py: Python<'_>,
    interval: PyRef<'_, PyInterval>,
    tuple: PyRef<'_, PyTuple>,
    params: PyRef<'_, PySieveParams>,
) -> PyResult<PySumReport> {
    let (iv, t, p) = (interval.inner, tuple.inner.clone(), params.inner.clone());
    let inner = py
        .detach(|| {
            primegap::lemma3_statistic_with(
                &iv,
                &t,
                &p,
                &PredictionOptions::default(),
                &EvalConfig::default(),
            )
        })
        .py()?;
    Ok(PySumReport { inner })
}

#[pyfunction]
#[pyo3(signature = (interval, tuple, params, d_cap = None, b = 1.0))]
fn discrepancies(
    py: Python<'_>,
    interval: PyRef<'_, PyInterval>,
    tuple: PyRef<'_, PyTuple>,
    params: PyRef<'_, PySieveParams>,
    d_cap: Option<u64>,
    b: f64,
) -> PyResult<PyDiscrepancyReport> {
    let (iv, t, p) = (interval.inner, tuple.inner.clone(), params.inner.clone());
    let opts = DiscrepancyOptions {
        d_cap,
        b_exponent: b,
        ..DiscrepancyOptions::default()
    };
    let inner = py.detach(|| discrepancy_report(&iv, &t, &p, &opts)).py()?;
    Ok(PyDiscrepancyReport { inner })
}

#[pyfunction]
fn count_weak_prime_pairs(interval: PyRef<'_, PyInterval>, gap_bound: u64) -> PyResult<u64> {
    primegap::count_weak_prime_pairs(&interval.inner, gap_bound).py()
}

/// ω as `(sign, ln|ω|, mantissa, exponent10)`. Defaults are the published
/// parameters.
#[pyfunction]
#[pyo3(signature = (k0 = 3_500_000, l0 = 180, varpi = (1, 1168)))]
fn omega(k0: u64, l0: u64, varpi: (u64, u64)) -> PyResult<(i8, f64, f64, i64)> {
    if varpi.1 == 0 {
        return Err(PyZeroDivisionError::new_err("varpi denominator is zero"));
    }
    let params = OmegaParams {
        k0,
        l0,
        varpi: Ratio::new(varpi.0, varpi.1),
        ..OmegaParams::paper()
    };
    let w = primegap::omega_constant(&params).py()?;
    let d = primegap::render_decimal(w).py()?;
    Ok((w.sign() as i8, w.ln_abs(), d.mantissa, d.exponent))
}

#[pymodule]
fn primegap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("InadmissibleError", m.py().get_type::<InadmissibleError>())?;
    m.add(
        "ResourceLimitError",
        m.py().get_type::<ResourceLimitError>(),
    )?;
    m.add_class::<PyTuple>()?;
    m.add_class::<PySieveParams>()?;
    m.add_class::<PyInterval>()?;
    m.add_class::<PySumReport>()?;
    m.add_class::<PyDiscrepancyReport>()?;
    m.add_function(wrap_pyfunction!(sieve_primes, m)?)?;
    m.add_function(wrap_pyfunction!(is_prime, m)?)?;
    m.add_function(wrap_pyfunction!(factorize, m)?)?;
    m.add_function(wrap_pyfunction!(mobius, m)?)?;
    m.add_function(wrap_pyfunction!(euler_phi, m)?)?;
    m.add_function(wrap_pyfunction!(tau3, m)?)?;
    m.add_function(wrap_pyfunction!(rho2, m)?)?;
    m.add_function(wrap_pyfunction!(is_admissible, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_narrow, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_weight, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_batch, m)?)?;
    m.add_function(wrap_pyfunction!(lemma3_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(discrepancies, m)?)?;
    m.add_function(wrap_pyfunction!(count_weak_prime_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(omega, m)?)?;
    Ok(())
}
