use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use invofactor::algebra::{acceptable as accept, Field, QuadPoly};
use invofactor::factorize::certificate::{verify_certificate, Certificate};
use invofactor::factorize::classify::{classify3, Flavor};
use invofactor::factorize::pipeline::{factor_four, factor_three, PipelineOptions};
use invofactor::factorize::scalar::scalar_triple_2x2;
use invofactor::glsearch::Budget;
use invofactor::linalg::Mat;
use invofactor::opcore::{RepAut, Window, WindowSpec};
use invofactor::Error;

create_exception!(invofactor_py, Refused, PyException);
create_exception!(invofactor_py, VerificationFailed, PyException);
create_exception!(invofactor_py, BudgetExceeded, PyException);

fn py_err(e: Error) -> PyErr {
    match &e {
        Error::Refused(r) => Refused::new_err((r.code().to_string(), r.detail().to_string())),
        Error::NotAcceptable => Refused::new_err(("NotAcceptable", e.to_string())),
        Error::BuilderStuck(_) => Refused::new_err(("BuilderStuck", e.to_string())),
        Error::UnsupportedField(_) => Refused::new_err(("UnsupportedField", e.to_string())),
        Error::VerificationFailed(_) => VerificationFailed::new_err(e.to_string()),
        Error::BudgetExceeded(_) => BudgetExceeded::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn field(tag: &str) -> PyResult<Field> {
    tag.parse().map_err(py_err)
}

fn polys(ps: &[String], f: Field) -> PyResult<Vec<QuadPoly>> {
    ps.iter().map(|p| QuadPoly::parse(p, f).map_err(py_err)).collect()
}

fn triple(ps: &[QuadPoly]) -> PyResult<[&QuadPoly; 3]> {
    match ps {
        [a, b, c] => Ok([a, b, c]),
        _ => Err(PyValueError::new_err(format!("expected 3 polynomials, got {}", ps.len()))),
    }
}

fn window_spec(radius: i64) -> PyResult<WindowSpec> {
    if radius <= 0 {
        return Err(PyValueError::new_err("window radius must be positive"));
    }
    Ok(WindowSpec::from_radius(radius))
}

fn rows(m: &Mat) -> Vec<Vec<String>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j).to_string()).collect()).collect()
}

/// Acceptability of `lam` for three polynomials: "ProductOfRoots", "NormSquare" or "No".
#[pyfunction]
fn acceptable(lam: &str, field_tag: &str, ps: Vec<String>) -> PyResult<String> {
    let f = field(field_tag)?;
    let ps = polys(&ps, f)?;
    let l = f.parse(lam).map_err(py_err)?;
    Ok(accept(&l, triple(&ps)?).map_err(py_err)?.name().to_string())
}

/// Matrices `[A, B, C]` with `ABC = lam·I`, entries as strings.
#[pyfunction]
fn scalar_triple(lam: &str, field_tag: &str, ps: Vec<String>) -> PyResult<Vec<Vec<Vec<String>>>> {
    let f = field(field_tag)?;
    let ps = polys(&ps, f)?;
    let l = f.parse(lam).map_err(py_err)?;
    Ok(scalar_triple_2x2(&l, triple(&ps)?).map_err(py_err)?.iter().map(rows).collect())
}

/// Factors an operator given as JSON into 3 or 4 factors; returns the certificate JSON.
#[pyfunction]
#[pyo3(signature = (op_json, ps, seed=0, window=32))]
fn factor(op_json: &str, ps: Vec<String>, seed: u64, window: i64) -> PyResult<String> {
    let u = RepAut::from_json_str(op_json).map_err(py_err)?;
    let ps = polys(&ps, u.field())?;
    let opts = PipelineOptions {
        seed,
        budget: Budget::from_env().map_err(py_err)?,
        window: window_spec(window)?,
        ..Default::default()
    };
    let cert = match ps.as_slice() {
        [a, b, c] => factor_three(&u, [a, b, c], &opts),
        [a, b, c, d] => factor_four(&u, [a, b, c, d], &opts),
        _ => return Err(PyValueError::new_err(format!("expected 3 or 4 polynomials, got {}", ps.len()))),
    }
    .map_err(py_err)?;
    cert.to_json_string().map_err(py_err)
}

/// Re-checks a certificate against the operator; returns `(check, checked, failed)` rows.
#[pyfunction]
#[pyo3(signature = (op_json, cert_json, window=64))]
fn verify(op_json: &str, cert_json: &str, window: i64) -> PyResult<(bool, Vec<(String, usize, usize)>)> {
    let u = RepAut::from_json_str(op_json).map_err(py_err)?;
    let cert = Certificate::from_json_str(cert_json).map_err(py_err)?;
    let report = verify_certificate(&u, &cert, &Window::for_aut(&u, &window_spec(window)?));
    let checks = report.checks.iter().map(|c| (c.check.clone(), c.checked, c.failed)).collect();
    Ok((report.passed(), checks))
}

/// `(product, condition, reasons)` for a flavor: "involutions", "unipotents" or "mixed".
#[pyfunction]
fn classify(op_json: &str, flavor: &str) -> PyResult<(bool, Option<String>, Vec<String>)> {
    let u = RepAut::from_json_str(op_json).map_err(py_err)?;
    let d = classify3(&u, flavor.parse::<Flavor>().map_err(py_err)?).map_err(py_err)?;
    Ok((d.product, d.condition, d.reasons))
}

#[pymodule]
fn invofactor_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(acceptable, m)?)?;
    m.add_function(wrap_pyfunction!(scalar_triple, m)?)?;
    m.add_function(wrap_pyfunction!(factor, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add("Refused", m.py().get_type::<Refused>())?;
    m.add("VerificationFailed", m.py().get_type::<VerificationFailed>())?;
    m.add("BudgetExceeded", m.py().get_type::<BudgetExceeded>())?;
    Ok(())
}
