//! Python bindings. Sets cross the boundary as set-definition JSON strings and
//! rationals as `"p/q"` strings, so nothing is rounded on the way.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sumsetlab_core::corpus::{records_to_csv, records_to_json, sweep as run_sweep, Checker};
use sumsetlab_core::grid::{common_resolution, minkowski_sum_auto};
use sumsetlab_core::hull::hull_of;
use sumsetlab_core::io::SetDefinition;
use sumsetlab_core::rational::{format_rational, parse_rational};
use sumsetlab_core::theorems::{delta_t, sharp_family_exact, FamilyKind, SharpFamily};
use sumsetlab_core::{Error, GridSet, RationalScalar, Result};

fn grid(text: &str) -> Result<GridSet> {
    SetDefinition::from_json(text)?.to_grid()
}

fn scalar(text: &str) -> Result<RationalScalar> {
    RationalScalar::try_from_rational(&parse_rational(text)?)
}

pub fn sum_json(a: &str, b: &str) -> Result<String> {
    let (a, b) = common_resolution(&grid(a)?, &grid(b)?)?;
    Ok(SetDefinition::from_grid(&minkowski_sum_auto(&a, &b)?).to_json())
}

pub fn iterated_sum_json(a: &str, k: usize) -> Result<String> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let a = grid(a)?;
    let mut acc = a.clone();
    for _ in 1..k {
        acc = minkowski_sum_auto(&acc, &a)?;
    }
    Ok(SetDefinition::from_grid(&acc).to_json())
}

/// One-dimensional inputs go through exact intervals, so points count.
pub fn delta_str(a: &str, b: &str, t: &str) -> Result<String> {
    let t = scalar(t)?;
    let (a, b) = (SetDefinition::from_json(a)?, SetDefinition::from_json(b)?);
    let d = if a.dim == 1 && b.dim == 1 {
        delta_t(&a.to_intervals()?, &b.to_intervals()?, t)?
    } else {
        delta_t(&a.to_grid()?, &b.to_grid()?, t)?
    };
    Ok(format_rational(&d))
}

pub fn hull_volume_str(a: &str) -> Result<String> {
    let def = SetDefinition::from_json(a)?;
    let mut pts = def.grid_part()?.corner_points();
    pts.extend(def.points());
    Ok(format_rational(&hull_of(def.dim, &pts)?.volume()))
}

pub fn sharp_family_json(kind: &str, d: usize, param: &str, v: &[String], grid_q: &[u64]) -> Result<String> {
    let kind = match kind {
        "two-set" => FamilyKind::TwoSet(scalar(param)?),
        "iterated" => FamilyKind::Iterated(
            param
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("k must be a positive integer, got `{param}`")))?,
        ),
        other => return Err(Error::InvalidParameter(format!("unknown family `{other}`"))),
    };
    let v = v.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
    Ok(sharp_family_exact(&SharpFamily { d, kind, v }, grid_q)?.to_json())
}

pub fn sweep_text(checker: &str, seed: u64, count: usize, format: &str) -> Result<String> {
    let recs = run_sweep(checker.parse::<Checker>()?, seed, count)?;
    match format {
        "csv" => records_to_csv(&recs),
        "json" => Ok(records_to_json(&recs)),
        other => Err(Error::InvalidParameter(format!("format must be csv or json, got `{other}`"))),
    }
}

fn py(r: Result<String>) -> PyResult<String> {
    r.map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Minkowski sum of two set definitions.
#[pyfunction]
fn minkowski_sum(a: &str, b: &str) -> PyResult<String> {
    py(sum_json(a, b))
}

#[pyfunction]
fn iterated_sum(a: &str, k: usize) -> PyResult<String> {
    py(iterated_sum_json(a, k))
}

/// delta_t(A, B) as an exact `"p/q"` string.
#[pyfunction]
fn delta(a: &str, b: &str, t: &str) -> PyResult<String> {
    py(delta_str(a, b, t))
}

#[pyfunction]
fn hull_volume(a: &str) -> PyResult<String> {
    py(hull_volume_str(a))
}

/// Verdict report of a sharp family; `param` is t for "two-set", k for "iterated".
#[pyfunction]
#[pyo3(signature = (kind, d, param, v, grid_q = Vec::new()))]
fn sharp_family(kind: &str, d: usize, param: &str, v: Vec<String>, grid_q: Vec<u64>) -> PyResult<String> {
    py(sharp_family_json(kind, d, param, &v, &grid_q))
}

#[pyfunction]
#[pyo3(signature = (checker, seed, count, format = "csv"))]
fn sweep(checker: &str, seed: u64, count: usize, format: &str) -> PyResult<String> {
    py(sweep_text(checker, seed, count, format))
}

#[pymodule]
fn sumsetlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DEFAULT_SEED", sumsetlab_core::corpus::DEFAULT_SEED)?;
    m.add_function(wrap_pyfunction!(minkowski_sum, m)?)?;
    m.add_function(wrap_pyfunction!(iterated_sum, m)?)?;
    m.add_function(wrap_pyfunction!(delta, m)?)?;
    m.add_function(wrap_pyfunction!(hull_volume, m)?)?;
    m.add_function(wrap_pyfunction!(sharp_family, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
