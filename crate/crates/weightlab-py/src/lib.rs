//! Python bindings for the weightlab toolkit: weights behind the
//! average/integral oracle, tails with certified truncation, constant
//! estimators, maximal operators and the decomposition algorithms.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use weightlab::geometry::{self, Cube, GridSet};
use weightlab::maximal;
use weightlab::sawyer;
use weightlab::tails;
use weightlab::weights::{self, GalleryParams, GridWeight};

fn err(e: weightlab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cube_from(center: Vec<f64>, half_side: f64) -> PyResult<Cube> {
    let dim = center.len();
    let mut c = [0.0; 2];
    for (i, v) in center.iter().enumerate().take(2) {
        c[i] = *v;
    }
    Cube::new(dim, c, half_side).map_err(err)
}

fn tail_dict<'py>(py: Python<'py>, t: &tails::TailReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", t.value)?;
    d.set_item("truncation_bound", t.truncation_bound)?;
    d.set_item("terms_used", t.terms_used)?;
    Ok(d)
}

fn estimate_dict<'py>(
    py: Python<'py>,
    e: &tails::ConstantEstimate,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", e.value)?;
    d.set_item("upper", e.upper)?;
    d.set_item("family_size", e.family_size)?;
    d.set_item("skipped", e.skipped)?;
    d.set_item("argmax_center", e.argmax_cube.center().to_vec())?;
    d.set_item("argmax_half_side", e.argmax_cube.half_side())?;
    d.set_item("refinement_trace", e.refinement_trace.clone())?;
    Ok(d)
}

/// A non-negative locally integrable weight behind average/integral
/// oracles.
#[pyclass(name = "Weight")]
struct PyWeight {
    inner: weights::Weight,
}

#[pymethods]
impl PyWeight {
    /// w ≡ value (default 1) on all of R^n.
    #[staticmethod]
    #[pyo3(signature = (dim, value = 1.0))]
    fn constant(dim: usize, value: f64) -> PyResult<Self> {
        Ok(PyWeight { inner: weights::Weight::constant(dim, value).map_err(err)? })
    }

    /// w(x) = |x|^a (L-infinity norm in dimension 2), a > -n.
    #[staticmethod]
    fn power(dim: usize, exponent: f64) -> PyResult<Self> {
        Ok(PyWeight { inner: weights::Weight::power(dim, exponent).map_err(err)? })
    }

    /// Gallery weights: constant, power_eps, ap_times_bump, vanishing_patch.
    #[staticmethod]
    #[pyo3(signature = (name, dim = 1, p = 2.0, eps = 0.5))]
    fn gallery(name: &str, dim: usize, p: f64, eps: f64) -> PyResult<Self> {
        Ok(PyWeight { inner: weights::gallery(name, dim, GalleryParams { p, eps }).map_err(err)? })
    }

    /// Piecewise-constant grid weight on [lo, hi)^n (row-major cell values
    /// for n = 2), zero outside.
    #[staticmethod]
    fn from_grid(dim: usize, lo: f64, hi: f64, resolution: usize, values: Vec<f64>) -> PyResult<Self> {
        let boxc = if dim == 1 {
            Cube::interval(lo, hi).map_err(err)?
        } else {
            Cube::square((lo + hi) / 2.0, (lo + hi) / 2.0, (hi - lo) / 2.0).map_err(err)?
        };
        Ok(PyWeight { inner: weights::Weight::grid(GridWeight::new(boxc, resolution, values).map_err(err)?) })
    }

    fn id(&self) -> String {
        self.inner.id().to_string()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// (1/|Q|) ∫_Q w over the cube with this center and half-side.
    fn avg(&self, center: Vec<f64>, half_side: f64) -> PyResult<f64> {
        Ok(self.inner.avg(&cube_from(center, half_side)?))
    }

    /// ∫_Q w.
    fn integral(&self, center: Vec<f64>, half_side: f64) -> PyResult<f64> {
        Ok(self.inner.integral(&cube_from(center, half_side)?))
    }

    /// (1/|Q|) ∫_Q w^r.
    fn pow_avg(&self, r: f64, center: Vec<f64>, half_side: f64) -> PyResult<f64> {
        self.inner.pow_avg(r, &cube_from(center, half_side)?).map_err(err)
    }

    /// Discrete tail a_{C_p}(Q) = Σ 2^{-n(p-1)k}·avg(w, 2^k Q) with a
    /// certified truncation bound.
    #[pyo3(signature = (center, half_side, p, tol = 1e-9))]
    fn discrete_tail<'py>(
        &self,
        py: Python<'py>,
        center: Vec<f64>,
        half_side: f64,
        p: f64,
        tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let t =
            tails::discrete_tail(&self.inner, &cube_from(center, half_side)?, p, tol).map_err(err)?;
        tail_dict(py, &t)
    }

    /// Dilation tail a_{C_p,s}(Q) for 1 < s <= 2.
    #[pyo3(signature = (center, half_side, p, s, tol = 1e-9))]
    fn discrete_tail_s<'py>(
        &self,
        py: Python<'py>,
        center: Vec<f64>,
        half_side: f64,
        p: f64,
        s: f64,
        tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let t = tails::discrete_tail_s(&self.inner, &cube_from(center, half_side)?, p, s, tol)
            .map_err(err)?;
        tail_dict(py, &t)
    }

    /// Continuous tail ∫ (Mχ_Q)^p w as a certified interval.
    #[pyo3(signature = (center, half_side, p, tol = 1e-9))]
    fn continuous_tail<'py>(
        &self,
        py: Python<'py>,
        center: Vec<f64>,
        half_side: f64,
        p: f64,
        tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let t = tails::continuous_tail(&self.inner, &cube_from(center, half_side)?, p, tol)
            .map_err(err)?;
        tail_dict(py, &t)
    }

    /// A-infinity constant estimate over the dyadic family of the ambient
    /// box [lo, hi)^n.
    #[pyo3(signature = (lo = -2.0, hi = 2.0, depth = 6, resolution = 1024, tol = 1e-9))]
    fn ainfty_constant<'py>(
        &self,
        py: Python<'py>,
        lo: f64,
        hi: f64,
        depth: u32,
        resolution: usize,
        tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let (family, cfg) = family_and_cfg(self.inner.dim(), lo, hi, depth, resolution, tol)?;
        let e = tails::ainfty_constant(&self.inner, &family, &cfg).map_err(err)?;
        estimate_dict(py, &e)
    }

    /// C_p constant estimate (certified-adverse lower value and optimistic
    /// upper endpoint).
    #[pyo3(signature = (p, lo = -2.0, hi = 2.0, depth = 6, resolution = 1024, tol = 1e-9))]
    fn cp_constant<'py>(
        &self,
        py: Python<'py>,
        p: f64,
        lo: f64,
        hi: f64,
        depth: u32,
        resolution: usize,
        tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let (family, cfg) = family_and_cfg(self.inner.dim(), lo, hi, depth, resolution, tol)?;
        let e = tails::cp_constant(&self.inner, p, &family, &cfg).map_err(err)?;
        estimate_dict(py, &e)
    }

    /// C_{p,s} constant estimate.
    #[pyo3(signature = (p, s, lo = -2.0, hi = 2.0, depth = 6, resolution = 1024, tol = 1e-9))]
    fn cps_constant<'py>(
        &self,
        py: Python<'py>,
        p: f64,
        s: f64,
        lo: f64,
        hi: f64,
        depth: u32,
        resolution: usize,
        tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let (family, cfg) = family_and_cfg(self.inner.dim(), lo, hi, depth, resolution, tol)?;
        let e = tails::cps_constant(&self.inner, p, s, &family, &cfg).map_err(err)?;
        estimate_dict(py, &e)
    }

    /// Maximal dyadic subcubes of Q where the average exceeds lambda;
    /// returns (level, ix, iy, average) tuples.
    fn cz_decompose(
        &self,
        center: Vec<f64>,
        half_side: f64,
        lambda: f64,
        max_depth: u32,
    ) -> PyResult<Vec<(u32, u64, u64, f64)>> {
        let root = cube_from(center, half_side)?;
        let w = &self.inner;
        let avg = |q: &Cube| w.avg(q);
        let cubes = geometry::cz_decompose(&avg, &root, lambda, max_depth).map_err(err)?;
        Ok(cubes
            .iter()
            .map(|d| (d.level, d.index[0], d.index[1], w.avg(&d.realize(&root))))
            .collect())
    }
}

fn family_and_cfg(
    dim: usize,
    lo: f64,
    hi: f64,
    depth: u32,
    resolution: usize,
    tol: f64,
) -> PyResult<(geometry::CubeFamily, tails::EstimatorConfig)> {
    let ambient = if dim == 1 {
        Cube::interval(lo, hi).map_err(err)?
    } else {
        Cube::square((lo + hi) / 2.0, (lo + hi) / 2.0, (hi - lo) / 2.0).map_err(err)?
    };
    let family = geometry::enumerate_dyadic(&ambient, depth).map_err(err)?;
    Ok((family, tails::EstimatorConfig { ambient, resolution, tol }))
}

/// Exact Hardy–Littlewood maximal function of a cube indicator at a point.
#[pyfunction]
fn m_chi_cube(center: Vec<f64>, half_side: f64, x: Vec<f64>) -> PyResult<f64> {
    let q = cube_from(center, half_side)?;
    let mut p = [0.0; 2];
    for (i, v) in x.iter().enumerate().take(2) {
        p[i] = *v;
    }
    Ok(maximal::m_chi_cube(&q, p))
}

/// Grid Hardy–Littlewood maximal function of cell values on [lo, hi).
#[pyfunction]
fn hl_maximal(values: Vec<f64>, lo: f64, hi: f64) -> PyResult<Vec<f64>> {
    let boxc = Cube::interval(lo, hi).map_err(err)?;
    let n = values.len();
    let f = maximal::GridFunction::new(boxc, n, values).map_err(err)?;
    Ok(maximal::hl_maximal(&f).values().to_vec())
}

/// Maximally truncated Hilbert transform of cell values on [lo, hi).
#[pyfunction]
fn truncated_hilbert_maximal(values: Vec<f64>, lo: f64, hi: f64) -> PyResult<Vec<f64>> {
    let boxc = Cube::interval(lo, hi).map_err(err)?;
    let n = values.len();
    let f = maximal::GridFunction::new(boxc, n, values).map_err(err)?;
    Ok(sawyer::truncated_hilbert_maximal(&f).map_err(err)?.values().to_vec())
}

/// Whitney decomposition of a union of grid cells of [lo, hi); returns
/// (level, ix, iy, ratio) tuples in the unit-box dyadic indexing.
#[pyfunction]
#[pyo3(signature = (mask, lo, hi, r = 1.0))]
fn whitney_decompose(mask: Vec<bool>, lo: f64, hi: f64, r: f64) -> PyResult<Vec<(u32, u64, u64, f64)>> {
    let boxc = Cube::interval(lo, hi).map_err(err)?;
    let n = mask.len();
    let omega = GridSet::new(boxc, n, mask).map_err(err)?;
    let cubes = geometry::whitney_decompose(&omega, r, None).map_err(err)?;
    Ok(cubes.iter().map(|w| (w.cube.level, w.cube.index[0], w.cube.index[1], w.ratio)).collect())
}

/// The explicit theorem constants at (n, p, s) and a weight constant value.
#[pyfunction]
#[pyo3(signature = (n, p, s = None, value = 1.0))]
fn theorem_constants<'py>(
    py: Python<'py>,
    n: usize,
    p: f64,
    s: Option<f64>,
    value: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let tc = tails::theorem_constants(n, p, s, value).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("alpha", tc.alpha)?;
    d.set_item("beta", tc.beta)?;
    d.set_item("b_const", tc.b_const)?;
    d.set_item("a_const", tc.a_const)?;
    d.set_item("a_sp", tc.a_sp)?;
    d.set_item("delta_rhi_cp", tc.delta_rhi_cp)?;
    d.set_item("delta_rhi_ainfty", tc.delta_rhi_ainfty)?;
    d.set_item("delta_dilation", tc.delta_dilation)?;
    d.set_item("epsilon_remark", tc.epsilon_remark)?;
    Ok(d)
}

/// Φ(t) = t·log(e + t), the quantification factor of the weighted norm
/// inequality.
#[pyfunction]
fn phi(t: f64) -> f64 {
    sawyer::phi(t)
}

#[pymodule]
fn weightlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWeight>()?;
    m.add_function(wrap_pyfunction!(m_chi_cube, m)?)?;
    m.add_function(wrap_pyfunction!(hl_maximal, m)?)?;
    m.add_function(wrap_pyfunction!(truncated_hilbert_maximal, m)?)?;
    m.add_function(wrap_pyfunction!(whitney_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_constants, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
