//! Python bindings: inner-product spaces, curvature models, the
//! commuting-Jacobi checks and block decomposition, metric charts, geodesics,
//! and the expression jet evaluator.
//!
//! Matrices cross the boundary as nested `list[list[float]]` and vectors as
//! `list[float]`; indices are 0-based throughout, unlike the 1-based CLI file
//! format.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use curvmodels_core::commuting::{
    check_commuting_on_grassmannian, classify_block, decompose, is_jacobi_commuting, BlockClass,
};
use curvmodels_core::expr::{eval_jet2, parse};
use curvmodels_core::geometry::{
    blowup_exponent, cone_chart, geodesic, metric_at, riemann_model_at, scalar_curvature_at,
    shear_invariant, sheared_chart, sheared_tau, GeodesicTrace, MetricChart,
};
use curvmodels_core::linalg::{GrassmannSignature, InnerProductSpace};
use curvmodels_core::model::{
    constant_curvature_model, direct_sum, higher_jacobi, jacobi, ricci, scalar_curvature_of_model,
    AlgCurvTensor, Model0,
};

fn err(e: curvmodels_core::error::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let m = rows.len();
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(PyValueError::new_err("rows have unequal lengths"));
    }
    let n = rows.first().map_or(0, |r| r.len());
    Ok(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
}

fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// An inner-product space of signature (p, q): p negative and q positive
/// directions, with an optional explicit gram matrix.
#[pyclass(name = "Space", frozen)]
struct PySpace {
    inner: InnerProductSpace,
}

#[pymethods]
impl PySpace {
    #[new]
    #[pyo3(signature = (p, q, gram=None))]
    fn new(p: usize, q: usize, gram: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let gram = gram.as_deref().map(to_matrix).transpose()?;
        Ok(Self {
            inner: InnerProductSpace::new(p, q, gram).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn signature(&self) -> (usize, usize) {
        self.inner.signature()
    }

    fn gram(&self) -> Vec<Vec<f64>> {
        from_matrix(self.inner.gram())
    }

    fn inner(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.dim() || y.len() != self.inner.dim() {
            return Err(PyValueError::new_err("vector length != space dimension"));
        }
        Ok(self.inner.inner(&to_vector(&x), &to_vector(&y)))
    }

    fn __repr__(&self) -> String {
        let (p, q) = self.inner.signature();
        format!("Space(p={p}, q={q})")
    }
}

fn class_dict<'py>(py: Python<'py>, class: &BlockClass) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    match class {
        BlockClass::Einstein { lambda } => {
            d.set_item("class", "einstein")?;
            d.set_item("eigenvalue", (*lambda, 0.0))?;
        }
        BlockClass::PseudoEinstein { eigenvalue } => {
            d.set_item("class", "pseudo_einstein")?;
            d.set_item("eigenvalue", (eigenvalue.re, eigenvalue.im))?;
        }
        BlockClass::Neither { witness } => {
            d.set_item("class", "neither")?;
            d.set_item(
                "eigenvalues",
                vec![(witness.0.re, witness.0.im), (witness.1.re, witness.1.im)],
            )?;
        }
    }
    Ok(d)
}

/// An algebraic curvature model: a space plus a 4-tensor with the usual
/// curvature symmetries, completed from a sparse list of generators.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: Model0,
}

#[pymethods]
impl PyModel {
    /// Build from 0-based generators `(i, j, k, l, value)`; the symmetry
    /// orbit of each generator is filled in automatically.
    #[new]
    fn new(space: &PySpace, generators: Vec<(usize, usize, usize, usize, f64)>) -> PyResult<Self> {
        let tensor =
            AlgCurvTensor::from_components(space.inner.dim(), &generators).map_err(err)?;
        Ok(Self {
            inner: Model0::new(space.inner.clone(), tensor).map_err(err)?,
        })
    }

    /// Space form of constant sectional curvature `c`.
    #[staticmethod]
    #[pyo3(signature = (p, q, c, gram=None))]
    fn constant_curvature(p: usize, q: usize, c: f64, gram: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let gram = gram.as_deref().map(to_matrix).transpose()?;
        let space = InnerProductSpace::new(p, q, gram).map_err(err)?;
        Ok(Self {
            inner: constant_curvature_model(&space, c),
        })
    }

    /// Orthogonal direct sum of two models.
    #[staticmethod]
    fn direct_sum(a: &PyModel, b: &PyModel) -> PyResult<Self> {
        Ok(Self {
            inner: direct_sum(&a.inner, &b.inner).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn signature(&self) -> (usize, usize) {
        self.inner.space().signature()
    }

    /// Curvature component A(e_i, e_j, e_k, e_l), 0-based.
    fn component(&self, i: usize, j: usize, k: usize, l: usize) -> PyResult<f64> {
        let n = self.inner.dim();
        if [i, j, k, l].iter().any(|&a| a >= n) {
            return Err(PyValueError::new_err(format!("index out of range 0..{n}")));
        }
        Ok(self.inner.tensor().get(i, j, k, l))
    }

    /// Matrix of the Jacobi operator J(v) in the working basis.
    fn jacobi(&self, v: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let op = jacobi(&self.inner, &to_vector(&v)).map_err(err)?;
        Ok(from_matrix(op.matrix()))
    }

    /// Higher-order Jacobi operator of the span of the given vectors.
    fn higher_jacobi(&self, basis: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let cols = to_matrix(&basis)?.transpose();
        let pi = curvmodels_core::linalg::Subspace::from_basis(self.inner.space(), cols)
            .map_err(err)?;
        let op = higher_jacobi(&self.inner, &pi).map_err(err)?;
        Ok(from_matrix(op.matrix()))
    }

    /// Matrix of the Ricci operator.
    fn ricci(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(from_matrix(ricci(&self.inner).map_err(err)?.matrix()))
    }

    fn scalar_curvature(&self) -> PyResult<f64> {
        scalar_curvature_of_model(&self.inner).map_err(err)
    }

    /// Deterministic commuting-Jacobi verdict with the worst commutator norm
    /// and the governing tolerance scale.
    #[pyo3(signature = (tol=1e-8))]
    fn is_commuting(&self, tol: f64) -> PyResult<(bool, f64, f64)> {
        let rep = is_jacobi_commuting(&self.inner, tol).map_err(err)?;
        Ok((rep.verdict, rep.max_commutator_norm, rep.tol_scale))
    }

    /// Monte-Carlo commuting check over sampled planes of signature (r, s).
    #[pyo3(signature = (r, s, samples=50, seed=0, tol=1e-6))]
    fn sample_commuting(
        &self,
        r: usize,
        s: usize,
        samples: usize,
        seed: u64,
        tol: f64,
    ) -> PyResult<(bool, f64, f64)> {
        let rep = check_commuting_on_grassmannian(
            &self.inner,
            GrassmannSignature::new(r, s),
            samples,
            seed,
            tol,
        )
        .map_err(err)?;
        Ok((rep.verdict, rep.max_commutator_norm, rep.tol_scale))
    }

    /// Classification of the whole model by its Ricci eigenstructure, as a
    /// dict with keys `class` and `eigenvalue`/`eigenvalues`.
    #[pyo3(signature = (tol=1e-8))]
    fn classify<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyDict>> {
        class_dict(py, &classify_block(&self.inner, tol).map_err(err)?)
    }

    /// Block decomposition along the Ricci generalized eigenspaces; one dict
    /// per block (`dimension`, `signature`, `class`, eigenvalue data, and the
    /// `basis` columns in ambient coordinates).
    #[pyo3(signature = (tol=1e-8))]
    fn decompose<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let dec = decompose(&self.inner, tol).map_err(err)?;
        let mut out = Vec::with_capacity(dec.blocks.len());
        for b in &dec.blocks {
            let d = class_dict(py, &b.class)?;
            d.set_item("dimension", b.subspace.dim())?;
            d.set_item("signature", b.subspace.signature())?;
            d.set_item("basis", from_matrix(&b.subspace.basis().transpose()))?;
            out.push(d);
        }
        Ok(out)
    }

    fn __repr__(&self) -> String {
        let (p, q) = self.inner.space().signature();
        format!("Model(dim={}, signature=({p}, {q}))", self.inner.dim())
    }
}

/// A sampled geodesic with scalar curvature along the curve.
#[pyclass(name = "Trace", frozen)]
struct PyTrace {
    inner: GeodesicTrace,
}

#[pymethods]
impl PyTrace {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        self.inner.points.iter().map(|p| p.iter().copied().collect()).collect()
    }

    #[getter]
    fn velocities(&self) -> Vec<Vec<f64>> {
        self.inner
            .velocities
            .iter()
            .map(|p| p.iter().copied().collect())
            .collect()
    }

    #[getter]
    fn scalar_curvatures(&self) -> Vec<f64> {
        self.inner.scalar_curvatures.clone()
    }

    #[getter]
    fn truncated(&self) -> bool {
        self.inner.truncated
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Columnar text table: time, coordinates, scalar curvature.
    fn table(&self) -> String {
        self.inner.table()
    }

    /// Log-log fit of |tau| against the shrinking coordinate; returns a dict
    /// with `exponent`, `residual`, `coordinate`, `samples_used`, `blowup`.
    fn blowup<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let fit = blowup_exponent(&self.inner).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("exponent", fit.exponent)?;
        d.set_item("residual", fit.residual)?;
        d.set_item("coordinate", fit.coordinate)?;
        d.set_item("samples_used", fit.samples_used)?;
        d.set_item("blowup", fit.blowup)?;
        Ok(d)
    }
}

/// A coordinate chart with symbolic metric components over a box domain.
#[pyclass(name = "Chart", frozen)]
struct PyChart {
    inner: MetricChart,
    /// Shear parameter when built by `Chart.sheared`, for the closed forms.
    beta: Option<f64>,
}

#[pymethods]
impl PyChart {
    /// Build from expression strings in variables `x1..xn` (e.g. `"x1^2"`),
    /// one row per coordinate, with per-coordinate interval bounds (`None`
    /// for unbounded ends).
    #[new]
    fn new(
        components: Vec<Vec<String>>,
        domain: Vec<(Option<f64>, Option<f64>)>,
    ) -> PyResult<Self> {
        let n = components.len();
        let mut rows = Vec::with_capacity(n);
        for r in &components {
            if r.len() != n {
                return Err(PyValueError::new_err("components must be square"));
            }
            let row: Result<Vec<_>, _> = r.iter().map(|s| parse(s, n)).collect();
            rows.push(row.map_err(err)?);
        }
        let domain = domain
            .into_iter()
            .map(|(lo, hi)| (lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY)))
            .collect();
        Ok(Self {
            inner: MetricChart::new(rows, domain, "custom").map_err(err)?,
            beta: None,
        })
    }

    /// Warped product over a conformally flat surface fiber: coordinates
    /// `(t, x1, x2)`, with `alpha` an expression in `x1, x2`.
    #[staticmethod]
    #[pyo3(signature = (alpha, t_min=0.01))]
    fn cone(alpha: &str, t_min: f64) -> PyResult<Self> {
        let alpha = parse(alpha, 2).map_err(err)?;
        Ok(Self {
            inner: cone_chart(&alpha, t_min, "cone").map_err(err)?,
            beta: None,
        })
    }

    /// The four-dimensional sheared product family with parameter `beta > 0`.
    #[staticmethod]
    fn sheared(beta: f64) -> PyResult<Self> {
        Ok(Self {
            inner: sheared_chart(beta).map_err(err)?,
            beta: Some(beta),
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn contains(&self, x: Vec<f64>) -> bool {
        self.inner.contains(&to_vector(&x))
    }

    fn metric(&self, x: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(from_matrix(&metric_at(&self.inner, &to_vector(&x)).map_err(err)?))
    }

    fn scalar_curvature(&self, x: Vec<f64>) -> PyResult<f64> {
        scalar_curvature_at(&self.inner, &to_vector(&x)).map_err(err)
    }

    /// Pointwise curvature model (space + tensor) at `x`.
    fn model(&self, x: Vec<f64>) -> PyResult<PyModel> {
        Ok(PyModel {
            inner: riemann_model_at(&self.inner, &to_vector(&x)).map_err(err)?,
        })
    }

    /// Integrate the geodesic from `x0` with initial velocity `v0`.
    #[pyo3(signature = (x0, v0, t_end, step=1e-3))]
    fn geodesic(&self, x0: Vec<f64>, v0: Vec<f64>, t_end: f64, step: f64) -> PyResult<PyTrace> {
        Ok(PyTrace {
            inner: geodesic(&self.inner, &to_vector(&x0), &to_vector(&v0), t_end, step)
                .map_err(err)?,
        })
    }

    /// Closed-form |tau| for the sheared family at `x` (sheared charts only).
    fn sheared_scalar_curvature(&self, x: Vec<f64>) -> PyResult<f64> {
        let beta = self
            .beta
            .ok_or_else(|| PyValueError::new_err("not a sheared chart"))?;
        Ok(sheared_tau(beta, &to_vector(&x)))
    }

    /// The scale-invariant second-order quantity of the sheared family
    /// (constant, equal to beta^2) at `x` (sheared charts only).
    fn shear_invariant(&self, x: Vec<f64>) -> PyResult<f64> {
        let beta = self
            .beta
            .ok_or_else(|| PyValueError::new_err("not a sheared chart"))?;
        shear_invariant(beta, &to_vector(&x)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Chart(label={:?}, dim={})", self.inner.label(), self.inner.dim())
    }
}

/// Parse an expression in `x1..xn` (n inferred from the point) and return
/// `(value, gradient, hessian)` at `point`.
#[pyfunction]
fn jet(text: &str, point: Vec<f64>) -> PyResult<(f64, Vec<f64>, Vec<Vec<f64>>)> {
    let expr = parse(text, point.len()).map_err(err)?;
    let j = eval_jet2(&expr, &to_vector(&point)).map_err(err)?;
    Ok((j.value, j.grad.iter().copied().collect(), from_matrix(&j.hess)))
}

#[pymodule]
fn curvmodels(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpace>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyChart>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(jet, m)?)?;
    Ok(())
}
