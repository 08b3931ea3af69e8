//! Numerical Riemannian geometry of coordinate charts: Christoffel symbols,
//! the curvature model at a point, scalar curvature, covariant Hessians,
//! geodesics, and scalar-curvature blowup fitting, together with two built-in
//! metric families (a warped cone over a conformal surface and a sheared
//! four-dimensional family with one free parameter).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{eval_jet2, Expr, Func};
use crate::linalg::{inertia, InnerProductSpace, DEGENERACY_TOL};
use crate::model::{scalar_curvature_of_model, AlgCurvTensor, Model0};

/// A coordinate chart: `n x n` symmetric array of component expressions
/// `g_ij(x)` over an open box domain.
#[derive(Debug, Clone)]
pub struct MetricChart {
    dim: usize,
    /// Row-major `n * n`; kept symmetric by construction.
    components: Vec<Expr>,
    domain: Vec<(f64, f64)>,
    label: String,
}

impl MetricChart {
    /// Build a chart from the upper triangle of `components`; the lower
    /// triangle is mirrored so the expression array is symmetric by
    /// construction.
    pub fn new(
        components: Vec<Vec<Expr>>,
        domain: Vec<(f64, f64)>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(Error::BadParameter("chart dimension must be positive".into()));
        }
        if components.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch(
                "metric component array is not square".into(),
            ));
        }
        if domain.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "domain has {} intervals for a {n}-coordinate chart",
                domain.len()
            )));
        }
        for &(lo, hi) in &domain {
            if !(lo < hi) {
                return Err(Error::BadParameter(format!(
                    "empty domain interval ({lo}, {hi})"
                )));
            }
        }
        let mut flat = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                let e = &components[a][b];
                if e.min_vars() > n {
                    return Err(Error::VariableOutOfRange {
                        index: e.min_vars(),
                        n_vars: n,
                    });
                }
                flat.push(e.clone());
            }
        }
        Ok(Self {
            dim: n,
            components: flat,
            domain,
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[i * self.dim + j]
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim
            && self
                .domain
                .iter()
                .zip(x.iter())
                .all(|(&(lo, hi), &xi)| lo < xi && xi < hi)
    }

    fn require_inside(&self, x: &DVector<f64>) -> Result<()> {
        if !self.contains(x) {
            return Err(Error::Domain {
                subtree: self.label.clone(),
                message: format!("point {:?} outside the chart domain", x.as_slice()),
            });
        }
        Ok(())
    }
}

/// Metric value together with all first and second coordinate derivatives.
struct MetricJets {
    g: DMatrix<f64>,
    /// `dg[a][(i, j)] = d_a g_ij`
    dg: Vec<DMatrix<f64>>,
    /// `d2g[a][b][(i, j)] = d_a d_b g_ij`
    d2g: Vec<Vec<DMatrix<f64>>>,
}

fn metric_jets(chart: &MetricChart, x: &DVector<f64>) -> Result<MetricJets> {
    let n = chart.dim();
    let mut g = DMatrix::zeros(n, n);
    let mut dg = vec![DMatrix::zeros(n, n); n];
    let mut d2g = vec![vec![DMatrix::zeros(n, n); n]; n];
    for i in 0..n {
        for j in i..n {
            let jet = eval_jet2(chart.component(i, j), x)?;
            g[(i, j)] = jet.value;
            g[(j, i)] = jet.value;
            for a in 0..n {
                dg[a][(i, j)] = jet.grad[a];
                dg[a][(j, i)] = jet.grad[a];
                for b in 0..n {
                    d2g[a][b][(i, j)] = jet.hess[(a, b)];
                    d2g[a][b][(j, i)] = jet.hess[(a, b)];
                }
            }
        }
    }
    Ok(MetricJets { g, dg, d2g })
}

/// Metric matrix `g(x)`.
pub fn metric_at(chart: &MetricChart, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    chart.require_inside(x)?;
    Ok(metric_jets(chart, x)?.g)
}

fn invert_metric(g: &DMatrix<f64>, label: &str) -> Result<DMatrix<f64>> {
    let (_, zero, _) = inertia(g, DEGENERACY_TOL);
    if zero > 0 {
        return Err(Error::Degenerate(format!(
            "metric of `{label}` is singular at the queried point"
        )));
    }
    g.clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate(format!("metric of `{label}` is not invertible")))
}

fn christoffel_from_jets(jets: &MetricJets, ginv: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let n = jets.g.nrows();
    let mut gamma = vec![DMatrix::zeros(n, n); n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for l in 0..n {
                    let c = jets.dg[i][(j, l)] + jets.dg[j][(i, l)] - jets.dg[l][(i, j)];
                    acc += ginv[(k, l)] * c;
                }
                gamma[k][(i, j)] = 0.5 * acc;
                gamma[k][(j, i)] = 0.5 * acc;
            }
        }
    }
    gamma
}

/// Christoffel symbols of the Levi-Civita connection; `result[k][(i, j)]`
/// is `Gamma^k_ij`, symmetric in `(i, j)`.
pub fn christoffel(chart: &MetricChart, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
    chart.require_inside(x)?;
    let jets = metric_jets(chart, x)?;
    let ginv = invert_metric(&jets.g, chart.label())?;
    Ok(christoffel_from_jets(&jets, &ginv))
}

/// The curvature 0-model at a point: tangent space with gram `g(x)` and the
/// Riemann tensor `R_{ijkl} = <R(d_i, d_j) d_k, d_l>` for the convention
/// `R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z`.
pub fn riemann_model_at(chart: &MetricChart, x: &DVector<f64>) -> Result<Model0> {
    chart.require_inside(x)?;
    let n = chart.dim();
    let jets = metric_jets(chart, x)?;
    let ginv = invert_metric(&jets.g, chart.label())?;
    let gamma = christoffel_from_jets(&jets, &ginv);

    // d ginv = -ginv (d g) ginv
    let dginv: Vec<DMatrix<f64>> = (0..n).map(|a| -(&ginv * &jets.dg[a] * &ginv)).collect();

    // dgamma[a][k][(i, j)] = d_a Gamma^k_ij
    let mut dgamma = vec![vec![DMatrix::zeros(n, n); n]; n];
    for a in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        let c = jets.dg[i][(j, l)] + jets.dg[j][(i, l)] - jets.dg[l][(i, j)];
                        let dc = jets.d2g[a][i][(j, l)] + jets.d2g[a][j][(i, l)]
                            - jets.d2g[a][l][(i, j)];
                        acc += dginv[a][(k, l)] * c + ginv[(k, l)] * dc;
                    }
                    dgamma[a][k][(i, j)] = 0.5 * acc;
                    dgamma[a][k][(j, i)] = 0.5 * acc;
                }
            }
        }
    }

    let mut tensor = AlgCurvTensor::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                // R(d_i, d_j) d_k = coeff^m d_m
                for l in 0..n {
                    let mut r = 0.0;
                    for m in 0..n {
                        let mut coeff = dgamma[i][m][(j, k)] - dgamma[j][m][(i, k)];
                        for p in 0..n {
                            coeff += gamma[m][(i, p)] * gamma[p][(j, k)]
                                - gamma[m][(j, p)] * gamma[p][(i, k)];
                        }
                        r += jets.g[(m, l)] * coeff;
                    }
                    tensor.set(i, j, k, l, r);
                }
            }
        }
    }

    let (neg, zero, pos) = inertia(&jets.g, DEGENERACY_TOL);
    if zero > 0 {
        return Err(Error::Degenerate(format!(
            "metric of `{}` is singular at the queried point",
            chart.label()
        )));
    }
    let space = InnerProductSpace::new(neg, pos, Some(jets.g))?;
    Model0::new(space, tensor.symmetrized())
}

/// Scalar curvature `tau(x)`, the double contraction of the Riemann tensor
/// against the inverse metric.
pub fn scalar_curvature_at(chart: &MetricChart, x: &DVector<f64>) -> Result<f64> {
    scalar_curvature_of_model(&riemann_model_at(chart, x)?)
}

/// Covariant Hessian `H_ij = d_i d_j f - Gamma^k_ij d_k f` at a point.
pub fn covariant_hessian(chart: &MetricChart, f: &Expr, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    chart.require_inside(x)?;
    let n = chart.dim();
    if f.min_vars() > n {
        return Err(Error::VariableOutOfRange {
            index: f.min_vars(),
            n_vars: n,
        });
    }
    let jet = eval_jet2(f, x)?;
    let gamma = christoffel(chart, x)?;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut v = jet.hess[(i, j)];
            for k in 0..n {
                v -= gamma[k][(i, j)] * jet.grad[k];
            }
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

// ---------------------------------------------------------------------------
// built-in metric families
// ---------------------------------------------------------------------------

/// Conformal factor exponent for a round 2-sphere of the given radius in
/// stereographic coordinates: `alpha = ln(2 r) - ln(1 + x1^2 + x2^2)`, so that
/// `e^{2 alpha} (dx1^2 + dx2^2)` has Gaussian curvature `1 / r^2`.
pub fn sphere_alpha(radius: f64) -> Expr {
    let r2 = Expr::var(0)
        .pow(2.0)
        .add(Expr::var(1).pow(2.0))
        .add(Expr::num(1.0));
    Expr::call(Func::Ln, Expr::num(2.0 * radius)).sub(Expr::call(Func::Ln, r2))
}

/// Two-dimensional chart `e^{2 alpha} (dx1^2 + dx2^2)` for a conformal factor
/// exponent `alpha(x1, x2)`.
pub fn conformal_surface_chart(alpha: &Expr) -> Result<MetricChart> {
    if alpha.min_vars() > 2 {
        return Err(Error::VariableOutOfRange {
            index: alpha.min_vars(),
            n_vars: 2,
        });
    }
    let factor = Expr::call(Func::Exp, Expr::num(2.0).mul(alpha.clone()));
    MetricChart::new(
        vec![
            vec![factor.clone(), Expr::num(0.0)],
            vec![Expr::num(0.0), factor],
        ],
        vec![(f64::NEG_INFINITY, f64::INFINITY); 2],
        "conformal-surface",
    )
}

/// Warped cone over a conformal surface: coordinates `(t, x1, x2)` with
/// `g = dt^2 + t^2 e^{2 alpha(x1, x2)} (dx1^2 + dx2^2)` on
/// `(t_min, inf) x R^2`.
pub fn cone_chart(alpha: &Expr, t_min: f64, label: impl Into<String>) -> Result<MetricChart> {
    if alpha.min_vars() > 2 {
        return Err(Error::VariableOutOfRange {
            index: alpha.min_vars(),
            n_vars: 2,
        });
    }
    if !(t_min > 0.0) {
        return Err(Error::BadParameter("t_min must be positive".into()));
    }
    // fiber coordinates are chart coordinates 2 and 3
    let shifted = alpha.shift_vars(1);
    let fiber = Expr::var(0)
        .pow(2.0)
        .mul(Expr::call(Func::Exp, Expr::num(2.0).mul(shifted)));
    let zero = Expr::num(0.0);
    MetricChart::new(
        vec![
            vec![Expr::num(1.0), zero.clone(), zero.clone()],
            vec![zero.clone(), fiber.clone(), zero.clone()],
            vec![zero.clone(), zero.clone(), fiber],
        ],
        vec![
            (t_min, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
        ],
        label,
    )
}

/// Sheared four-dimensional family: coordinates `(x1, x2, x3, x4)` with
/// `g = 2 diag(1, 1, x1^2, (x1 + beta x2)^2)` on `(0, inf)^2 x R^2`.
/// Requires `beta > 0`.
///
/// In this normalization the only curvature component (up to symmetries) is
/// `R_3443` and the scalar curvature is `-1 / (x1 (x1 + beta x2))`; the
/// constant overall factor does not affect Christoffel symbols or geodesics.
pub fn sheared_chart(beta: f64) -> Result<MetricChart> {
    if !(beta > 0.0) {
        return Err(Error::BadParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let zero = Expr::num(0.0);
    let two = Expr::num(2.0);
    let g33 = two.clone().mul(Expr::var(0).pow(2.0));
    let g44 = two
        .clone()
        .mul(Expr::var(0).add(Expr::num(beta).mul(Expr::var(1))).pow(2.0));
    MetricChart::new(
        vec![
            vec![two.clone(), zero.clone(), zero.clone(), zero.clone()],
            vec![zero.clone(), two, zero.clone(), zero.clone()],
            vec![zero.clone(), zero.clone(), g33, zero.clone()],
            vec![zero.clone(), zero.clone(), zero.clone(), g44],
        ],
        vec![
            (0.0, f64::INFINITY),
            (0.0, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
        ],
        format!("sheared-beta-{beta}"),
    )
}

/// Closed-form scalar curvature magnitude of the sheared family,
/// `1 / (x1 (x1 + beta x2))`.
pub fn sheared_tau(beta: f64, x: &DVector<f64>) -> f64 {
    1.0 / (x[0] * (x[0] + beta * x[1]))
}

/// Isometry invariant of the sheared family: the determinant of the covariant
/// Hessian of `-ln|tau|` restricted to the `(x1, x2)` block, divided by
/// `tau^2`. Independent of the evaluation point for fixed `beta` and strictly
/// monotone in `beta`.
pub fn shear_invariant(beta: f64, x: &DVector<f64>) -> Result<f64> {
    let chart = sheared_chart(beta)?;
    chart.require_inside(x)?;
    // -ln|tau| = ln x1 + ln(x1 + beta x2)
    let psi = Expr::call(Func::Ln, Expr::var(0)).add(Expr::call(
        Func::Ln,
        Expr::var(0).add(Expr::num(beta).mul(Expr::var(1))),
    ));
    let h = covariant_hessian(&chart, &psi, x)?;
    let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
    let tau = sheared_tau(beta, x);
    Ok(det / (tau * tau))
}

// ---------------------------------------------------------------------------
// geodesics and blowup
// ---------------------------------------------------------------------------

/// A sampled geodesic: positions, velocities, and scalar curvature along the
/// curve. `truncated` is set when the integrator left the chart domain before
/// `t_end`.
#[derive(Debug, Clone)]
pub struct GeodesicTrace {
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub velocities: Vec<DVector<f64>>,
    pub scalar_curvatures: Vec<f64>,
    pub truncated: bool,
}

impl GeodesicTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Columnar text table: time, coordinates, scalar curvature; one row per
    /// sample.
    pub fn table(&self) -> String {
        let n = self.points.first().map_or(0, |p| p.len());
        let mut out = String::new();
        out.push_str("# time");
        for i in 1..=n {
            out.push_str(&format!(" x{i}"));
        }
        out.push_str(" tau\n");
        for row in 0..self.len() {
            out.push_str(&format!("{:.12e}", self.times[row]));
            for i in 0..n {
                out.push_str(&format!(" {:.12e}", self.points[row][i]));
            }
            out.push_str(&format!(" {:.12e}\n", self.scalar_curvatures[row]));
        }
        out
    }
}

/// Integrate `x'' = -Gamma(x)(x', x')` with the classical fourth-order
/// one-step method at a fixed step, recording scalar curvature along the
/// trace. Leaving the domain stops the integration and sets the truncation
/// flag instead of failing.
pub fn geodesic(
    chart: &MetricChart,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    t_end: f64,
    step: f64,
) -> Result<GeodesicTrace> {
    chart.require_inside(x0)?;
    if !(step > 0.0) {
        return Err(Error::BadParameter("step must be positive".into()));
    }
    let n = chart.dim();
    if v0.len() != n {
        return Err(Error::DimensionMismatch(
            "initial velocity length does not match the chart".into(),
        ));
    }

    let accel = |x: &DVector<f64>, v: &DVector<f64>| -> Result<Option<DVector<f64>>> {
        if !chart.contains(x) {
            return Ok(None);
        }
        let gamma = christoffel(chart, x)?;
        let mut a = DVector::zeros(n);
        for k in 0..n {
            a[k] = -(v.transpose() * &gamma[k] * v)[(0, 0)];
        }
        Ok(Some(a))
    };

    let mut times = Vec::new();
    let mut points = Vec::new();
    let mut velocities = Vec::new();
    let mut taus = Vec::new();
    let mut truncated = false;

    let mut t = 0.0;
    let mut x = x0.clone();
    let mut v = v0.clone();
    let n_steps = (t_end / step).floor() as usize;

    let mut record =
        |t: f64, x: &DVector<f64>, v: &DVector<f64>, taus: &mut Vec<f64>| -> Result<()> {
            times.push(t);
            points.push(x.clone());
            velocities.push(v.clone());
            taus.push(scalar_curvature_at(chart, x)?);
            Ok(())
        };
    record(t, &x, &v, &mut taus)?;

    'steps: for _ in 0..n_steps {
        let h = step;
        // RK4 stages on the first-order system (x, v)
        let mut kx = [DVector::zeros(n), DVector::zeros(n), DVector::zeros(n), DVector::zeros(n)];
        let mut kv = kx.clone();
        let offsets = [0.0, 0.5, 0.5, 1.0];
        for s in 0..4 {
            let (xs, vs) = if s == 0 {
                (x.clone(), v.clone())
            } else {
                (
                    &x + &kx[s - 1] * (h * offsets[s]),
                    &v + &kv[s - 1] * (h * offsets[s]),
                )
            };
            match accel(&xs, &vs)? {
                Some(a) => {
                    kx[s] = vs;
                    kv[s] = a;
                }
                None => {
                    truncated = true;
                    break 'steps;
                }
            }
        }
        x += (&kx[0] + &kx[1] * 2.0 + &kx[2] * 2.0 + &kx[3]) * (h / 6.0);
        v += (&kv[0] + &kv[1] * 2.0 + &kv[2] * 2.0 + &kv[3]) * (h / 6.0);
        t += h;
        if !chart.contains(&x) {
            truncated = true;
            break;
        }
        record(t, &x, &v, &mut taus)?;
    }

    Ok(GeodesicTrace {
        times,
        points,
        velocities,
        scalar_curvatures: taus,
        truncated,
    })
}

/// Result of the log-log blowup fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupFit {
    /// Least-squares slope of `ln|tau|` against the log of the
    /// distance-to-singularity coordinate.
    pub exponent: f64,
    /// Root-mean-square regression residual.
    pub residual: f64,
    /// Index of the coordinate used as the distance parameter.
    pub coordinate: usize,
    pub samples_used: usize,
    /// Set when `exponent <= -0.9` with a small residual.
    pub blowup: bool,
}

/// Fit `ln|tau| ~ a + b ln d` over the final decade of the strictly
/// decreasing positive coordinate with the largest dynamic range (the
/// distance-to-singularity parameter of the trace).
pub fn blowup_exponent(trace: &GeodesicTrace) -> Result<BlowupFit> {
    let n_pts = trace.len();
    if n_pts < 8 {
        return Err(Error::InsufficientSamples(format!(
            "trace has {n_pts} samples, need at least 8"
        )));
    }
    let max_tau = trace
        .scalar_curvatures
        .iter()
        .fold(0.0f64, |a, &t| a.max(t.abs()));
    if max_tau < 1e-12 {
        return Err(Error::ZeroCurvature);
    }

    let dim = trace.points[0].len();
    let mut best: Option<(usize, f64)> = None;
    for c in 0..dim {
        let series: Vec<f64> = trace.points.iter().map(|p| p[c]).collect();
        let decreasing = series.windows(2).all(|w| w[1] < w[0]);
        let last = *series.last().unwrap();
        if decreasing && last > 0.0 {
            let range = (series[0] / last).ln();
            if best.is_none_or(|(_, r)| range > r) {
                best = Some((c, range));
            }
        }
    }
    let (coord, _) = best.ok_or_else(|| {
        Error::InsufficientSamples(
            "no strictly decreasing positive coordinate to use as the distance parameter".into(),
        )
    })?;

    let d_last = trace.points.last().unwrap()[coord];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n_pts {
        let d = trace.points[i][coord];
        let tau = trace.scalar_curvatures[i].abs();
        if d <= 10.0 * d_last && tau > 1e-12 {
            xs.push(d.ln());
            ys.push(tau.ln());
        }
    }
    if xs.len() < 8 {
        return Err(Error::InsufficientSamples(format!(
            "only {} usable samples in the final decade",
            xs.len()
        )));
    }

    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (icept + slope * x);
            e * e
        })
        .sum();
    let residual = (ss / n).sqrt();

    Ok(BlowupFit {
        exponent: slope,
        residual,
        coordinate: coord,
        samples_used: xs.len(),
        blowup: slope <= -0.9 && residual < 1e-2,
    })
}
