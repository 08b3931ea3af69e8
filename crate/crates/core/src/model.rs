//! Algebraic curvature tensors and the Jacobi-type operators built from them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{inertia, InnerProductSpace, LinearOperator, Subspace, DEGENERACY_TOL};

/// Dense rank-4 tensor with the Riemann symmetries, `A(v1,v2,v3,v4)` stored in
/// the working basis.
#[derive(Debug, Clone)]
pub struct AlgCurvTensor {
    dim: usize,
    entries: Vec<f64>,
}

/// Max absolute violation of each curvature identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    /// `A(i,j,k,l) + A(j,i,k,l)`
    pub antisym_12: f64,
    /// `A(i,j,k,l) - A(k,l,i,j)`
    pub pair: f64,
    /// `A(i,j,k,l) + A(j,k,i,l) + A(k,i,j,l)`
    pub bianchi: f64,
}

impl SymmetryReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.antisym_12 < tol && self.pair < tol && self.bianchi < tol
    }
}

impl AlgCurvTensor {
    /// Wrap raw entries without validating any identity. Use
    /// [`AlgCurvTensor::validate_symmetries`] to inspect the result.
    pub fn from_raw(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim * dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for dim {dim}, got {}",
                dim * dim * dim * dim,
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![0.0; dim * dim * dim * dim],
        }
    }

    /// Complete a list of generators `(i, j, k, l, value)` (0-based) by the
    /// pair symmetry and antisymmetries, then validate the Bianchi identity.
    pub fn from_components(dim: usize, generators: &[(usize, usize, usize, usize, f64)]) -> Result<Self> {
        let mut t = Self::zeros(dim);
        let mut set = vec![false; dim * dim * dim * dim];
        for &(i, j, k, l, value) in generators {
            if i >= dim || j >= dim || k >= dim || l >= dim {
                return Err(Error::DimensionMismatch(format!(
                    "generator index ({i},{j},{k},{l}) out of range for dim {dim}"
                )));
            }
            // orbit under the symmetry group
            let orbit = [
                (i, j, k, l, value),
                (j, i, k, l, -value),
                (i, j, l, k, -value),
                (j, i, l, k, value),
                (k, l, i, j, value),
                (l, k, i, j, -value),
                (k, l, j, i, -value),
                (l, k, j, i, value),
            ];
            for (a, b, c, d, v) in orbit {
                let idx = t.flat(a, b, c, d);
                if set[idx] && (t.entries[idx] - v).abs() > 1e-12 {
                    return Err(Error::SymmetryConflict {
                        i: a,
                        j: b,
                        k: c,
                        l: d,
                        a: t.entries[idx],
                        b: v,
                    });
                }
                t.entries[idx] = v;
                set[idx] = true;
            }
        }
        let report = t.validate_symmetries();
        if report.bianchi > 1e-12 {
            return Err(Error::BianchiViolation(report.bianchi));
        }
        Ok(t)
    }

    #[inline]
    fn flat(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.dim + j) * self.dim + k) * self.dim + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.entries[self.flat(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let idx = self.flat(i, j, k, l);
        self.entries[idx] = v;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
    }

    /// Max violation of antisymmetry, pair symmetry, and the first Bianchi
    /// identity; a tensor passes iff all are below 1e-12.
    pub fn validate_symmetries(&self) -> SymmetryReport {
        let m = self.dim;
        let mut antisym_12 = 0.0f64;
        let mut pair = 0.0f64;
        let mut bianchi = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let a = self.get(i, j, k, l);
                        antisym_12 = antisym_12.max((a + self.get(j, i, k, l)).abs());
                        pair = pair.max((a - self.get(k, l, i, j)).abs());
                        bianchi = bianchi
                            .max((a + self.get(j, k, i, l) + self.get(k, i, j, l)).abs());
                    }
                }
            }
        }
        SymmetryReport {
            antisym_12,
            pair,
            bianchi,
        }
    }

    /// Average over the symmetry orbit; removes rounding-level asymmetry from
    /// tensors assembled numerically.
    pub fn symmetrized(&self) -> Self {
        let m = self.dim;
        let mut out = Self::zeros(m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let v = (self.get(i, j, k, l) - self.get(j, i, k, l)
                            - self.get(i, j, l, k)
                            + self.get(j, i, l, k)
                            + self.get(k, l, i, j)
                            - self.get(l, k, i, j)
                            - self.get(k, l, j, i)
                            + self.get(l, k, j, i))
                            / 8.0;
                        out.set(i, j, k, l, v);
                    }
                }
            }
        }
        out
    }

    /// Change of basis: `A'(a,b,c,d) = A(Qa, Qb, Qc, Qd)` where the columns of
    /// `q` are the new basis vectors. Contracted one slot at a time.
    pub fn transform(&self, q: &DMatrix<f64>) -> Result<Self> {
        let m = self.dim;
        if q.nrows() != m {
            return Err(Error::DimensionMismatch(
                "basis-change matrix row count does not match tensor dimension".into(),
            ));
        }
        let n = q.ncols();
        // contract successive slots; intermediate shapes (n,m,m,m) .. (n,n,n,n)
        let mut cur = self.entries.clone();
        let mut dims = [m, m, m, m];
        for slot in 0..4 {
            let d_new = n;
            let d_old = dims[slot];
            let stride_after: usize = dims[slot + 1..].iter().product();
            let count_before: usize = dims[..slot].iter().product();
            let mut next =
                vec![0.0; count_before * d_new * stride_after];
            for b in 0..count_before {
                for a_new in 0..d_new {
                    for rest in 0..stride_after {
                        let mut acc = 0.0;
                        for a_old in 0..d_old {
                            acc += q[(a_old, a_new)]
                                * cur[(b * d_old + a_old) * stride_after + rest];
                        }
                        next[(b * d_new + a_new) * stride_after + rest] = acc;
                    }
                }
            }
            cur = next;
            dims[slot] = d_new;
        }
        Ok(Self {
            dim: n,
            entries: cur,
        })
    }
}

/// A 0-model: a space together with an algebraic curvature tensor.
#[derive(Debug, Clone)]
pub struct Model0 {
    space: InnerProductSpace,
    tensor: AlgCurvTensor,
}

impl Model0 {
    /// Pair a space with a tensor, enforcing the curvature identities at
    /// tolerance `1e-12 * (1 + max|A|)`.
    pub fn new(space: InnerProductSpace, tensor: AlgCurvTensor) -> Result<Self> {
        if space.dim() != tensor.dim() {
            return Err(Error::DimensionMismatch(format!(
                "space dim {} vs tensor dim {}",
                space.dim(),
                tensor.dim()
            )));
        }
        let report = tensor.validate_symmetries();
        let tol = 1e-12 * (1.0 + tensor.max_abs());
        if !report.passes(tol) {
            return Err(Error::BianchiViolation(
                report.antisym_12.max(report.pair).max(report.bianchi),
            ));
        }
        Ok(Self { space, tensor })
    }

    pub fn space(&self) -> &InnerProductSpace {
        &self.space
    }

    pub fn tensor(&self) -> &AlgCurvTensor {
        &self.tensor
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

/// `A(x,y,z,w) = c (<x,w><y,z> - <x,z><y,w>)` in the working basis.
pub fn constant_curvature_model(space: &InnerProductSpace, c: f64) -> Model0 {
    let m = space.dim();
    let g = space.gram();
    let mut t = AlgCurvTensor::zeros(m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    t.set(i, j, k, l, c * (g[(i, l)] * g[(j, k)] - g[(i, k)] * g[(j, l)]));
                }
            }
        }
    }
    Model0::new(space.clone(), t).expect("constant curvature tensor satisfies the identities")
}

/// `A(x,y,z,w) = phi(x,w) phi(y,z) - phi(x,z) phi(y,w)` for a symmetric
/// bilinear form `phi`; always an algebraic curvature tensor.
pub fn symmetric_form_tensor(phi: &DMatrix<f64>) -> AlgCurvTensor {
    let m = phi.nrows();
    let mut t = AlgCurvTensor::zeros(m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    t.set(
                        i,
                        j,
                        k,
                        l,
                        phi[(i, l)] * phi[(j, k)] - phi[(i, k)] * phi[(j, l)],
                    );
                }
            }
        }
    }
    t
}

/// Orthogonal direct sum of two models: block-diagonal gram, block tensor,
/// zero on all mixed index groups.
pub fn direct_sum(a: &Model0, b: &Model0) -> Result<Model0> {
    let ma = a.dim();
    let mb = b.dim();
    let m = ma + mb;
    let mut gram = DMatrix::zeros(m, m);
    gram.view_mut((0, 0), (ma, ma)).copy_from(a.space().gram());
    gram.view_mut((ma, ma), (mb, mb)).copy_from(b.space().gram());
    let (pa, qa) = a.space().signature();
    let (pb, qb) = b.space().signature();
    let space = InnerProductSpace::new(pa + pb, qa + qb, Some(gram))?;

    let mut t = AlgCurvTensor::zeros(m);
    for i in 0..ma {
        for j in 0..ma {
            for k in 0..ma {
                for l in 0..ma {
                    t.set(i, j, k, l, a.tensor().get(i, j, k, l));
                }
            }
        }
    }
    for i in 0..mb {
        for j in 0..mb {
            for k in 0..mb {
                for l in 0..mb {
                    t.set(ma + i, ma + j, ma + k, ma + l, b.tensor().get(i, j, k, l));
                }
            }
        }
    }
    Model0::new(space, t)
}

fn check_vector(m: &Model0, v: &DVector<f64>) -> Result<()> {
    if v.len() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} vs model dimension {}",
            v.len(),
            m.dim()
        )));
    }
    Ok(())
}

/// The curvature operator `A(v1, v2)` defined by
/// `<A(v1,v2) v3, v4> = A(v1,v2,v3,v4)`.
pub fn curvature_operator(
    m: &Model0,
    v1: &DVector<f64>,
    v2: &DVector<f64>,
) -> Result<LinearOperator> {
    check_vector(m, v1)?;
    check_vector(m, v2)?;
    let n = m.dim();
    let t = m.tensor();
    // b[k][l] = A(v1, v2, e_k, e_l)
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        let x = v1[i];
        if x == 0.0 {
            continue;
        }
        for j in 0..n {
            let xy = x * v2[j];
            if xy == 0.0 {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    b[(k, l)] += xy * t.get(i, j, k, l);
                }
            }
        }
    }
    // <M e_k, e_l> = (G M)_{l k} must equal b[k][l]
    Ok(LinearOperator::new(m.space().gram_inv() * b.transpose()))
}

/// The Jacobi operator `J(v)` defined by `<J(v) w, u> = A(w, v, v, u)`;
/// self-adjoint with respect to the gram form, quadratic in `v`.
pub fn jacobi(m: &Model0, v: &DVector<f64>) -> Result<LinearOperator> {
    check_vector(m, v)?;
    let n = m.dim();
    let t = m.tensor();
    // c[w][u] = A(w, v, v, u); symmetric
    let mut c = DMatrix::zeros(n, n);
    for a in 0..n {
        let va = v[a];
        if va == 0.0 {
            continue;
        }
        for b in 0..n {
            let vab = va * v[b];
            if vab == 0.0 {
                continue;
            }
            for w in 0..n {
                for u in 0..n {
                    c[(w, u)] += vab * t.get(w, a, b, u);
                }
            }
        }
    }
    Ok(LinearOperator::new(m.space().gram_inv() * c))
}

/// Polarized Jacobi operator, the symmetric bilinear extension of `J`:
/// `J(v1, v2) = (J(v1 + v2) - J(v1) - J(v2)) / 2`.
pub fn jacobi_polarized(
    m: &Model0,
    v1: &DVector<f64>,
    v2: &DVector<f64>,
) -> Result<LinearOperator> {
    let sum = jacobi(m, &(v1 + v2))?;
    let a = jacobi(m, v1)?;
    let b = jacobi(m, v2)?;
    Ok(sum.sub(&a).sub(&b).scale(0.5))
}

/// Higher-order Jacobi operator
/// `J(pi) = sum_{i,j} xi^{ij} J(v_i, v_j)` over the stored basis of `pi`;
/// independent of the basis chosen.
pub fn higher_jacobi(m: &Model0, pi: &Subspace) -> Result<LinearOperator> {
    if pi.ambient_dim() != m.dim() {
        return Err(Error::DimensionMismatch(
            "subspace does not live in the model's space".into(),
        ));
    }
    let k = pi.dim();
    let xi_inv = pi.induced_gram_inv();
    let mut acc = LinearOperator::zeros(m.dim());
    for i in 0..k {
        let vi = pi.basis_vector(i);
        for j in i..k {
            let weight = if i == j { xi_inv[(i, i)] } else { 2.0 * xi_inv[(i, j)] };
            if weight == 0.0 {
                continue;
            }
            let vj = pi.basis_vector(j);
            let jp = jacobi_polarized(m, &vi, &vj)?;
            acc = acc.add(&jp.scale(weight));
        }
    }
    Ok(acc)
}

/// Ricci operator `rho = J(V)`.
pub fn ricci(m: &Model0) -> Result<LinearOperator> {
    let full = m.space().full_subspace()?;
    higher_jacobi(m, &full)
}

/// Scalar curvature `tau = sum g^{jk} g^{il} A_{ijkl}`, i.e. the trace of the
/// Ricci operator.
pub fn scalar_curvature_of_model(m: &Model0) -> Result<f64> {
    Ok(ricci(m)?.trace())
}

/// Span of `{ A(e_i, e_j) e_k }` over all index triples, or `None` for the
/// zero tensor.
pub fn curvature_range(m: &Model0) -> Result<Option<Subspace>> {
    let n = m.dim();
    let scale = m.tensor().max_abs();
    if scale < 1e-300 {
        return Ok(None);
    }
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let ei = DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 });
            let ej = DVector::from_fn(n, |r, _| if r == j { 1.0 } else { 0.0 });
            let op = curvature_operator(m, &ei, &ej)?;
            for k in 0..n {
                cols.push(op.matrix().column(k).into_owned());
            }
        }
    }
    let mut mat = DMatrix::zeros(n, cols.len());
    for (c, v) in cols.iter().enumerate() {
        mat.set_column(c, v);
    }
    let svd = mat.svd(true, false);
    let smax = svd.singular_values.max();
    if smax < DEGENERACY_TOL * (1.0 + scale) {
        return Ok(None);
    }
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > DEGENERACY_TOL * smax)
        .count();
    let u = svd.u.expect("requested U");
    let basis = u.columns(0, rank).into_owned();
    Ok(Some(Subspace::from_basis(m.space(), basis)?))
}

/// Inertia helper re-export for callers working with induced grams.
pub fn gram_inertia(g: &DMatrix<f64>) -> (usize, usize, usize) {
    inertia(g, DEGENERACY_TOL)
}
