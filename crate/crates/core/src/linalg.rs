//! Signature-aware linear algebra: inner product spaces, nondegenerate
//! subspaces, orthogonal complements, commutators, real generalized
//! eigenspaces, and seeded Grassmannian sampling.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Default relative degeneracy tolerance.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Retry budget for the rejection sampler.
const SAMPLER_BUDGET: usize = 1000;

/// A finite-dimensional real vector space with a nondegenerate symmetric
/// bilinear form of signature `(p, q)`: `p` negative directions, `q` positive.
#[derive(Debug, Clone)]
pub struct InnerProductSpace {
    dim: usize,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    signature: (usize, usize),
}

/// Inertia of a symmetric matrix: counts of (negative, zero, positive)
/// eigenvalues, where "zero" means `|lambda| <= tol * max|lambda|`.
pub fn inertia(sym: &DMatrix<f64>, tol: f64) -> (usize, usize, usize) {
    let eig = sym.clone().symmetric_eigenvalues();
    let scale = eig.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let cut = tol * scale.max(1e-300);
    let mut neg = 0;
    let mut zero = 0;
    let mut pos = 0;
    for &l in eig.iter() {
        if l < -cut {
            neg += 1;
        } else if l > cut {
            pos += 1;
        } else {
            zero += 1;
        }
    }
    (neg, zero, pos)
}

impl InnerProductSpace {
    /// Build a space of signature `(p, q)`. When `gram` is omitted the form is
    /// `diag(-1 x p, +1 x q)`; a supplied gram must be symmetric with the
    /// requested inertia.
    pub fn new(p: usize, q: usize, gram: Option<DMatrix<f64>>) -> Result<Self> {
        let m = p + q;
        if m == 0 {
            return Err(Error::BadParameter("p + q must be at least 1".into()));
        }
        let gram = match gram {
            None => DMatrix::from_fn(m, m, |i, j| {
                if i != j {
                    0.0
                } else if i < p {
                    -1.0
                } else {
                    1.0
                }
            }),
            Some(g) => {
                if g.nrows() != m || g.ncols() != m {
                    return Err(Error::DimensionMismatch(format!(
                        "gram is {}x{}, expected {m}x{m}",
                        g.nrows(),
                        g.ncols()
                    )));
                }
                let asym = (&g - g.transpose()).abs().max();
                if asym > 0.0 {
                    return Err(Error::BadParameter(format!(
                        "gram is not symmetric (max |G_ij - G_ji| = {asym:.3e})"
                    )));
                }
                g
            }
        };
        let (neg, zero, pos) = inertia(&gram, DEGENERACY_TOL);
        if zero > 0 {
            return Err(Error::Degenerate(format!(
                "gram has {zero} numerically zero eigenvalue(s)"
            )));
        }
        if (neg, pos) != (p, q) {
            return Err(Error::SignatureMismatch {
                want_p: p,
                want_q: q,
                found_p: neg,
                found_q: pos,
            });
        }
        let gram_inv = gram
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("gram is not invertible".into()))?;
        Ok(Self {
            dim: m,
            gram,
            gram_inv,
            signature: (p, q),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_inv(&self) -> &DMatrix<f64> {
        &self.gram_inv
    }

    /// `(p, q)` = (negative, positive) direction counts.
    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    /// The form `<x, y>` in the working basis.
    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.gram * y)[(0, 0)]
    }

    /// The whole space as a subspace on the standard basis.
    pub fn full_subspace(&self) -> Result<Subspace> {
        Subspace::from_basis(self, DMatrix::identity(self.dim, self.dim))
    }
}

/// A nondegenerate `k`-plane carried by an `m x k` basis matrix together with
/// its induced gram matrix `xi` and the inverse `xi^{ij}`.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient_dim: usize,
    basis: DMatrix<f64>,
    induced_gram: DMatrix<f64>,
    induced_gram_inv: DMatrix<f64>,
    signature: (usize, usize),
}

impl Subspace {
    /// Wrap a basis matrix, checking full column rank and nondegeneracy of the
    /// induced form.
    pub fn from_basis(space: &InnerProductSpace, basis: DMatrix<f64>) -> Result<Self> {
        let m = space.dim();
        let k = basis.ncols();
        if basis.nrows() != m {
            return Err(Error::DimensionMismatch(format!(
                "basis has {} rows, ambient dimension is {m}",
                basis.nrows()
            )));
        }
        if k == 0 || k > m {
            return Err(Error::BadParameter(format!(
                "subspace dimension {k} outside 1..={m}"
            )));
        }
        let svd = basis.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= DEGENERACY_TOL * smax {
            return Err(Error::Degenerate(
                "basis matrix does not have full column rank".into(),
            ));
        }
        let xi = basis.transpose() * space.gram() * &basis;
        let (neg, zero, pos) = inertia(&xi, DEGENERACY_TOL);
        if zero > 0 {
            return Err(Error::Degenerate(
                "induced gram of the subspace is numerically singular".into(),
            ));
        }
        let xi_inv = xi
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("induced gram is not invertible".into()))?;
        Ok(Self {
            ambient_dim: m,
            basis,
            induced_gram: xi,
            induced_gram_inv: xi_inv,
            signature: (neg, pos),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vector(&self, i: usize) -> DVector<f64> {
        self.basis.column(i).into_owned()
    }

    pub fn induced_gram(&self) -> &DMatrix<f64> {
        &self.induced_gram
    }

    pub fn induced_gram_inv(&self) -> &DMatrix<f64> {
        &self.induced_gram_inv
    }

    /// `(r, s)` inertia of the induced form.
    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    /// Euclidean orthogonal projector onto the span (used to compare
    /// subspaces independently of the chosen basis).
    pub fn projector(&self) -> DMatrix<f64> {
        let b = &self.basis;
        let bt_b = b.transpose() * b;
        let inv = bt_b.try_inverse().expect("full-rank basis");
        b * inv * b.transpose()
    }

    /// Frobenius distance between span projectors; ~0 iff same span.
    pub fn projector_distance(&self, other: &Subspace) -> f64 {
        (self.projector() - other.projector()).norm()
    }
}

/// A linear map on the ambient space, stored as its matrix in the working
/// basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    matrix: DMatrix<f64>,
}

impl LinearOperator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "operator must be square");
        Self { matrix }
    }

    pub fn zeros(m: usize) -> Self {
        Self::new(DMatrix::zeros(m, m))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(&self.matrix * c)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(&self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(&self.matrix - &other.matrix)
    }
}

/// `[a, b] = ab - ba`.
pub fn commutator(a: &LinearOperator, b: &LinearOperator) -> Result<LinearOperator> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "commutator of {}x{} and {}x{} operators",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    Ok(LinearOperator::new(
        &a.matrix * &b.matrix - &b.matrix * &a.matrix,
    ))
}

/// `pi^perp = { w : <w, v> = 0 for all v in pi }`, computed as the kernel of
/// `basis^T G` via SVD.
pub fn orthogonal_complement(space: &InnerProductSpace, pi: &Subspace) -> Result<Subspace> {
    let m = space.dim();
    let k = pi.dim();
    if pi.ambient_dim() != m {
        return Err(Error::DimensionMismatch(
            "subspace does not live in the given space".into(),
        ));
    }
    // kernel of a = B^T G via the symmetric eigenproblem of a^T a (the thin
    // SVD of a rectangular matrix does not expose the null space)
    let a = pi.basis().transpose() * space.gram();
    let ata = a.transpose() * &a;
    let eig = ata.symmetric_eigen();
    let lmax = eig.eigenvalues.max().max(0.0);
    let mut kernel_cols = Vec::new();
    for i in 0..m {
        if eig.eigenvalues[i] <= DEGENERACY_TOL * lmax {
            kernel_cols.push(i);
        }
    }
    if kernel_cols.len() != m - k {
        return Err(Error::Degenerate(format!(
            "complement construction found rank defect {} instead of {}",
            kernel_cols.len(),
            m - k
        )));
    }
    let mut basis = DMatrix::zeros(m, m - k);
    for (c, &col) in kernel_cols.iter().enumerate() {
        basis.set_column(c, &eig.eigenvectors.column(col));
    }
    // refine: project out any residual component along the columns of
    // W = G B, against which the kernel must be Euclidean-orthogonal
    let w = space.gram() * pi.basis();
    let wtw = w.transpose() * &w;
    if let Some(wtw_inv) = wtw.try_inverse() {
        for _ in 0..2 {
            let corr = &w * (&wtw_inv * (w.transpose() * &basis));
            basis -= corr;
        }
    }
    Subspace::from_basis(space, basis)
}

/// A cluster of eigenvalues treated as one: either a single (possibly
/// repeated) real value, or a conjugate complex pair represented with
/// nonnegative imaginary part. `multiplicity` counts real dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCluster {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
}

impl EigenCluster {
    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }
}

/// Cluster the eigenvalues of `op`: two eigenvalues are merged when their
/// distance is below `tol * (1 + max |lambda|)`; conjugates are folded onto
/// nonnegative imaginary part first.
pub fn cluster_eigenvalues(op: &LinearOperator, tol: f64) -> Result<Vec<EigenCluster>> {
    let eig = op.matrix.complex_eigenvalues();
    let n = eig.len();
    let maxabs = eig.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let cut = tol * (1.0 + maxabs);
    let pts: Vec<(f64, f64)> = eig.iter().map(|z| (z.re, z.im.abs())).collect();

    // union-find over pairwise closeness
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
            if d < cut {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut clusters: Vec<EigenCluster> = groups
        .values()
        .map(|idx| {
            let mult = idx.len();
            let re = idx.iter().map(|&i| pts[i].0).sum::<f64>() / mult as f64;
            let im_mean = idx.iter().map(|&i| pts[i].1).sum::<f64>() / mult as f64;
            let im = if im_mean < cut { 0.0 } else { im_mean };
            EigenCluster {
                re,
                im,
                multiplicity: mult,
            }
        })
        .collect();
    clusters.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .expect("finite eigenvalues")
    });
    for w in clusters.windows(2) {
        let d = ((w[0].re - w[1].re).powi(2) + (w[0].im - w[1].im).powi(2)).sqrt();
        if d < 0.5 * cut {
            return Err(Error::ClusterAmbiguity(format!(
                "cluster means ({}, {}) and ({}, {}) are {d:.3e} apart, cutoff {cut:.3e}",
                w[0].re, w[0].im, w[1].re, w[1].im
            )));
        }
    }
    Ok(clusters)
}

/// Real invariant-subspace decomposition `V = (+)_lambda V_lambda` into
/// generalized eigenspaces of real eigenvalues and real forms of conjugate
/// complex pairs.
pub fn real_generalized_eigenspaces(
    space: &InnerProductSpace,
    op: &LinearOperator,
    tol: f64,
) -> Result<Vec<(EigenCluster, Subspace)>> {
    let m = space.dim();
    if op.dim() != m {
        return Err(Error::DimensionMismatch(
            "operator does not act on the given space".into(),
        ));
    }
    let clusters = cluster_eigenvalues(op, tol)?;
    let op_norm = op.norm();
    let mut out = Vec::with_capacity(clusters.len());
    for cl in clusters {
        // annihilating factor for the cluster
        let base = if cl.is_real() {
            &op.matrix - DMatrix::<f64>::identity(m, m) * cl.re
        } else {
            let shifted = &op.matrix - DMatrix::<f64>::identity(m, m) * cl.re;
            &shifted * &shifted + DMatrix::<f64>::identity(m, m) * (cl.im * cl.im)
        };
        let power = if cl.is_real() {
            cl.multiplicity
        } else {
            cl.multiplicity.div_ceil(2)
        };
        let mut p = base.clone();
        for _ in 1..power {
            p = &p * &base;
        }
        // null space of p, dimension = cluster multiplicity
        let svd = p.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[a]
                .partial_cmp(&svd.singular_values[b])
                .unwrap()
        });
        let d = cl.multiplicity;
        let mut basis = DMatrix::zeros(m, d);
        for (c, &row) in order[..d].iter().enumerate() {
            for r in 0..m {
                basis[(r, c)] = v_t[(row, r)];
            }
        }
        let sub = Subspace::from_basis(space, basis)?;
        // invariance residual: op B must stay in span(B)
        let ob = &op.matrix * sub.basis();
        let proj = sub.projector();
        let resid = (&ob - proj * &ob).norm();
        if resid > tol.max(1e-12) * (1.0 + op_norm) * 100.0 {
            return Err(Error::ClusterAmbiguity(format!(
                "generalized eigenspace for ({}, {}) is not invariant (residual {resid:.3e})",
                cl.re, cl.im
            )));
        }
        out.push((cl, sub));
    }
    Ok(out)
}

/// Subspace signature request for Grassmannian sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrassmannSignature {
    pub r: usize,
    pub s: usize,
}

impl GrassmannSignature {
    pub fn new(r: usize, s: usize) -> Self {
        Self { r, s }
    }

    pub fn dim(&self) -> usize {
        self.r + self.s
    }

    pub fn is_admissible(&self, space: &InnerProductSpace) -> bool {
        let (p, q) = space.signature();
        let m = space.dim();
        self.r <= p && self.s <= q && self.dim() >= 1 && self.dim() <= m - 1
    }
}

/// All admissible `(r, s)` in lexicographic order; empty iff `m = 1`.
pub fn admissible_signatures(space: &InnerProductSpace) -> Vec<GrassmannSignature> {
    let (p, q) = space.signature();
    let mut out = Vec::new();
    for r in 0..=p {
        for s in 0..=q {
            let sig = GrassmannSignature::new(r, s);
            if sig.is_admissible(space) {
                out.push(sig);
            }
        }
    }
    out
}

/// Draw a random nondegenerate subspace of the requested signature.
/// Deterministic for a fixed seed; rejection-resamples on degeneracy.
pub fn grassmann_sample(
    space: &InnerProductSpace,
    sig: GrassmannSignature,
    seed: u64,
) -> Result<Subspace> {
    if !sig.is_admissible(space) {
        return Err(Error::BadParameter(format!(
            "signature ({}, {}) is not admissible in a ({}, {}) space",
            sig.r,
            sig.s,
            space.signature().0,
            space.signature().1
        )));
    }
    let m = space.dim();
    let k = sig.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let draw = |rng: &mut ChaCha8Rng| DVector::from_fn(m, |_, _| normal.sample(rng));

    let mut attempts = 0usize;
    'outer: while attempts < SAMPLER_BUDGET {
        // build a G-orthogonal frame with r timelike then s spacelike pivots
        let mut frame: Vec<DVector<f64>> = Vec::with_capacity(k);
        let mut norms: Vec<f64> = Vec::with_capacity(k);
        for slot in 0..k {
            let want_neg = slot < sig.r;
            let mut found = false;
            for _ in 0..50 {
                attempts += 1;
                if attempts >= SAMPLER_BUDGET {
                    break 'outer;
                }
                let mut v = draw(&mut rng);
                for (u, &un) in frame.iter().zip(&norms) {
                    let c = space.inner(&v, u) / un;
                    v -= u * c;
                }
                let q = space.inner(&v, &v);
                // insist on a definitely timelike/spacelike pivot, not one
                // hugging the null cone, so downstream inversions of the
                // induced gram stay well conditioned
                if q.abs() > 1e-2 * v.norm_squared().max(1e-30) && (q < 0.0) == want_neg {
                    frame.push(v);
                    norms.push(q);
                    found = true;
                    break;
                }
            }
            if !found {
                continue 'outer;
            }
        }
        // mix the frame with a random well-conditioned k x k matrix so the
        // stored basis is generic rather than orthogonal
        let mix = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                1.0
            } else {
                0.25 * <StandardNormal as Distribution<f64>>::sample(&normal, &mut rng)
            }
        });
        let mut basis = DMatrix::zeros(m, k);
        for (c, v) in frame.iter().enumerate() {
            basis.set_column(c, v);
        }
        let mixed = &basis * mix;
        if let Ok(sub) = Subspace::from_basis(space, mixed) {
            if sub.signature() == (sig.r, sig.s) {
                // reject ill-conditioned induced grams; they make J(pi) and
                // complements needlessly inaccurate
                let eigs = sub.induced_gram().symmetric_eigenvalues();
                let max = eigs.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
                let min = eigs.iter().fold(f64::INFINITY, |a, &e| a.min(e.abs()));
                if min > 1e-4 * max {
                    return Ok(sub);
                }
            }
        }
    }
    Err(Error::SamplerExhausted(SAMPLER_BUDGET))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn euclid(m: usize) -> InnerProductSpace {
        InnerProductSpace::new(0, m, None).unwrap()
    }

    #[test]
    fn default_grams() {
        let s = euclid(3);
        assert_eq!(s.gram(), &DMatrix::identity(3, 3));
        let l = InnerProductSpace::new(1, 2, None).unwrap();
        assert_eq!(
            l.gram(),
            &DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0]))
        );
    }

    #[test]
    fn custom_gram_inertia() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        // eigenvalues 1 and 3: inertia (0, 2)
        let s = InnerProductSpace::new(0, 2, Some(g)).unwrap();
        assert_eq!(s.signature(), (0, 2));
    }

    #[test]
    fn gram_inertia_mismatch() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        match InnerProductSpace::new(1, 1, Some(g)) {
            Err(Error::SignatureMismatch { .. }) => {}
            other => panic!("expected SignatureMismatch, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_gram_rejected() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            InnerProductSpace::new(0, 2, Some(g)),
            Err(Error::Degenerate(_)) | Err(Error::SignatureMismatch { .. })
        ));
    }

    #[test]
    fn commutator_hand_case() {
        let a = LinearOperator::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]));
        let b = LinearOperator::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let c = commutator(&a, &b).unwrap();
        assert_eq!(
            c.matrix(),
            &DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 0.0, 0.0])
        );
    }

    #[test]
    fn commutator_identity_and_mismatch() {
        let i = LinearOperator::new(DMatrix::identity(3, 3));
        let x = LinearOperator::new(DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64));
        assert_eq!(commutator(&i, &x).unwrap().norm(), 0.0);
        let y = LinearOperator::zeros(2);
        assert!(matches!(
            commutator(&i, &y),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn complement_euclidean_coordinate() {
        let s = euclid(3);
        let pi =
            Subspace::from_basis(&s, DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0])).unwrap();
        let perp = orthogonal_complement(&s, &pi).unwrap();
        assert_eq!(perp.dim(), 2);
        let expected = Subspace::from_basis(
            &s,
            DMatrix::from_column_slice(3, 2, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        assert!(perp.projector_distance(&expected) < 1e-12);
    }

    #[test]
    fn complement_lorentz_hand_case() {
        let s = InnerProductSpace::new(1, 1, None).unwrap();
        // pi = span{e1 + 2 e2} is spacelike: <v,v> = -1 + 4 = 3
        let pi = Subspace::from_basis(&s, DMatrix::from_column_slice(2, 1, &[1.0, 2.0])).unwrap();
        assert_eq!(pi.signature(), (0, 1));
        let perp = orthogonal_complement(&s, &pi).unwrap();
        assert_eq!(perp.signature(), (1, 0));
        // complement should span {2 e1 + e2}: cross term -2 + 2 = 0
        let expected =
            Subspace::from_basis(&s, DMatrix::from_column_slice(2, 1, &[2.0, 1.0])).unwrap();
        assert!(perp.projector_distance(&expected) < 1e-10);
    }

    #[test]
    fn complement_double_is_identity_and_orthogonal() {
        let s = InnerProductSpace::new(1, 3, None).unwrap();
        for seed in 0..50 {
            for sig in admissible_signatures(&s) {
                let pi = grassmann_sample(&s, sig, seed).unwrap();
                let perp = orthogonal_complement(&s, &pi).unwrap();
                for i in 0..pi.dim() {
                    for j in 0..perp.dim() {
                        let ip = s.inner(&pi.basis_vector(i), &perp.basis_vector(j));
                        assert!(ip.abs() < 1e-10, "not G-orthogonal: {ip}");
                    }
                }
                let back = orthogonal_complement(&s, &perp).unwrap();
                let d = back.projector_distance(&pi);
                assert!(d < 1e-9, "seed {seed} sig {sig:?}: distance {d}");
            }
        }
    }

    #[test]
    fn eigenspaces_diagonal() {
        let s = euclid(3);
        let op = LinearOperator::new(DMatrix::from_diagonal(&DVector::from_vec(vec![
            3.0, 1.0, 2.0,
        ])));
        let blocks = real_generalized_eigenspaces(&s, &op, 1e-9).unwrap();
        assert_eq!(blocks.len(), 3);
        let vals: Vec<f64> = blocks.iter().map(|(c, _)| c.re).collect();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
        for (_, sub) in &blocks {
            assert_eq!(sub.dim(), 1);
        }
    }

    #[test]
    fn eigenspaces_complex_pair() {
        let s = euclid(2);
        let op = LinearOperator::new(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let blocks = real_generalized_eigenspaces(&s, &op, 1e-9).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].1.dim(), 2);
        assert_abs_diff_eq!(blocks[0].0.re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(blocks[0].0.im, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigenspaces_jordan_block() {
        let s = euclid(2);
        let op = LinearOperator::new(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
        let blocks = real_generalized_eigenspaces(&s, &op, 1e-9).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].1.dim(), 2);
        assert!(blocks[0].0.is_real());
        assert_abs_diff_eq!(blocks[0].0.re, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn eigenspace_blocks_partition_and_invariance() {
        let s = euclid(4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = DMatrix::from_fn(4, 4, |_, _| {
                <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            });
            let op = LinearOperator::new(a);
            let blocks = match real_generalized_eigenspaces(&s, &op, 1e-7) {
                Ok(b) => b,
                // random matrices occasionally have genuinely ambiguous clusters
                Err(Error::ClusterAmbiguity(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            let total: usize = blocks.iter().map(|(_, b)| b.dim()).sum();
            assert_eq!(total, 4);
            for (_, sub) in &blocks {
                let ob = op.matrix() * sub.basis();
                let resid = (&ob - sub.projector() * &ob).norm();
                assert!(resid < 1e-6 * (1.0 + op.norm()), "residual {resid}");
            }
        }
    }

    #[test]
    fn admissible_enumeration() {
        let e3 = euclid(3);
        let sigs: Vec<(usize, usize)> = admissible_signatures(&e3)
            .iter()
            .map(|s| (s.r, s.s))
            .collect();
        assert_eq!(sigs, vec![(0, 1), (0, 2)]);

        let l3 = InnerProductSpace::new(1, 2, None).unwrap();
        let sigs: Vec<(usize, usize)> = admissible_signatures(&l3)
            .iter()
            .map(|s| (s.r, s.s))
            .collect();
        assert_eq!(sigs, vec![(0, 1), (0, 2), (1, 0), (1, 1)]);

        let e1 = euclid(1);
        assert!(admissible_signatures(&e1).is_empty());
    }

    #[test]
    fn sampler_signature_and_determinism() {
        let e4 = euclid(4);
        let pi = grassmann_sample(&e4, GrassmannSignature::new(0, 2), 7).unwrap();
        assert_eq!(pi.signature(), (0, 2));
        let (neg, zero, pos) = inertia(pi.induced_gram(), 1e-12);
        assert_eq!((neg, zero, pos), (0, 0, 2));

        let l4 = InnerProductSpace::new(1, 3, None).unwrap();
        let pi = grassmann_sample(&l4, GrassmannSignature::new(1, 1), 1).unwrap();
        assert_eq!(pi.signature(), (1, 1));

        let a = grassmann_sample(&l4, GrassmannSignature::new(1, 1), 42).unwrap();
        let b = grassmann_sample(&l4, GrassmannSignature::new(1, 1), 42).unwrap();
        assert_eq!(a.basis(), b.basis());
    }

    #[test]
    fn sampler_inertia_sweep() {
        for m in 2..=8usize {
            for p in 0..=1usize {
                if p > m {
                    continue;
                }
                let space = InnerProductSpace::new(p, m - p, None).unwrap();
                for sig in admissible_signatures(&space) {
                    for seed in 0..40u64 {
                        let pi = grassmann_sample(&space, sig, seed).unwrap();
                        assert_eq!(pi.signature(), (sig.r, sig.s), "m={m} p={p} seed={seed}");
                    }
                }
            }
        }
    }

    #[test]
    fn induced_gram_inverse_identity() {
        let l4 = InnerProductSpace::new(1, 3, None).unwrap();
        let pi = grassmann_sample(&l4, GrassmannSignature::new(1, 1), 5).unwrap();
        let prod = pi.induced_gram() * pi.induced_gram_inv();
        assert!((prod - DMatrix::identity(2, 2)).norm() < 1e-10);
    }
}
