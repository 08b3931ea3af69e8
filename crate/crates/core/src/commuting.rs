//! Checks for the commuting-Jacobi property
//! `J(pi) J(pi^perp) = J(pi^perp) J(pi)` and the associated decomposition of a
//! model into Einstein / pseudo-Einstein blocks along the Ricci eigenspaces.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    cluster_eigenvalues, commutator, grassmann_sample, orthogonal_complement,
    real_generalized_eigenspaces, EigenCluster, GrassmannSignature, InnerProductSpace, Subspace,
};
use crate::model::{higher_jacobi, jacobi_polarized, ricci, Model0};

/// Which finite criterion produced a [`CommutingReport`].
#[derive(Debug, Clone, PartialEq)]
pub enum CheckKind {
    /// Deterministic check over all working-basis pairs `(e_i, e_j)`.
    BasisPairs,
    /// Monte-Carlo check over sampled planes of one Grassmannian signature.
    SampledPlanes {
        signature: GrassmannSignature,
        requested: usize,
        drawn: usize,
    },
}

/// Where the worst commutator was attained.
#[derive(Debug, Clone)]
pub enum Witness {
    BasisPair(usize, usize),
    Plane(Subspace),
}

/// Outcome of a commuting-Jacobi check. The verdict is
/// `max_commutator_norm < tol_scale`.
#[derive(Debug, Clone)]
pub struct CommutingReport {
    pub verdict: bool,
    pub kind: CheckKind,
    pub max_commutator_norm: f64,
    pub tol_scale: f64,
    pub witness: Option<Witness>,
}

/// Classification of one decomposition block.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockClass {
    /// Ricci operator is `lambda * I` on the block.
    Einstein { lambda: f64 },
    /// Ricci operator has a single real eigenvalue (possibly defective) or a
    /// single conjugate pair, but is not scalar.
    PseudoEinstein { eigenvalue: EigenCluster },
    /// At least two distinct eigenvalue clusters; the first two are the
    /// witness.
    Neither {
        witness: (EigenCluster, EigenCluster),
    },
}

impl BlockClass {
    /// Einstein or pseudo-Einstein.
    pub fn is_at_least_pseudo_einstein(&self) -> bool {
        !matches!(self, BlockClass::Neither { .. })
    }
}

/// One block of a decomposition: the subspace in the ambient basis, the
/// restricted sub-model, and its classification.
#[derive(Debug, Clone)]
pub struct Block {
    pub subspace: Subspace,
    pub model: Model0,
    pub class: BlockClass,
}

/// Orthogonal decomposition of a model along the generalized eigenspaces of
/// its Ricci operator.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub blocks: Vec<Block>,
    /// Largest `|A|` entry spanning two distinct blocks, measured in the
    /// concatenated block basis.
    pub cross_term_max: f64,
}

/// Violation maxima for the cross-block identities on a decomposition:
/// `antisym_23` is the `A(x1,x2,x3,x4) + A(x1,x3,x2,x4)` residual over tuples
/// with `lambda_1 != lambda_4`, and `cross` is `|A(x1,x2,x3,x4)|` over tuples
/// with `lambda_1 != lambda_4` and `lambda_2 != lambda_4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSymmetryReport {
    pub antisym_23: f64,
    pub cross: f64,
}

/// Homogeneity-aware tolerance scale: `tol * (1 + |rho|_F * |A|_inf)`.
fn tol_scale(m: &Model0, rho_norm: f64, tol: f64) -> f64 {
    tol * (1.0 + rho_norm * m.tensor().max_abs())
}

/// Deterministic finite criterion: the model has the commuting-Jacobi
/// property iff `[rho, J(e_i, e_j)]` vanishes for every working-basis pair
/// (the polarized operators span all `J(pi)` through the induced-gram
/// weights).
pub fn is_jacobi_commuting(m: &Model0, tol: f64) -> Result<CommutingReport> {
    let n = m.dim();
    let rho = ricci(m)?;
    let scale = tol_scale(m, rho.norm(), tol);
    let mut max_norm = 0.0f64;
    let mut witness = None;
    for i in 0..n {
        let ei = nalgebra::DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 });
        for j in i..n {
            let ej = nalgebra::DVector::from_fn(n, |r, _| if r == j { 1.0 } else { 0.0 });
            let jp = jacobi_polarized(m, &ei, &ej)?;
            let norm = commutator(&rho, &jp)?.norm();
            if norm > max_norm {
                max_norm = norm;
                witness = Some(Witness::BasisPair(i, j));
            }
        }
    }
    Ok(CommutingReport {
        verdict: max_norm < scale,
        kind: CheckKind::BasisPairs,
        max_commutator_norm: max_norm,
        tol_scale: scale,
        witness,
    })
}

/// Monte-Carlo check of `J(pi) J(pi^perp) = J(pi^perp) J(pi)` over sampled
/// planes of one admissible signature. With `n_samples = 0` the verdict is
/// vacuously true and the kind records zero draws.
pub fn check_commuting_on_grassmannian(
    m: &Model0,
    sig: GrassmannSignature,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CommutingReport> {
    if !sig.is_admissible(m.space()) {
        return Err(Error::BadParameter(format!(
            "signature ({}, {}) is not admissible",
            sig.r, sig.s
        )));
    }
    let rho = ricci(m)?;
    let scale = tol_scale(m, rho.norm(), tol);
    let mut max_norm = 0.0f64;
    let mut witness = None;
    for k in 0..n_samples {
        let pi = grassmann_sample(m.space(), sig, seed.wrapping_add(k as u64))?;
        let perp = orthogonal_complement(m.space(), &pi)?;
        let jp = higher_jacobi(m, &pi)?;
        let jq = higher_jacobi(m, &perp)?;
        let norm = commutator(&jp, &jq)?.norm();
        if norm > max_norm {
            max_norm = norm;
            witness = Some(Witness::Plane(pi));
        }
    }
    Ok(CommutingReport {
        verdict: max_norm < scale,
        kind: CheckKind::SampledPlanes {
            signature: sig,
            requested: n_samples,
            drawn: n_samples,
        },
        max_commutator_norm: max_norm,
        tol_scale: scale,
        witness,
    })
}

/// Classify a model by the eigenstructure of its Ricci operator.
pub fn classify_block(m: &Model0, tol: f64) -> Result<BlockClass> {
    let n = m.dim();
    let rho = ricci(m)?;
    let tau = rho.trace();
    let lambda = tau / n as f64;
    let dev = (rho.matrix() - DMatrix::<f64>::identity(n, n) * lambda).norm();
    if dev < tol * (1.0 + rho.norm()) {
        return Ok(BlockClass::Einstein { lambda });
    }
    let clusters = cluster_eigenvalues(&rho, tol)?;
    if clusters.len() == 1 {
        Ok(BlockClass::PseudoEinstein {
            eigenvalue: clusters.into_iter().next().unwrap(),
        })
    } else {
        Ok(BlockClass::Neither {
            witness: (clusters[0].clone(), clusters[1].clone()),
        })
    }
}

/// Restrict a model to a subspace: the induced gram becomes the block's gram
/// and the tensor is pulled back through the basis.
fn restrict_model(m: &Model0, sub: &Subspace) -> Result<Model0> {
    let (r, s) = sub.signature();
    let space = InnerProductSpace::new(r, s, Some(sub.induced_gram().clone()))?;
    let tensor = m.tensor().transform(sub.basis())?.symmetrized();
    Model0::new(space, tensor)
}

/// Decompose along the Ricci generalized eigenspaces and classify each block.
/// Fails with [`Error::NotDecomposable`] when a curvature entry couples two
/// distinct eigenvalue blocks beyond `tol * (1 + max|A|)`; by the structure
/// theory this happens exactly when the model does not have the
/// commuting-Jacobi property.
pub fn decompose(m: &Model0, tol: f64) -> Result<BlockDecomposition> {
    let rho = ricci(m)?;
    let spaces = real_generalized_eigenspaces(m.space(), &rho, tol)?;

    // concatenated block basis and block index ranges
    let n = m.dim();
    let mut basis = DMatrix::zeros(n, n);
    let mut ranges = Vec::new();
    let mut col = 0usize;
    for (_, sub) in &spaces {
        let k = sub.dim();
        basis.view_mut((0, col), (n, k)).copy_from(sub.basis());
        ranges.push(col..col + k);
        col += k;
    }
    let transformed = m.tensor().transform(&basis)?;
    let block_of = |idx: usize| ranges.iter().position(|r| r.contains(&idx)).unwrap();

    let mut cross_term_max = 0.0f64;
    let mut cross_witness = None;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let bi = block_of(i);
                    if block_of(j) == bi && block_of(k) == bi && block_of(l) == bi {
                        continue;
                    }
                    let v = transformed.get(i, j, k, l).abs();
                    if v > cross_term_max {
                        cross_term_max = v;
                        cross_witness = Some((i, j, k, l));
                    }
                }
            }
        }
    }
    let scale = tol * (1.0 + m.tensor().max_abs());
    if cross_term_max >= scale {
        let (i, j, k, l) = cross_witness.unwrap();
        return Err(Error::NotDecomposable {
            i,
            j,
            k,
            l,
            value: cross_term_max,
        });
    }

    let mut blocks = Vec::with_capacity(spaces.len());
    for (_, sub) in spaces {
        let model = restrict_model(m, &sub)?;
        let class = classify_block(&model, tol)?;
        blocks.push(Block {
            subspace: sub,
            model,
            class,
        });
    }
    Ok(BlockDecomposition {
        blocks,
        cross_term_max,
    })
}

/// Measure the cross-block curvature identities on a decomposition. For basis
/// vectors tagged by their block, reports the max violation of
/// `A(x1,x2,x3,x4) = -A(x1,x3,x2,x4)` when the first and last tags differ, and
/// of `A(x1,x2,x3,x4) = 0` when additionally the second tag differs from the
/// last.
pub fn cross_symmetry_check(
    m: &Model0,
    decomposition: &BlockDecomposition,
    _tol: f64,
) -> Result<CrossSymmetryReport> {
    let n = m.dim();
    let total: usize = decomposition.blocks.iter().map(|b| b.subspace.dim()).sum();
    if total != n {
        return Err(Error::DimensionMismatch(
            "decomposition blocks do not span the model's space".into(),
        ));
    }
    let mut basis = DMatrix::zeros(n, n);
    let mut tag = Vec::with_capacity(n);
    let mut col = 0usize;
    for (b_idx, b) in decomposition.blocks.iter().enumerate() {
        let k = b.subspace.dim();
        basis
            .view_mut((0, col), (n, k))
            .copy_from(b.subspace.basis());
        tag.extend(std::iter::repeat_n(b_idx, k));
        col += k;
    }
    let a = m.tensor().transform(&basis)?;
    let mut antisym_23 = 0.0f64;
    let mut cross = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    if tag[i] != tag[l] {
                        antisym_23 =
                            antisym_23.max((a.get(i, j, k, l) + a.get(i, k, j, l)).abs());
                        if tag[j] != tag[l] {
                            cross = cross.max(a.get(i, j, k, l).abs());
                        }
                    }
                }
            }
        }
    }
    Ok(CrossSymmetryReport { antisym_23, cross })
}

/// A Lorentz-style block whose Ricci operator is nilpotent with one defective
/// zero eigenvalue while the curvature is nonzero; built from the symmetric
/// form `nu (x) sigma + sigma (x) nu` for a null vector `n` and a unit
/// spacelike `s` orthogonal to it. Requires an ambient signature containing
/// `(1, 2)`.
pub fn defective_ricci_block() -> Result<Model0> {
    let space = InnerProductSpace::new(1, 2, None)?;
    let g = space.gram();
    // n = e1 + e2 (null), s = e3
    let n_vec = nalgebra::DVector::from_vec(vec![1.0, 1.0, 0.0]);
    let s_vec = nalgebra::DVector::from_vec(vec![0.0, 0.0, 1.0]);
    let nu = g * &n_vec;
    let sigma = g * &s_vec;
    let phi: DMatrix<f64> = &nu * sigma.transpose() + &sigma * nu.transpose();
    let tensor = crate::model::symmetric_form_tensor(&phi);
    Model0::new(space, tensor)
}
