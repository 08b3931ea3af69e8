//! End-to-end acceptance battery. Each test prints one pass/fail line.

use curvmodels_core::commuting::{
    check_commuting_on_grassmannian, decompose, defective_ricci_block, is_jacobi_commuting,
    BlockClass,
};
use curvmodels_core::expr::{eval_jet2, Expr, Func};
use curvmodels_core::geometry::{
    cone_chart, conformal_surface_chart, geodesic, metric_at, riemann_model_at,
    scalar_curvature_at, shear_invariant, sheared_chart, sphere_alpha, blowup_exponent,
};
use curvmodels_core::linalg::{
    admissible_signatures, cluster_eigenvalues, grassmann_sample, orthogonal_complement,
    InnerProductSpace, Subspace,
};
use curvmodels_core::model::{
    constant_curvature_model, direct_sum, higher_jacobi, ricci, AlgCurvTensor, Model0,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn criterion(name: &str, f: impl FnOnce() -> Result<(), String>) {
    match f() {
        Ok(()) => println!("{name}: pass"),
        Err(e) => {
            println!("{name}: FAIL ({e})");
            panic!("{name} failed: {e}");
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

/// Generic algebraic curvature tensor: symmetrize a random 4-array and remove
/// the cyclic part, normalized to unit max entry.
fn random_tensor(dim: usize, rng: &mut ChaCha8Rng) -> AlgCurvTensor {
    let raw: Vec<f64> = (0..dim * dim * dim * dim).map(|_| normal(rng)).collect();
    let t = AlgCurvTensor::from_raw(dim, raw).unwrap().symmetrized();
    let mut out = AlgCurvTensor::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    let cyc =
                        (t.get(i, j, k, l) + t.get(j, k, i, l) + t.get(k, i, j, l)) / 3.0;
                    out.set(i, j, k, l, t.get(i, j, k, l) - cyc);
                }
            }
        }
    }
    let s = out.max_abs();
    if s > 0.0 {
        let scaled: Vec<f64> = (0..dim)
            .flat_map(|i| {
                (0..dim).flat_map(move |j| {
                    (0..dim).flat_map(move |k| (0..dim).map(move |l| (i, j, k, l)))
                })
            })
            .map(|(i, j, k, l)| out.get(i, j, k, l) / s)
            .collect();
        out = AlgCurvTensor::from_raw(dim, scaled).unwrap();
    }
    out
}

/// Direct sum of constant-curvature blocks over a partition of `m`, first
/// block Lorentzian when `p = 1`.
fn einstein_sum(p: usize, dims: &[usize], constants: &[f64]) -> Model0 {
    let mut acc: Option<Model0> = None;
    for (idx, (&k, &c)) in dims.iter().zip(constants).enumerate() {
        let space = if idx == 0 && p == 1 {
            InnerProductSpace::new(1, k - 1, None).unwrap()
        } else {
            InnerProductSpace::new(0, k, None).unwrap()
        };
        let block = constant_curvature_model(&space, c);
        acc = Some(match acc {
            None => block,
            Some(prev) => direct_sum(&prev, &block).unwrap(),
        });
    }
    acc.unwrap()
}

fn random_partition(m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut dims = Vec::new();
    let mut left = m;
    while left > 0 {
        let k = rng.random_range(1..=left.min(3));
        dims.push(k);
        left -= k;
    }
    dims
}

fn sampled_verdict(m: &Model0, samples: usize, seed: u64, tol: f64) -> bool {
    admissible_signatures(m.space()).into_iter().all(|sig| {
        check_commuting_on_grassmannian(m, sig, samples, seed, tol)
            .map(|r| r.verdict)
            .unwrap_or(false)
    })
}

#[test]
fn acceptance_1_commuting_equivalence() {
    criterion("criterion 1 (deterministic vs sampled commuting verdicts)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..200usize {
            let m_dim = 3 + case % 4;
            let p = if (case / 4) % 2 == 0 { 0 } else { 1 };
            let want_commuting = case < 100;

            let model = if want_commuting {
                let dims = random_partition(m_dim, &mut rng);
                let constants: Vec<f64> = dims
                    .iter()
                    .map(|_| rng.random_range(0.5..2.5) * if rng.random_bool(0.5) { -1.0 } else { 1.0 })
                    .collect();
                einstein_sum(p, &dims, &constants)
            } else {
                // perturb an Einstein sum until the deterministic check fails
                let dims = random_partition(m_dim, &mut rng);
                let constants: Vec<f64> = dims.iter().map(|_| rng.random_range(0.5..2.5)).collect();
                let base = einstein_sum(p, &dims, &constants);
                let mut eps = 0.5;
                let mut found = None;
                for _ in 0..6 {
                    let noise = random_tensor(m_dim, &mut rng);
                    let mut entries = Vec::with_capacity(m_dim.pow(4));
                    for i in 0..m_dim {
                        for j in 0..m_dim {
                            for k in 0..m_dim {
                                for l in 0..m_dim {
                                    entries.push(
                                        base.tensor().get(i, j, k, l) + eps * noise.get(i, j, k, l),
                                    );
                                }
                            }
                        }
                    }
                    let t = AlgCurvTensor::from_raw(m_dim, entries).unwrap();
                    let cand = Model0::new(base.space().clone(), t)
                        .map_err(|e| format!("case {case}: perturbed model invalid: {e}"))?;
                    if !is_jacobi_commuting(&cand, 1e-8).map_err(|e| e.to_string())?.verdict {
                        found = Some(cand);
                        break;
                    }
                    eps *= 2.0;
                }
                found.ok_or_else(|| format!("case {case}: could not break the commuting property"))?
            };

            let det = is_jacobi_commuting(&model, 1e-8)
                .map_err(|e| format!("case {case}: {e}"))?
                .verdict;
            if det != want_commuting {
                return Err(format!(
                    "case {case}: deterministic verdict {det}, constructed for {want_commuting}"
                ));
            }
            let sampled = sampled_verdict(&model, 50, 1000 + case as u64, 1e-6);
            if sampled != det {
                return Err(format!(
                    "case {case}: sampled verdict {sampled} disagrees with deterministic {det}"
                ));
            }
        }
        Ok(())
    });
}

#[test]
fn acceptance_2_einstein_roundtrip() {
    criterion("criterion 2 (Einstein direct-sum decomposition round-trip)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let pool = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0];
        for case in 0..50usize {
            // distinct constants AND distinct Ricci eigenvalues c (k - 1)
            let (dims, constants) = loop {
                let n_blocks = rng.random_range(2..=4usize);
                let dims: Vec<usize> = (0..n_blocks).map(|_| rng.random_range(2..=3)).collect();
                let mut cs: Vec<f64> = Vec::new();
                while cs.len() < n_blocks {
                    let c = pool[rng.random_range(0..pool.len())];
                    if !cs.contains(&c) {
                        cs.push(c);
                    }
                }
                let lambdas: Vec<f64> = dims
                    .iter()
                    .zip(&cs)
                    .map(|(&k, &c)| c * (k as f64 - 1.0))
                    .collect();
                let distinct = lambdas.iter().enumerate().all(|(a, la)| {
                    lambdas.iter().skip(a + 1).all(|lb| (la - lb).abs() > 0.5)
                });
                if distinct {
                    break (dims, cs);
                }
            };
            let model = einstein_sum(0, &dims, &constants);
            let m_dim = model.dim();
            let mut expected: Vec<(usize, f64)> = dims
                .iter()
                .zip(&constants)
                .map(|(&k, &c)| (k, c * (k as f64 - 1.0)))
                .collect();
            expected.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());

            let check = |m: &Model0, tol: f64, label: &str| -> Result<(), String> {
                let d = decompose(m, 1e-8).map_err(|e| format!("case {case} {label}: {e}"))?;
                let mut got: Vec<(usize, f64)> = d
                    .blocks
                    .iter()
                    .map(|b| {
                        let lam = match &b.class {
                            BlockClass::Einstein { lambda } => Ok(*lambda),
                            other => Err(format!("case {case} {label}: non-Einstein block {other:?}")),
                        }?;
                        Ok::<(usize, f64), String>((b.subspace.dim(), lam))
                    })
                    .collect::<Result<_, _>>()?;
                got.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
                if got.len() != expected.len() {
                    return Err(format!(
                        "case {case} {label}: {} blocks, expected {}",
                        got.len(),
                        expected.len()
                    ));
                }
                for ((gk, gl), (ek, el)) in got.iter().zip(&expected) {
                    if gk != ek {
                        return Err(format!("case {case} {label}: dim {gk} != {ek}"));
                    }
                    if (gl - el).abs() > tol {
                        return Err(format!("case {case} {label}: eigenvalue {gl} != {el}"));
                    }
                }
                Ok(())
            };
            check(&model, 1e-8, "plain")?;

            // shuffle by a random orthogonal basis change
            let g = DMatrix::from_fn(m_dim, m_dim, |_, _| normal(&mut rng));
            let q = g.qr().q();
            let t2 = model.tensor().transform(&q).map_err(|e| e.to_string())?;
            let shuffled = Model0::new(model.space().clone(), t2).map_err(|e| e.to_string())?;
            check(&shuffled, 1e-6, "shuffled")?;
        }
        Ok(())
    });
}

#[test]
fn acceptance_3_lorentzian_pseudo_einstein() {
    criterion("criterion 3 (Lorentzian pseudo-Einstein decompositions)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for case in 0..20usize {
            let with_defective = case % 4 == 0;
            let model = if with_defective {
                // nilpotent-Ricci Lorentz block plus Riemannian Einstein tails
                let mut m = defective_ricci_block().map_err(|e| e.to_string())?;
                let extra = rng.random_range(1..=2usize);
                let mut used = vec![0.0];
                for _ in 0..extra {
                    let k = rng.random_range(2..=3usize);
                    let c = loop {
                        let c = rng.random_range(0.7..3.0) * if rng.random_bool(0.5) { -1.0 } else { 1.0 };
                        let lam = c * (k as f64 - 1.0);
                        if used.iter().all(|u: &f64| (u - lam).abs() > 0.3) {
                            used.push(lam);
                            break c;
                        }
                    };
                    let space = InnerProductSpace::new(0, k, None).unwrap();
                    m = direct_sum(&m, &constant_curvature_model(&space, c))
                        .map_err(|e| e.to_string())?;
                }
                m
            } else {
                // Lorentzian Einstein head block plus Riemannian blocks
                // blocks of dimension >= 2 only: a 1-dim block pins a Ricci
                // eigenvalue at 0 and cannot be made distinct twice
                let head = rng.random_range(2..=3usize);
                let dims = vec![head, rng.random_range(2..=3usize)];
                let mut lambdas: Vec<f64> = Vec::new();
                let constants: Vec<f64> = dims
                    .iter()
                    .map(|&k| loop {
                        let c = rng.random_range(0.7..3.0) * if rng.random_bool(0.5) { -1.0 } else { 1.0 };
                        let lam = c * (k as f64 - 1.0);
                        if lambdas.iter().all(|u| (u - lam).abs() > 0.3) {
                            lambdas.push(lam);
                            break c;
                        }
                    })
                    .collect();
                einstein_sum(1, &dims, &constants)
            };

            let d = decompose(&model, 1e-8).map_err(|e| format!("case {case}: {e}"))?;
            if d.cross_term_max >= 1e-8 {
                return Err(format!("case {case}: cross term {}", d.cross_term_max));
            }
            for b in &d.blocks {
                if !b.class.is_at_least_pseudo_einstein() {
                    return Err(format!("case {case}: block classified {:?}", b.class));
                }
            }
            if with_defective
                && !d.blocks.iter().any(|b| {
                    matches!(&b.class, BlockClass::PseudoEinstein { eigenvalue } if eigenvalue.re.abs() < 1e-8)
                })
            {
                return Err(format!("case {case}: defective block not recovered as pseudo-Einstein"));
            }
        }
        Ok(())
    });
}

#[test]
fn acceptance_4_higher_jacobi_well_defined() {
    criterion("criterion 4 (basis independence and rho splitting)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for case in 0..100usize {
            let m_dim = 3 + case % 3;
            let p = if case % 2 == 0 { 0 } else { 1 };
            let space = InnerProductSpace::new(p, m_dim - p, None).unwrap();
            let model = Model0::new(space, random_tensor(m_dim, &mut rng))
                .map_err(|e| e.to_string())?;
            let sigs = admissible_signatures(model.space());
            let sig = sigs[case % sigs.len()];
            let pi = grassmann_sample(model.space(), sig, 5000 + case as u64)
                .map_err(|e| e.to_string())?;

            let j1 = higher_jacobi(&model, &pi).map_err(|e| e.to_string())?;

            // same span, different basis
            let k = pi.dim();
            let mix = DMatrix::from_fn(k, k, |i, j| {
                if i == j { 1.0 } else { 0.35 * normal(&mut rng) }
            });
            let pi2 = Subspace::from_basis(model.space(), pi.basis() * mix)
                .map_err(|e| e.to_string())?;
            let j2 = higher_jacobi(&model, &pi2).map_err(|e| e.to_string())?;
            let d = j1.sub(&j2).norm();
            if d >= 1e-9 {
                return Err(format!("case {case}: basis dependence {d}"));
            }

            let perp = orthogonal_complement(model.space(), &pi).map_err(|e| e.to_string())?;
            let jp = higher_jacobi(&model, &perp).map_err(|e| e.to_string())?;
            let rho = ricci(&model).map_err(|e| e.to_string())?;
            let split = rho.sub(&j1.add(&jp)).norm();
            if split >= 1e-9 {
                return Err(format!("case {case}: rho split residual {split}"));
            }
        }
        Ok(())
    });
}

#[test]
fn acceptance_5_cone_battery() {
    criterion("criterion 5 (warped cone family)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let sample_pt = |rng: &mut ChaCha8Rng| {
            DVector::from_vec(vec![
                rng.random_range(0.1..3.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            ])
        };

        // unit-sphere fiber: flat
        let flat = cone_chart(&sphere_alpha(1.0), 0.005, "cone-unit").map_err(|e| e.to_string())?;
        for i in 0..20 {
            let x = sample_pt(&mut rng);
            let m = riemann_model_at(&flat, &x).map_err(|e| e.to_string())?;
            let r = m.tensor().max_abs();
            if r >= 1e-6 {
                return Err(format!("flat case point {i}: |R| = {r}"));
            }
        }

        // radius-2 fiber
        let alpha = sphere_alpha(2.0);
        let chart = cone_chart(&alpha, 0.005, "cone-r2").map_err(|e| e.to_string())?;
        let fiber = conformal_surface_chart(&alpha).map_err(|e| e.to_string())?;

        let mut sign = 0.0f64;
        for i in 0..20 {
            let x = sample_pt(&mut rng);
            let m = riemann_model_at(&chart, &x).map_err(|e| e.to_string())?;
            // (a) commuting property
            let rep = is_jacobi_commuting(&m, 1e-7).map_err(|e| e.to_string())?;
            if !rep.verdict {
                return Err(format!("point {i}: commuting check failed, max {}", rep.max_commutator_norm));
            }
            // (b) not Einstein
            let rho = ricci(&m).map_err(|e| e.to_string())?;
            let clusters = cluster_eigenvalues(&rho, 1e-6).map_err(|e| e.to_string())?;
            if clusters.len() < 2 {
                return Err(format!("point {i}: Ricci spectrum not split"));
            }
            let spread = clusters.last().unwrap().re - clusters.first().unwrap().re;
            if spread.abs() <= 1e-3 {
                return Err(format!("point {i}: eigenvalue clusters too close ({spread})"));
            }
            // (e) scalar relation with one global sign
            let t = x[0];
            let p = DVector::from_vec(vec![x[1], x[2]]);
            let tau_m = scalar_curvature_at(&chart, &x).map_err(|e| e.to_string())?;
            let tau_n = scalar_curvature_at(&fiber, &p).map_err(|e| e.to_string())?;
            let rhs = (tau_n - 2.0) / (t * t);
            if sign == 0.0 {
                sign = if (tau_m - rhs).abs() < (tau_m + rhs).abs() { 1.0 } else { -1.0 };
            }
            let resid = (tau_m - sign * rhs).abs();
            if resid >= 1e-6 / (t * t) {
                return Err(format!("point {i}: scalar relation residual {resid} at t={t}"));
            }
        }

        // (c) t^2 tau constant
        let p0 = [0.3, -0.7];
        let mut vals = Vec::new();
        for &t in &[0.1, 0.5, 1.0, 2.0] {
            let tau = scalar_curvature_at(&chart, &DVector::from_vec(vec![t, p0[0], p0[1]]))
                .map_err(|e| e.to_string())?;
            vals.push(tau * t * t);
        }
        for v in &vals {
            if (v - vals[0]).abs() > 1e-5 * vals[0].abs() {
                return Err(format!("t^2 tau not constant: {vals:?}"));
            }
        }

        // (d) blowup exponent -2
        let tr = geodesic(
            &chart,
            &DVector::from_vec(vec![1.0, p0[0], p0[1]]),
            &DVector::from_vec(vec![-1.0, 0.0, 0.0]),
            0.99,
            1e-3,
        )
        .map_err(|e| e.to_string())?;
        let fit = blowup_exponent(&tr).map_err(|e| e.to_string())?;
        if (fit.exponent + 2.0).abs() > 0.05 {
            return Err(format!("blowup exponent {}", fit.exponent));
        }
        Ok(())
    });
}

#[test]
fn acceptance_6_sheared_battery() {
    criterion("criterion 6 (sheared family)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        let mut invariants = Vec::new();
        for &beta in &[1.0f64, 2.0] {
            let chart = sheared_chart(beta).map_err(|e| e.to_string())?;
            // (a) closed-form scalar curvature
            let x0 = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
            let tau = scalar_curvature_at(&chart, &x0).map_err(|e| e.to_string())?;
            if (tau.abs() - 1.0 / (1.0 + beta)).abs() >= 1e-6 {
                return Err(format!("beta={beta}: |tau(1,1,0,0)| = {}", tau.abs()));
            }

            let mut k_vals = Vec::new();
            for i in 0..20 {
                let x = DVector::from_vec(vec![
                    rng.random_range(0.5..2.0),
                    rng.random_range(0.5..2.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]);
                let m = riemann_model_at(&chart, &x).map_err(|e| e.to_string())?;
                // (b) only R_3443 up to symmetries
                let scale = m.tensor().max_abs();
                for a in 0..4 {
                    for b in 0..4 {
                        for c in 0..4 {
                            for d in 0..4 {
                                let only_34 = [a, b, c, d].iter().all(|&s| s >= 2);
                                if !only_34 && m.tensor().get(a, b, c, d).abs() >= 1e-8 * scale {
                                    return Err(format!(
                                        "beta={beta} point {i}: stray component ({a},{b},{c},{d})"
                                    ));
                                }
                            }
                        }
                    }
                }
                // (c) commuting, not Einstein
                let rep = is_jacobi_commuting(&m, 1e-7).map_err(|e| e.to_string())?;
                if !rep.verdict {
                    return Err(format!("beta={beta} point {i}: commuting check failed"));
                }
                let rho = ricci(&m).map_err(|e| e.to_string())?;
                let clusters = cluster_eigenvalues(&rho, 1e-6).map_err(|e| e.to_string())?;
                if clusters.len() < 2
                    || (clusters.last().unwrap().re - clusters.first().unwrap().re).abs() <= 1e-3
                {
                    return Err(format!("beta={beta} point {i}: Einstein did not fail"));
                }
                // (d) invariant constancy
                k_vals.push(shear_invariant(beta, &x).map_err(|e| e.to_string())?);
            }
            let k0 = k_vals[0];
            for k in &k_vals {
                if (k - k0).abs() > 1e-6 * k0.abs() {
                    return Err(format!("beta={beta}: invariant not constant ({k} vs {k0})"));
                }
            }
            invariants.push(k0);

            // (e) blowup exponent -1 along x1 down to 0 at x2 = 1
            let tr = geodesic(
                &chart,
                &DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]),
                &DVector::from_vec(vec![-1.0, 0.0, 0.0, 0.0]),
                0.999,
                1e-3,
            )
            .map_err(|e| e.to_string())?;
            let fit = blowup_exponent(&tr).map_err(|e| e.to_string())?;
            if (fit.exponent + 1.0).abs() > 0.05 {
                return Err(format!("beta={beta}: blowup exponent {}", fit.exponent));
            }
        }
        // (d) invariant separates the two parameters
        if (invariants[0] - invariants[1]).abs() <= 1e-2 {
            return Err(format!("invariants do not separate: {invariants:?}"));
        }
        Ok(())
    });
}

#[test]
fn acceptance_7_sphere_self_consistency() {
    criterion("criterion 7 (round-sphere self-consistency)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut taus = Vec::new();
        for &r in &[1.0f64, 2.0] {
            let chart = conformal_surface_chart(&sphere_alpha(r)).map_err(|e| e.to_string())?;
            let mut vals = Vec::new();
            for _ in 0..15 {
                let x = DVector::from_vec(vec![
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ]);
                vals.push(scalar_curvature_at(&chart, &x).map_err(|e| e.to_string())?);
            }
            let v0 = vals[0];
            for v in &vals {
                if (v - v0).abs() > 1e-6 * v0.abs() {
                    return Err(format!("r={r}: tau not constant ({v} vs {v0})"));
                }
            }
            taus.push(v0);

            // energy drift along a geodesic over unit time
            let x0 = DVector::from_vec(vec![0.2, 0.1]);
            let v0 = DVector::from_vec(vec![0.5, -0.3]);
            let tr = geodesic(&chart, &x0, &v0, 1.0, 1e-3).map_err(|e| e.to_string())?;
            let energy = |p: &DVector<f64>, v: &DVector<f64>| -> Result<f64, String> {
                let g = metric_at(&chart, p).map_err(|e| e.to_string())?;
                Ok((v.transpose() * g * v)[(0, 0)])
            };
            let e0 = energy(&tr.points[0], &tr.velocities[0])?;
            for (p, v) in tr.points.iter().zip(&tr.velocities) {
                let e = energy(p, v)?;
                if (e - e0).abs() >= 1e-6 {
                    return Err(format!("r={r}: energy drift {}", (e - e0).abs()));
                }
            }
        }
        let ratio = taus[0] / taus[1];
        if (ratio - 4.0).abs() >= 1e-4 {
            return Err(format!("tau ratio {ratio}"));
        }
        Ok(())
    });
}

#[test]
fn acceptance_8_jet_vs_finite_differences() {
    criterion("criterion 8 (second-order jets vs central differences)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(88);
        for case in 0..50usize {
            let n_vars = 1 + case % 3;
            let e = random_expr(&mut rng, n_vars, 3);
            let x = DVector::from_fn(n_vars, |_, _| rng.random_range(0.4..1.6));
            let jet = match eval_jet2(&e, &x) {
                Ok(j) if j.value.is_finite() => j,
                _ => continue, // domain-rejected draw; the corpus stays ~50 strong
            };
            let f = |x: &DVector<f64>| -> Option<f64> {
                eval_jet2(&e, x).ok().map(|j| j.value)
            };
            let scale = 1.0 + jet.value.abs() + jet.grad.amax() + jet.hess.amax();
            let hg = 1e-5;
            let hh = 1e-4;
            for a in 0..n_vars {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[a] += hg;
                xm[a] -= hg;
                let (fp, fm) = match (f(&xp), f(&xm)) {
                    (Some(a), Some(b)) => (a, b),
                    _ => continue,
                };
                let fd = (fp - fm) / (2.0 * hg);
                if (fd - jet.grad[a]).abs() > 1e-6 * scale {
                    return Err(format!(
                        "case {case}: grad[{a}] jet {} vs fd {fd} for `{e}`",
                        jet.grad[a]
                    ));
                }
            }
            for a in 0..n_vars {
                for b in 0..n_vars {
                    let mut pp = x.clone();
                    let mut pm = x.clone();
                    let mut mp = x.clone();
                    let mut mm = x.clone();
                    pp[a] += hh; pp[b] += hh;
                    pm[a] += hh; pm[b] -= hh;
                    mp[a] -= hh; mp[b] += hh;
                    mm[a] -= hh; mm[b] -= hh;
                    let vals = [f(&pp), f(&pm), f(&mp), f(&mm)];
                    if vals.iter().any(|v| v.is_none()) {
                        continue;
                    }
                    let fd = (vals[0].unwrap() - vals[1].unwrap() - vals[2].unwrap()
                        + vals[3].unwrap())
                        / (4.0 * hh * hh);
                    if (fd - jet.hess[(a, b)]).abs() > 1e-6 * scale {
                        return Err(format!(
                            "case {case}: hess[{a},{b}] jet {} vs fd {fd} for `{e}`",
                            jet.hess[(a, b)]
                        ));
                    }
                }
            }
        }
        Ok(())
    });
}

/// Random expression over a domain-safe subset of the grammar.
fn random_expr(rng: &mut ChaCha8Rng, n_vars: usize, depth: usize) -> Expr {
    if depth == 0 {
        return if rng.random_bool(0.6) {
            Expr::var(rng.random_range(0..n_vars))
        } else {
            Expr::num(rng.random_range(0.3..2.0))
        };
    }
    match rng.random_range(0..8) {
        0 => random_expr(rng, n_vars, depth - 1).add(random_expr(rng, n_vars, depth - 1)),
        1 => random_expr(rng, n_vars, depth - 1).sub(random_expr(rng, n_vars, depth - 1)),
        2 => random_expr(rng, n_vars, depth - 1).mul(random_expr(rng, n_vars, depth - 1)),
        3 => random_expr(rng, n_vars, depth - 1).pow(rng.random_range(2..=3) as f64),
        4 => Expr::call(Func::Sin, random_expr(rng, n_vars, depth - 1)),
        5 => Expr::call(Func::Cos, random_expr(rng, n_vars, depth - 1)),
        6 => Expr::call(
            Func::Ln,
            random_expr(rng, n_vars, depth - 1).pow(2.0).add(Expr::num(1.0)),
        ),
        _ => Expr::call(Func::Exp, Expr::num(0.4).mul(random_expr(rng, n_vars, depth - 1))),
    }
}
