//! `curvmodels`: file-driven checks for algebraic curvature models and the
//! built-in chart families.
//!
//! Exit codes: 0 pass, 1 property fails, 2 numeric disagreement/pathology,
//! 64 malformed spec, 65 domain error during evaluation.

mod report;
mod spec;

use clap::{Parser, Subcommand};
use curvmodels_core::commuting::{
    check_commuting_on_grassmannian, decompose, is_jacobi_commuting, BlockClass, Witness,
};
use curvmodels_core::expr::parse;
use curvmodels_core::geometry::{
    blowup_exponent, conformal_surface_chart, geodesic, riemann_model_at, scalar_curvature_at,
    shear_invariant, MetricChart,
};
use curvmodels_core::linalg::{admissible_signatures, cluster_eigenvalues};
use curvmodels_core::model::ricci;
use curvmodels_core::Error as CoreError;
use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use report::{BlockReport, ReportFile, ReportItem};
use spec::{ChartSpecFile, ModelSpecFile};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_FAIL: u8 = 1;
const EXIT_DISAGREE: u8 = 2;
const EXIT_PARSE: u8 = 64;
const EXIT_DOMAIN: u8 = 65;

#[derive(Parser)]
#[command(name = "curvmodels", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model spec and decide the commuting-Jacobi property, both
    /// deterministically and by sampled planes.
    Check {
        model: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        /// Planes per admissible signature for the sampled check.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decompose a model along the generalized eigenspaces of its Ricci
    /// operator and classify the blocks.
    Decompose {
        model: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification battery of a chart spec: curvature structure,
    /// commuting property, scalar-curvature behavior, blowup.
    Geometry {
        chart: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Sampled points for the pointwise items.
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the blowup geodesic trace as a columnar table.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check { model, tol, samples, seed, out } => cmd_check(&model, tol, samples, seed, out.as_deref()),
        Command::Decompose { model, tol, out } => cmd_decompose(&model, tol, out.as_deref()),
        Command::Geometry { chart, tol, points, seed, t_end, step, out, trace_out } => {
            cmd_geometry(&chart, tol, points, seed, t_end, step, out.as_deref(), trace_out.as_deref())
        }
    }
}

fn load_model(path: &std::path::Path) -> Result<(Vec<u8>, ModelSpecFile, curvmodels_core::model::Model0), String> {
    let raw = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file: ModelSpecFile =
        serde_json::from_slice(&raw).map_err(|e| format!("malformed model spec: {e}"))?;
    let model = file.build()?;
    Ok((raw, file, model))
}

fn witness_json(w: &Option<Witness>) -> Option<serde_json::Value> {
    w.as_ref().map(|w| match w {
        Witness::BasisPair(i, j) => serde_json::json!({ "basis_pair": [i + 1, j + 1] }),
        Witness::Plane(sub) => serde_json::json!({
            "plane_signature": [sub.signature().0, sub.signature().1],
            "plane_dim": sub.dim(),
        }),
    })
}

fn cmd_check(
    path: &std::path::Path,
    tol: Option<f64>,
    samples: usize,
    seed: u64,
    out: Option<&std::path::Path>,
) -> ExitCode {
    let (raw, file, model) = match load_model(path) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let det_tol = tol.unwrap_or_else(|| file.tolerance("check", 1e-8));
    let sampled_tol = file.tolerance("sampled", 1e-6);
    let mut rep = ReportFile::new("check", &raw, det_tol);
    rep.samples = Some(samples);
    rep.seed = Some(seed);

    let det = match is_jacobi_commuting(&model, det_tol) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_DISAGREE);
        }
    };
    rep.items.push(ReportItem {
        name: "deterministic_commuting".into(),
        passed: det.verdict,
        value: det.max_commutator_norm,
        threshold: det.tol_scale,
        witness: witness_json(&det.witness),
    });

    let mut sampled_verdict = true;
    for sig in admissible_signatures(model.space()) {
        match check_commuting_on_grassmannian(&model, sig, samples, seed, sampled_tol) {
            Ok(r) => {
                sampled_verdict &= r.verdict;
                rep.items.push(ReportItem {
                    name: format!("sampled_commuting_sig_{}_{}", sig.r, sig.s),
                    passed: r.verdict,
                    value: r.max_commutator_norm,
                    threshold: r.tol_scale,
                    witness: witness_json(&r.witness),
                });
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_DISAGREE);
            }
        }
    }
    rep.verdict = det.verdict && sampled_verdict;
    let _ = rep.emit(out);
    if det.verdict != sampled_verdict {
        ExitCode::from(EXIT_DISAGREE)
    } else if det.verdict {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn cmd_decompose(path: &std::path::Path, tol: Option<f64>, out: Option<&std::path::Path>) -> ExitCode {
    let (raw, file, model) = match load_model(path) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let tol = tol.unwrap_or_else(|| file.tolerance("decompose", 1e-8));
    let mut rep = ReportFile::new("decompose", &raw, tol);

    match decompose(&model, tol) {
        Ok(d) => {
            rep.push(ReportItem {
                name: "cross_term_max".into(),
                passed: true,
                value: d.cross_term_max,
                threshold: tol * (1.0 + model.tensor().max_abs()),
                witness: None,
            });
            rep.blocks = Some(
                d.blocks
                    .iter()
                    .map(|b| {
                        let (class, ev) = match &b.class {
                            BlockClass::Einstein { lambda } => ("einstein", Some([*lambda, 0.0])),
                            BlockClass::PseudoEinstein { eigenvalue } => {
                                ("pseudo_einstein", Some([eigenvalue.re, eigenvalue.im]))
                            }
                            BlockClass::Neither { witness } => {
                                ("neither", Some([witness.0.re, witness.1.re]))
                            }
                        };
                        BlockReport {
                            dimension: b.subspace.dim(),
                            signature: [b.subspace.signature().0, b.subspace.signature().1],
                            class: class.into(),
                            eigenvalue: ev,
                        }
                    })
                    .collect(),
            );
            let _ = rep.emit(out);
            ExitCode::SUCCESS
        }
        Err(CoreError::NotDecomposable { i, j, k, l, value }) => {
            rep.push(ReportItem {
                name: "cross_term_witness".into(),
                passed: false,
                value,
                threshold: tol * (1.0 + model.tensor().max_abs()),
                witness: Some(serde_json::json!({ "indices": [i + 1, j + 1, k + 1, l + 1] })),
            });
            let _ = rep.emit(out);
            ExitCode::from(EXIT_FAIL)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DISAGREE)
        }
    }
}

struct GeoCtx {
    chart: MetricChart,
    family: String,
    alpha: Option<String>,
    beta: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_geometry(
    path: &std::path::Path,
    tol: f64,
    points: usize,
    seed: u64,
    t_end: Option<f64>,
    step: f64,
    out: Option<&std::path::Path>,
    trace_out: Option<&std::path::Path>,
) -> ExitCode {
    let raw = match std::fs::read(path) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let file: ChartSpecFile = match serde_json::from_slice(&raw) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: malformed chart spec: {e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let chart = match file.build() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let ctx = GeoCtx {
        chart,
        family: file.family.clone(),
        alpha: file.parameters.alpha.clone(),
        beta: file.parameters.beta,
    };
    let mut rep = ReportFile::new("geometry", &raw, tol);
    rep.seed = Some(seed);
    rep.samples = Some(points);

    match run_battery(&ctx, &mut rep, tol, points, seed, t_end, step, trace_out) {
        Ok(()) => {
            let _ = rep.emit(out);
            if rep.verdict {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
        Err(CoreError::Domain { subtree, message }) => {
            eprintln!("error: domain failure in `{subtree}`: {message}");
            ExitCode::from(EXIT_DOMAIN)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DISAGREE)
        }
    }
}

fn sample_points(ctx: &GeoCtx, points: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ctx.chart.dim();
    let boxes: Vec<(f64, f64)> = match ctx.family.as_str() {
        "cone" => vec![(ctx.chart.domain()[0].0.max(0.05), 3.0), (-2.0, 2.0), (-2.0, 2.0)],
        "sheared" => vec![(0.5, 2.0), (0.5, 2.0), (-1.0, 1.0), (-1.0, 1.0)],
        _ => ctx
            .chart
            .domain()
            .iter()
            .map(|&(lo, hi)| {
                let lo2 = lo.max(-2.0);
                let hi2 = hi.min(2.0);
                if lo2 < hi2 {
                    (lo2, hi2)
                } else {
                    (lo, lo + 1.0)
                }
            })
            .collect(),
    };
    (0..points)
        .map(|_| {
            DVector::from_fn(n, |i, _| {
                let (lo, hi) = boxes[i];
                lo + (hi - lo) * rng.random_range(0.01..0.99)
            })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run_battery(
    ctx: &GeoCtx,
    rep: &mut ReportFile,
    tol: f64,
    points: usize,
    seed: u64,
    t_end: Option<f64>,
    step: f64,
    trace_out: Option<&std::path::Path>,
) -> Result<(), CoreError> {
    let pts = sample_points(ctx, points.max(1), seed);

    // pointwise curvature structure
    let mut max_r = 0.0f64;
    let mut max_comm = 0.0f64;
    let mut commuting_ok = true;
    let mut min_spread = f64::INFINITY;
    let mut max_stray_ratio = 0.0f64;
    for x in &pts {
        let m = riemann_model_at(&ctx.chart, x)?;
        let scale = m.tensor().max_abs();
        max_r = max_r.max(scale);
        let c = is_jacobi_commuting(&m, tol)?;
        commuting_ok &= c.verdict;
        max_comm = max_comm.max(c.max_commutator_norm);
        if scale > 1e-6 {
            let rho = ricci(&m)?;
            let clusters = cluster_eigenvalues(&rho, 1e-6)?;
            let spread = if clusters.len() < 2 {
                0.0
            } else {
                clusters.last().unwrap().re - clusters.first().unwrap().re
            };
            min_spread = min_spread.min(spread.abs());
        }
        if ctx.family == "sheared" {
            let n = m.dim();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            if [i, j, k, l].iter().any(|&s| s < 2) && scale > 0.0 {
                                max_stray_ratio =
                                    max_stray_ratio.max(m.tensor().get(i, j, k, l).abs() / scale);
                            }
                        }
                    }
                }
            }
        }
    }

    let flat = max_r < 1e-6;
    if flat {
        rep.push(ReportItem {
            name: "degenerate_flat_family".into(),
            passed: true,
            value: max_r,
            threshold: 1e-6,
            witness: None,
        });
    }
    rep.push(ReportItem {
        name: "commuting_all_points".into(),
        passed: commuting_ok,
        value: max_comm,
        threshold: tol,
        witness: None,
    });
    if !flat {
        rep.push(ReportItem {
            name: "einstein_fails".into(),
            passed: min_spread > 1e-3,
            value: min_spread,
            threshold: 1e-3,
            witness: None,
        });
    }

    match ctx.family.as_str() {
        "cone" => {
            let alpha = parse(ctx.alpha.as_deref().unwrap_or("0"), 2)
                .expect("already parsed during chart construction");
            let fiber = conformal_surface_chart(&alpha)?;
            let p0 = DVector::from_vec(vec![pts[0][1], pts[0][2]]);
            let tau_n = scalar_curvature_at(&fiber, &p0)?;
            if flat {
                rep.push(ReportItem {
                    name: "fiber_scalar_boundary".into(),
                    passed: true,
                    value: (tau_n - 2.0).abs(),
                    threshold: 1e-6,
                    witness: Some(serde_json::json!("fiber scalar curvature 2: flat cone")),
                });
                return Ok(());
            }
            // t^2 tau constancy and the scalar relation with one global sign
            let mut vals = Vec::new();
            let mut sign = 0.0f64;
            let mut rel_resid = 0.0f64;
            for &t in &[0.1f64, 0.5, 1.0, 2.0] {
                let x = DVector::from_vec(vec![t, p0[0], p0[1]]);
                let tau = scalar_curvature_at(&ctx.chart, &x)?;
                vals.push(tau * t * t);
                let rhs = (tau_n - 2.0) / (t * t);
                if sign == 0.0 {
                    sign = if (tau - rhs).abs() < (tau + rhs).abs() { 1.0 } else { -1.0 };
                }
                rel_resid = rel_resid.max((tau - sign * rhs).abs() * t * t);
            }
            let spread = vals
                .iter()
                .map(|v| (v - vals[0]).abs())
                .fold(0.0f64, f64::max);
            rep.push(ReportItem {
                name: "t2_tau_constant".into(),
                passed: spread <= 1e-5 * vals[0].abs(),
                value: spread,
                threshold: 1e-5 * vals[0].abs(),
                witness: None,
            });
            rep.push(ReportItem {
                name: "scalar_relation_global_sign".into(),
                passed: rel_resid < 1e-6,
                value: rel_resid,
                threshold: 1e-6,
                witness: Some(serde_json::json!({ "sign": sign })),
            });

            let tr = geodesic(
                &ctx.chart,
                &DVector::from_vec(vec![1.0, p0[0], p0[1]]),
                &DVector::from_vec(vec![-1.0, 0.0, 0.0]),
                t_end.unwrap_or(0.99),
                step,
            )?;
            if let Some(p) = trace_out {
                std::fs::write(p, tr.table()).ok();
            }
            let fit = blowup_exponent(&tr)?;
            rep.push(ReportItem {
                name: "blowup_exponent".into(),
                passed: (fit.exponent + 2.0).abs() <= 0.05,
                value: fit.exponent,
                threshold: 0.05,
                witness: Some(serde_json::json!({ "target": -2.0, "residual": fit.residual })),
            });
        }
        "sheared" => {
            let beta = ctx.beta.expect("sheared chart has beta");
            rep.push(ReportItem {
                name: "only_transverse_component".into(),
                passed: max_stray_ratio < 1e-8,
                value: max_stray_ratio,
                threshold: 1e-8,
                witness: None,
            });
            let x0 = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
            let tau = scalar_curvature_at(&ctx.chart, &x0)?;
            let target = 1.0 / (1.0 + beta);
            rep.push(ReportItem {
                name: "tau_closed_form".into(),
                passed: (tau.abs() - target).abs() < 1e-6,
                value: tau.abs(),
                threshold: 1e-6,
                witness: Some(serde_json::json!({ "target": target })),
            });
            let ks: Vec<f64> = pts
                .iter()
                .map(|x| shear_invariant(beta, x))
                .collect::<Result<_, _>>()?;
            let k0 = ks[0];
            let k_spread = ks.iter().map(|k| (k - k0).abs()).fold(0.0f64, f64::max);
            rep.push(ReportItem {
                name: "beta_invariant_constant".into(),
                passed: k_spread <= 1e-6 * k0.abs(),
                value: k0,
                threshold: 1e-6 * k0.abs(),
                witness: Some(serde_json::json!({ "spread": k_spread })),
            });

            let tr = geodesic(
                &ctx.chart,
                &x0,
                &DVector::from_vec(vec![-1.0, 0.0, 0.0, 0.0]),
                t_end.unwrap_or(0.999),
                step,
            )?;
            if let Some(p) = trace_out {
                std::fs::write(p, tr.table()).ok();
            }
            let fit = blowup_exponent(&tr)?;
            rep.push(ReportItem {
                name: "blowup_exponent".into(),
                passed: (fit.exponent + 1.0).abs() <= 0.05,
                value: fit.exponent,
                threshold: 0.05,
                witness: Some(serde_json::json!({ "target": -1.0, "residual": fit.residual })),
            });
        }
        _ => {
            // custom charts: pointwise structure only, plus a scalar summary
            let mut tau_min = f64::INFINITY;
            let mut tau_max = f64::NEG_INFINITY;
            for x in &pts {
                let tau = scalar_curvature_at(&ctx.chart, x)?;
                tau_min = tau_min.min(tau);
                tau_max = tau_max.max(tau);
            }
            rep.push(ReportItem {
                name: "scalar_curvature_range".into(),
                passed: true,
                value: tau_max - tau_min,
                threshold: f64::INFINITY,
                witness: Some(serde_json::json!({ "min": tau_min, "max": tau_max })),
            });
        }
    }
    Ok(())
}
