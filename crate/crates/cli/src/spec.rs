//! On-disk spec formats. Indices are 1-based in files, 0-based internally.

use curvmodels_core::expr::parse;
use curvmodels_core::geometry::{cone_chart, sheared_chart, MetricChart};
use curvmodels_core::linalg::InnerProductSpace;
use curvmodels_core::model::{AlgCurvTensor, Model0};
use nalgebra::DMatrix;
use serde::Deserialize;
use std::collections::BTreeMap;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpecFile {
    pub dimension: usize,
    /// `[p, q]`: counts of negative and positive directions.
    pub signature: [usize; 2],
    /// Optional row-major gram matrix; identity-with-signature when absent.
    #[serde(default)]
    pub gram: Option<Vec<Vec<f64>>>,
    pub curvature: Vec<CurvatureEntry>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureEntry {
    /// 1-based `[i, j, k, l]`.
    pub indices: [usize; 4],
    pub value: f64,
}

impl ModelSpecFile {
    pub fn build(&self) -> Result<Model0, String> {
        let m = self.dimension;
        let [p, q] = self.signature;
        if p + q != m {
            return Err(format!("signature [{p}, {q}] does not sum to dimension {m}"));
        }
        let gram = match &self.gram {
            None => None,
            Some(rows) => {
                if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                    return Err(format!("gram matrix is not {m}x{m}"));
                }
                Some(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
            }
        };
        let space = InnerProductSpace::new(p, q, gram).map_err(|e| e.to_string())?;
        let mut generators = Vec::with_capacity(self.curvature.len());
        for e in &self.curvature {
            let mut ix = [0usize; 4];
            for (a, &v) in e.indices.iter().enumerate() {
                if v == 0 || v > m {
                    return Err(format!(
                        "curvature index {v} out of range 1..={m} in {:?}",
                        e.indices
                    ));
                }
                ix[a] = v - 1;
            }
            generators.push((ix[0], ix[1], ix[2], ix[3], e.value));
        }
        let tensor = AlgCurvTensor::from_components(m, &generators).map_err(|e| e.to_string())?;
        Model0::new(space, tensor).map_err(|e| e.to_string())
    }

    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpecFile {
    /// "cone" | "sheared" | "custom"
    pub family: String,
    #[serde(default)]
    pub parameters: ChartParameters,
    /// For "custom": n x n expression strings.
    #[serde(default)]
    pub components: Option<Vec<Vec<String>>>,
    /// For "custom": interval bounds, `null` meaning unbounded.
    #[serde(default)]
    pub domain: Option<Vec<(Option<f64>, Option<f64>)>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartParameters {
    /// Conformal factor exponent for the cone family.
    #[serde(default)]
    pub alpha: Option<String>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub t_min: Option<f64>,
}

impl ChartSpecFile {
    pub fn build(&self) -> Result<MetricChart, String> {
        match self.family.as_str() {
            "cone" => {
                let alpha_src = self
                    .parameters
                    .alpha
                    .as_deref()
                    .ok_or("cone family requires parameters.alpha")?;
                let alpha = parse(alpha_src, 2).map_err(|e| e.to_string())?;
                let t_min = self.parameters.t_min.unwrap_or(0.01);
                cone_chart(&alpha, t_min, "cone").map_err(|e| e.to_string())
            }
            "sheared" => {
                let beta = self
                    .parameters
                    .beta
                    .ok_or("sheared family requires parameters.beta")?;
                sheared_chart(beta).map_err(|e| e.to_string())
            }
            "custom" => {
                let comps = self.components.as_ref().ok_or("custom family requires components")?;
                let n = comps.len();
                let mut rows = Vec::with_capacity(n);
                for r in comps {
                    if r.len() != n {
                        return Err("components must be square".into());
                    }
                    let row: Result<Vec<_>, String> = r
                        .iter()
                        .map(|s| parse(s, n).map_err(|e| e.to_string()))
                        .collect();
                    rows.push(row?);
                }
                let domain = self
                    .domain
                    .as_ref()
                    .ok_or("custom family requires a domain")?
                    .iter()
                    .map(|&(lo, hi)| {
                        (lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY))
                    })
                    .collect();
                MetricChart::new(rows, domain, "custom").map_err(|e| e.to_string())
            }
            other => Err(format!("unknown chart family `{other}`")),
        }
    }
}
