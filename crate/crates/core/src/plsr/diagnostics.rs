use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::linalg::norm;
use super::{PlsError, PlsModel, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComponentVariance {
    pub x_share: f64,
    pub cumulative_x: f64,
    pub y_share: f64,
    pub cumulative_y: f64,
    pub adjusted_r2: f64,
}

/// Per-factor shares of predictor and response variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub components: Vec<ComponentVariance>,
}

/// `1 − (1 − r²)(n − 1)/(n − a − 1)`, or 0 when the denominator is not
/// positive.
pub fn adjusted_r_square(r2: f64, n: usize, a: usize) -> f64 {
    let dof = n as f64 - a as f64 - 1.0;
    if dof <= 0.0 {
        return 0.0;
    }
    1.0 - (1.0 - r2) * (n as f64 - 1.0) / dof
}

fn column_sq_norm(m: &Array2<f64>, k: usize) -> f64 {
    norm(m.column(k)).powi(2)
}

pub fn variance_explained(model: &PlsModel) -> VarianceReport {
    let n = model.x_scores.nrows();
    let mut cumulative_x = 0.0;
    let mut cumulative_y = 0.0;
    let components = (0..model.components())
        .map(|k| {
            let tt = column_sq_norm(&model.x_scores, k);
            let x_share = if model.x_total_ss > 0.0 {
                tt * column_sq_norm(&model.x_loadings, k) / model.x_total_ss
            } else {
                0.0
            };
            // scores are orthogonal, so each factor's fitted part adds to R²
            let y_share = if model.y_total_ss > 0.0 {
                tt * model.y_loadings[[0, k]].powi(2) / model.y_total_ss
            } else {
                0.0
            };
            cumulative_x += x_share;
            cumulative_y += y_share;
            ComponentVariance {
                x_share,
                cumulative_x,
                y_share,
                cumulative_y,
                adjusted_r2: adjusted_r_square(cumulative_y, n, k + 1),
            }
        })
        .collect();
    VarianceReport { components }
}

/// Which per-factor direction VIP squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VipBasis {
    /// Unit NIPALS weights; squared scores sum to the predictor count.
    #[default]
    Weights,
    /// Raw columns of `W (PᵀW)⁻¹`. Squared scores need not sum to the
    /// predictor count.
    Rotations,
}

/// Variable importance for the first `a` factors, one score per predictor.
pub fn vip(model: &PlsModel, a: usize, basis: VipBasis) -> Result<Vec<f64>> {
    if a == 0 || a > model.components() {
        return Err(PlsError::InvalidComponentCount {
            requested: a,
            available: model.components(),
        });
    }
    let report = variance_explained(model);
    let ssy: Vec<f64> = report.components[..a].iter().map(|c| c.y_share).collect();
    let total: f64 = ssy.iter().sum();
    if !(total > 0.0) {
        return Err(PlsError::NoExplainedVariance);
    }
    let directions = match basis {
        VipBasis::Weights => {
            let mut w = model.x_weights.clone();
            for mut col in w.columns_mut() {
                let n = norm(col.view());
                col /= n;
            }
            w
        }
        VipBasis::Rotations => model.rotations()?,
    };
    let j = model.n_predictors() as f64;
    Ok((0..model.n_predictors())
        .map(|row| {
            let weighted: f64 = (0..a).map(|k| ssy[k] * directions[[row, k]].powi(2)).sum();
            (j * weighted / total).sqrt()
        })
        .collect())
}

/// Predictors × factor-count table: column `a-1` holds `vip(model, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VipTable {
    pub basis: VipBasis,
    pub scores: Array2<f64>,
}

pub fn vip_table(model: &PlsModel, basis: VipBasis) -> Result<VipTable> {
    let a_max = model.components();
    let mut scores = Array2::zeros((model.n_predictors(), a_max));
    for a in 1..=a_max {
        let col = vip(model, a, basis)?;
        scores.column_mut(a - 1).assign(&ndarray::Array1::from(col));
    }
    Ok(VipTable { basis, scores })
}
