use serde::{Deserialize, Serialize};

use super::{FrameError, Result};

/// A z-scored column together with the constants that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedColumn {
    pub values: Vec<f64>,
    pub source_mean: f64,
    /// Population standard deviation (divides by n).
    pub source_std: f64,
}

impl StandardizedColumn {
    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.source_mean) / self.source_std
    }
}

/// Mean and population standard deviation (divides by n).
pub fn mean_and_population_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let rough = values.iter().sum::<f64>() / n;
    let mean = rough + values.iter().map(|v| v - rough).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn standardize(column: &[f64]) -> Result<StandardizedColumn> {
    if column.len() < 2 {
        return Err(FrameError::TooShort(column.len()));
    }
    if column.iter().any(|v| !v.is_finite()) {
        return Err(FrameError::InvalidFrame("non-finite value in column".into()));
    }
    if column.iter().all(|v| *v == column[0]) {
        return Err(FrameError::ZeroVariance);
    }
    let (mean, std) = mean_and_population_std(column);
    if std == 0.0 {
        return Err(FrameError::ZeroVariance);
    }
    Ok(StandardizedColumn {
        values: column.iter().map(|v| (v - mean) / std).collect(),
        source_mean: mean,
        source_std: std,
    })
}
