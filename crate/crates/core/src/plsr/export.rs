//! Lossless JSON export of a fitted model.
//!
//! Every float is written as a decimal string with 17 significant digits so a
//! round trip reproduces the exact binary value. Matrices are row-major with
//! explicit shapes.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{PlsError, PlsModel, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub format_version: u32,
    pub label: String,
    pub predictors: Vec<String>,
    pub components: usize,
    pub requested_components: usize,
    pub tol: String,
    pub max_iter: usize,
    pub iterations: Vec<usize>,
    pub y_mean: String,
    pub x_total_ss: String,
    pub y_total_ss: String,
    pub x_center: Vec<String>,
    pub x_means: Vec<String>,
    pub x_stds: Vec<String>,
    pub x_weights: MatrixDoc,
    pub y_weights: MatrixDoc,
    pub x_scores: MatrixDoc,
    pub y_scores: MatrixDoc,
    pub x_loadings: MatrixDoc,
    pub y_loadings: MatrixDoc,
    pub x_residual: MatrixDoc,
    pub y_residual: MatrixDoc,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| PlsError::Import(format!("bad number {s:?}")))
}

fn vec_doc(v: &Array1<f64>) -> Vec<String> {
    v.iter().copied().map(fmt).collect()
}

fn vec_from(v: &[String]) -> Result<Array1<f64>> {
    v.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>().map(Array1::from)
}

fn matrix_doc(m: &Array2<f64>) -> MatrixDoc {
    MatrixDoc {
        rows: m.nrows(),
        cols: m.ncols(),
        // `iter` walks in logical row-major order regardless of memory layout
        data: m.iter().copied().map(fmt).collect(),
    }
}

fn matrix_from(doc: &MatrixDoc, name: &str) -> Result<Array2<f64>> {
    let values = doc.data.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?;
    Array2::from_shape_vec((doc.rows, doc.cols), values)
        .map_err(|e| PlsError::Import(format!("{name}: {e}")))
}

impl PlsModel {
    pub fn to_doc(&self) -> ModelDoc {
        ModelDoc {
            format_version: MODEL_FORMAT_VERSION,
            label: self.label.clone(),
            predictors: self.predictors.clone(),
            components: self.components(),
            requested_components: self.requested_components,
            tol: fmt(self.tol),
            max_iter: self.max_iter,
            iterations: self.iterations.clone(),
            y_mean: fmt(self.y_mean),
            x_total_ss: fmt(self.x_total_ss),
            y_total_ss: fmt(self.y_total_ss),
            x_center: vec_doc(&self.x_center),
            x_means: vec_doc(&self.x_means),
            x_stds: vec_doc(&self.x_stds),
            x_weights: matrix_doc(&self.x_weights),
            y_weights: matrix_doc(&self.y_weights),
            x_scores: matrix_doc(&self.x_scores),
            y_scores: matrix_doc(&self.y_scores),
            x_loadings: matrix_doc(&self.x_loadings),
            y_loadings: matrix_doc(&self.y_loadings),
            x_residual: matrix_doc(&self.x_residual),
            y_residual: matrix_doc(&self.y_residual),
        }
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(PlsError::Import(format!(
                "unsupported format version {}",
                doc.format_version
            )));
        }
        let model = PlsModel {
            label: doc.label.clone(),
            predictors: doc.predictors.clone(),
            x_weights: matrix_from(&doc.x_weights, "x_weights")?,
            y_weights: matrix_from(&doc.y_weights, "y_weights")?,
            x_scores: matrix_from(&doc.x_scores, "x_scores")?,
            y_scores: matrix_from(&doc.y_scores, "y_scores")?,
            x_loadings: matrix_from(&doc.x_loadings, "x_loadings")?,
            y_loadings: matrix_from(&doc.y_loadings, "y_loadings")?,
            x_residual: matrix_from(&doc.x_residual, "x_residual")?,
            y_residual: matrix_from(&doc.y_residual, "y_residual")?,
            x_center: vec_from(&doc.x_center)?,
            y_mean: parse(&doc.y_mean)?,
            x_means: vec_from(&doc.x_means)?,
            x_stds: vec_from(&doc.x_stds)?,
            x_total_ss: parse(&doc.x_total_ss)?,
            y_total_ss: parse(&doc.y_total_ss)?,
            requested_components: doc.requested_components,
            tol: parse(&doc.tol)?,
            max_iter: doc.max_iter,
            iterations: doc.iterations.clone(),
        };
        let (p, a) = model.x_weights.dim();
        let n = model.x_scores.nrows();
        let shapes_ok = a == doc.components
            && model.predictors.len() == p
            && model.x_loadings.dim() == (p, a)
            && model.y_weights.dim() == (1, a)
            && model.y_loadings.dim() == (1, a)
            && model.x_scores.dim() == (n, a)
            && model.y_scores.dim() == (n, a)
            && model.x_residual.dim() == (n, p)
            && model.y_residual.dim() == (n, 1)
            && model.x_center.len() == p
            && model.x_means.len() == p
            && model.x_stds.len() == p;
        if !shapes_ok {
            return Err(PlsError::Import("inconsistent matrix shapes".into()));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text).map_err(|e| PlsError::Import(e.to_string()))?;
        Self::from_doc(&doc)
    }
}
