use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::linalg::{frobenius, inverse, solve};
use super::nipals::{deflate, nipals_component, ZERO_RESIDUAL};
use super::{PlsError, Result};
use crate::exec::Execution;
use crate::frames::AnalysisFrame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub components: usize,
    /// Convergence threshold on the norm of the change in the scores.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            components: 3,
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

impl FitOptions {
    pub fn with_components(components: usize) -> Self {
        Self {
            components,
            ..Self::default()
        }
    }
}

/// A fitted single-response PLS regression.
///
/// Column `k` of every factor matrix belongs to latent factor `k`. `x_residual`
/// and `y_residual` are what remains after all fitted factors are deflated
/// from the centered data.
#[derive(Debug, Clone, PartialEq)]
pub struct PlsModel {
    pub label: String,
    pub predictors: Vec<String>,
    /// Unit predictor weights `w` (p × A).
    pub x_weights: Array2<f64>,
    /// Unit response weights (1 × A).
    pub y_weights: Array2<f64>,
    pub x_scores: Array2<f64>,
    pub y_scores: Array2<f64>,
    pub x_loadings: Array2<f64>,
    /// Response loadings `Fᵀt / tᵀt` (1 × A).
    pub y_loadings: Array2<f64>,
    pub x_residual: Array2<f64>,
    pub y_residual: Array2<f64>,
    /// Column means removed from the frame's (standardized) predictors.
    pub x_center: Array1<f64>,
    pub y_mean: f64,
    /// Raw-unit standardization constants carried over from the frame.
    pub x_means: Array1<f64>,
    pub x_stds: Array1<f64>,
    /// Squared Frobenius norms of the centered data, for variance shares.
    pub x_total_ss: f64,
    pub y_total_ss: f64,
    pub requested_components: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub iterations: Vec<usize>,
}

/// Fitted coefficients for standardized predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

pub fn fit(frame: &AnalysisFrame, options: &FitOptions) -> Result<PlsModel> {
    frame.validate().map_err(|e| PlsError::InvalidFrame(e.to_string()))?;
    let (n, p) = frame.x.dim();
    let max = n.saturating_sub(1).min(p);
    if options.components > max {
        return Err(PlsError::TooManyComponents {
            requested: options.components,
            max,
        });
    }
    if !(options.tol > 0.0) {
        return Err(PlsError::InvalidOptions("tol must be positive".into()));
    }

    let x_center = frame.x.mean_axis(Axis(0)).expect("frame has rows");
    let y_mean = frame.y.mean().expect("frame has rows");
    let mut e = &frame.x - &x_center;
    let mut f = (&frame.y - y_mean).insert_axis(Axis(1));
    let x_total_ss = frobenius(e.view()).powi(2);
    let y_total_ss = frobenius(f.view()).powi(2);

    let mut comps = Vec::with_capacity(options.components);
    for _ in 0..options.components {
        if frobenius(e.view()) < ZERO_RESIDUAL || frobenius(f.view()) < ZERO_RESIDUAL {
            break;
        }
        let comp = match nipals_component(&e, &f, options.tol, options.max_iter) {
            Ok(c) => c,
            Err(PlsError::ZeroResidual) => break,
            Err(err) => return Err(err),
        };
        let (e_next, f_next) = deflate(&e, &f, &comp);
        e = e_next;
        f = f_next;
        comps.push(comp);
    }
    if comps.len() < options.components {
        log::info!(
            "{}: residuals exhausted after {} of {} components",
            frame.label,
            comps.len(),
            options.components
        );
    }

    let a = comps.len();
    let stack = |len: usize, pick: &dyn Fn(&super::Component) -> &Array1<f64>| {
        let mut m = Array2::zeros((len, a));
        for (k, c) in comps.iter().enumerate() {
            m.column_mut(k).assign(pick(c));
        }
        m
    };
    Ok(PlsModel {
        label: frame.label.clone(),
        predictors: frame.predictors.clone(),
        x_weights: stack(p, &|c| &c.w),
        y_weights: stack(1, &|c| &c.q),
        x_scores: stack(n, &|c| &c.t),
        y_scores: stack(n, &|c| &c.u),
        x_loadings: stack(p, &|c| &c.p),
        y_loadings: stack(1, &|c| &c.c),
        x_residual: e,
        y_residual: f,
        x_center,
        y_mean,
        x_means: Array1::from(frame.x_means.clone()),
        x_stds: Array1::from(frame.x_stds.clone()),
        x_total_ss,
        y_total_ss,
        requested_components: options.components,
        tol: options.tol,
        max_iter: options.max_iter,
        iterations: comps.iter().map(|c| c.iterations).collect(),
    })
}

/// Fits every frame independently; results keep the input order.
pub fn fit_many(frames: &[AnalysisFrame], options: &FitOptions, exec: Execution) -> Vec<Result<PlsModel>> {
    exec.map(frames, |frame| fit(frame, options))
}

impl PlsModel {
    /// Number of latent factors actually extracted.
    pub fn components(&self) -> usize {
        self.x_weights.ncols()
    }

    pub fn n_predictors(&self) -> usize {
        self.x_weights.nrows()
    }

    fn check_count(&self, a: usize) -> Result<()> {
        if a > self.components() {
            return Err(PlsError::InvalidComponentCount {
                requested: a,
                available: self.components(),
            });
        }
        Ok(())
    }

    /// Rotation matrix `W (PᵀW)⁻¹`, mapping centered predictors straight to
    /// scores: `T = X W*`.
    pub fn rotations(&self) -> Result<Array2<f64>> {
        let a = self.components();
        let w = &self.x_weights;
        let ptw = self.x_loadings.t().dot(w);
        let inv = inverse(&ptw).ok_or(PlsError::SingularProjection { components: a })?;
        Ok(w.dot(&inv))
    }

    pub fn coefficients(&self, a: usize) -> Result<CoefficientVector> {
        self.check_count(a)?;
        let p = self.n_predictors();
        let beta = if a == 0 {
            Array1::zeros(p)
        } else {
            let w = self.x_weights.slice(ndarray::s![.., ..a]);
            let pl = self.x_loadings.slice(ndarray::s![.., ..a]);
            let c = self.y_loadings.row(0).slice(ndarray::s![..a]).to_owned();
            let z = solve(&pl.t().dot(&w), &c).ok_or(PlsError::SingularProjection { components: a })?;
            w.dot(&z)
        };
        let intercept = self.y_mean - self.x_center.dot(&beta);
        if !intercept.is_finite() || beta.iter().any(|b| !b.is_finite()) {
            return Err(PlsError::SingularProjection { components: a });
        }
        Ok(CoefficientVector {
            intercept,
            coefficients: beta.to_vec(),
        })
    }

    /// Predicts from raw-unit predictor rows using the first `a` factors.
    pub fn predict(&self, x_new: &Array2<f64>, a: usize) -> Result<Array1<f64>> {
        if x_new.ncols() != self.n_predictors() {
            return Err(PlsError::ShapeMismatch(format!(
                "model has {} predictors, input has {} columns",
                self.n_predictors(),
                x_new.ncols()
            )));
        }
        let coef = self.coefficients(a)?;
        let z = (x_new - &self.x_means) / &self.x_stds;
        Ok(z.dot(&Array1::from(coef.coefficients)) + coef.intercept)
    }

    /// The same model with factor `k`'s sign flipped throughout.
    pub fn flip_component(&self, k: usize) -> Self {
        let mut m = self.clone();
        for mat in [
            &mut m.x_weights,
            &mut m.y_weights,
            &mut m.x_scores,
            &mut m.y_scores,
            &mut m.x_loadings,
            &mut m.y_loadings,
        ] {
            mat.column_mut(k).mapv_inplace(|v| -v);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn table_frame(y: [f64; 4]) -> AnalysisFrame {
        let x = array![
            [0.65, 0.84, -0.41, -0.81, 1.71],
            [0.79, 0.96, -0.56, -0.91, -0.36],
            [0.27, -0.29, 1.72, 0.14, -0.84],
            [-1.70, -1.51, -0.75, 1.58, -0.50]
        ];
        AnalysisFrame::new(
            x,
            Array1::from(y.to_vec()),
            (0..4).map(|i| i.to_string()).collect(),
            (0..5).map(|j| format!("x{j}")).collect(),
            "t",
        )
        .unwrap()
    }

    #[test]
    fn too_many_components() {
        let f = table_frame([0.36, 0.87, -1.70, 0.47]);
        assert_eq!(
            fit(&f, &FitOptions::with_components(4)),
            Err(PlsError::TooManyComponents { requested: 4, max: 3 })
        );
    }

    #[test]
    fn zero_components_predict_the_mean() {
        let f = table_frame([1.70, 1.80, -0.55, -0.84]);
        let m = fit(&f, &FitOptions::with_components(0)).unwrap();
        assert_eq!(m.components(), 0);
        let pred = m.predict(&f.x, 0).unwrap();
        for v in pred {
            assert!((v - 0.5275).abs() < 1e-12);
        }
    }

    #[test]
    fn full_rank_interpolates_training_data() {
        let y = [0.36, 0.87, -1.70, 0.47];
        let f = table_frame(y);
        let m = fit(&f, &FitOptions::default()).unwrap();
        assert_eq!(m.components(), 3);
        let pred = m.predict(&f.x, 3).unwrap();
        for (p, y) in pred.iter().zip(y) {
            assert!((p - y).abs() < 1e-6, "{p} vs {y}");
        }
    }

    #[test]
    fn mean_row_predicts_intercept_and_shape_errors() {
        let f = table_frame([0.36, 0.87, -1.70, 0.47]);
        let m = fit(&f, &FitOptions::default()).unwrap();
        let coef = m.coefficients(2).unwrap();
        let means = m.x_means.clone().insert_axis(Axis(0));
        let pred = m.predict(&means, 2).unwrap();
        assert!((pred[0] - coef.intercept).abs() < 1e-12);
        assert!(matches!(
            m.predict(&Array2::zeros((1, 4)), 2),
            Err(PlsError::ShapeMismatch(_))
        ));
        assert!(matches!(
            m.coefficients(4),
            Err(PlsError::InvalidComponentCount { .. })
        ));
    }

    #[test]
    fn constant_response_stops_before_any_factor() {
        let f = table_frame([2.0; 4]);
        let m = fit(&f, &FitOptions::default()).unwrap();
        assert_eq!(m.components(), 0);
        assert_eq!(m.requested_components, 3);
    }

    #[test]
    fn rank_one_predictors_truncate_early() {
        let x = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0], [4.0, 8.0]];
        let frame = AnalysisFrame::new(
            x,
            array![1.0, 3.0, 2.0, 5.0],
            (0..4).map(|i| i.to_string()).collect(),
            vec!["a".into(), "b".into()],
            "r1",
        )
        .unwrap();
        let m = fit(&frame, &FitOptions::with_components(2)).unwrap();
        assert_eq!(m.components(), 1);
    }

    #[test]
    fn rotations_map_centered_x_to_scores() {
        let f = table_frame([-1.28, -1.55, -0.90, 3.73]);
        let m = fit(&f, &FitOptions::default()).unwrap();
        let t = (&f.x - &m.x_center).dot(&m.rotations().unwrap());
        for (a, b) in t.iter().zip(m.x_scores.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
