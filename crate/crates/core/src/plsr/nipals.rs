use ndarray::{Array1, Array2, Axis};

use super::linalg::{frobenius, norm};
use super::{PlsError, Result};

/// Residual norms below this are treated as exhausted.
pub const ZERO_RESIDUAL: f64 = 1e-12;

/// One latent factor extracted from the current residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// Unit predictor weight; `t = E w`.
    pub w: Array1<f64>,
    /// Predictor scores.
    pub t: Array1<f64>,
    /// Predictor loading `Eᵀt / tᵀt`.
    pub p: Array1<f64>,
    /// Unit response weight.
    pub q: Array1<f64>,
    /// Response scores `F q`.
    pub u: Array1<f64>,
    /// Response loading `Fᵀt / tᵀt`, used for deflation and regression.
    pub c: Array1<f64>,
    pub iterations: usize,
}

/// Extracts the leading covariance factor of `(e, f)` by alternating
/// projections until the predictor scores stop moving.
pub fn nipals_component(e: &Array2<f64>, f: &Array2<f64>, tol: f64, max_iter: usize) -> Result<Component> {
    if e.nrows() != f.nrows() {
        return Err(PlsError::ShapeMismatch(format!(
            "residuals have {} and {} rows",
            e.nrows(),
            f.nrows()
        )));
    }
    if frobenius(e.view()) < ZERO_RESIDUAL || frobenius(f.view()) < ZERO_RESIDUAL {
        return Err(PlsError::ZeroResidual);
    }

    // start from the response column carrying the most variance
    let start = f
        .axis_iter(Axis(1))
        .enumerate()
        .max_by(|a, b| norm(a.1).total_cmp(&norm(b.1)))
        .map(|(j, _)| j)
        .expect("f has at least one column");
    let mut u = f.column(start).to_owned();
    let mut previous: Option<Array1<f64>> = None;

    for iteration in 1..=max_iter.max(1) {
        let mut w = e.t().dot(&u);
        let w_norm = norm(w.view());
        if w_norm < ZERO_RESIDUAL {
            return Err(PlsError::ZeroResidual);
        }
        w /= w_norm;
        let t = e.dot(&w);
        let mut q = f.t().dot(&t);
        let q_norm = norm(q.view());
        if q_norm < ZERO_RESIDUAL {
            return Err(PlsError::ZeroResidual);
        }
        q /= q_norm;
        u = f.dot(&q);

        let converged = previous
            .as_ref()
            .is_some_and(|prev| norm((&t - prev).view()) <= tol);
        if converged {
            let tt = t.dot(&t);
            let p = e.t().dot(&t) / tt;
            let c = f.t().dot(&t) / tt;
            return Ok(Component {
                w,
                t,
                p,
                q,
                u,
                c,
                iterations: iteration,
            });
        }
        previous = Some(t);
    }
    Err(PlsError::NoConvergence { max_iter })
}

/// Removes the component's rank-one contribution from both residuals.
pub fn deflate(e: &Array2<f64>, f: &Array2<f64>, component: &Component) -> (Array2<f64>, Array2<f64>) {
    let t = component.t.view().insert_axis(Axis(1));
    let e_next = e - &t.dot(&component.p.view().insert_axis(Axis(0)));
    let f_next = f - &t.dot(&component.c.view().insert_axis(Axis(0)));
    (e_next, f_next)
}
