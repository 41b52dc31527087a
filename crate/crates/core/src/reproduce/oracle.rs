//! Minimum-norm least squares through the pseudoinverse, kept separate from
//! the NIPALS code it checks.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::frames::AnalysisFrame;

/// `pinv(Xc) · yc` for the frame's column-centered predictors and response.
///
/// The pseudoinverse comes from the eigendecomposition of the smaller Gram
/// matrix: with `XᵀX = V Λ Vᵀ`, `pinv(X) y = V Λ⁺ Vᵀ Xᵀ y`, and with
/// `XXᵀ = U Λ Uᵀ`, `pinv(X) y = Xᵀ U Λ⁺ Uᵀ y`. Eigenvalues below `1e-12`
/// of the largest count as zero.
pub fn min_norm_coefficients(frame: &AnalysisFrame) -> Option<Vec<f64>> {
    let (n, p) = frame.x.dim();
    let mut x = DMatrix::from_fn(n, p, |i, j| frame.x[[i, j]]);
    for mut col in x.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let y_mean = frame.y.iter().sum::<f64>() / n as f64;
    let y = DVector::from_iterator(n, frame.y.iter().map(|v| v - y_mean));

    let tall = n >= p;
    let gram = if tall { x.transpose() * &x } else { &x * x.transpose() };
    let rhs = if tall { x.transpose() * &y } else { y.clone() };
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 10_000)?;
    let largest = eig.eigenvalues.amax();
    if !(largest > 0.0) {
        return Some(vec![0.0; p]);
    }
    let mut z = DVector::zeros(rhs.len());
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        if *lambda > 1e-12 * largest {
            let v = eig.eigenvectors.column(k);
            z += v * (v.dot(&rhs) / lambda);
        }
    }
    let beta = if tall { z } else { x.transpose() * z };
    if beta.iter().any(|b| !b.is_finite()) {
        return None;
    }
    Some(beta.iter().copied().collect())
}
