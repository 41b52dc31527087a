use bikeshift::exec::Execution;
use bikeshift::frames::AnalysisFrame;
use bikeshift::plsr::{fit, fit_many, variance_explained, vip, FitOptions, PlsError, VipBasis};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

fn frame(x: Array2<f64>, y: Array1<f64>) -> AnalysisFrame {
    let (n, p) = x.dim();
    AnalysisFrame::new(
        x,
        y,
        (0..n).map(|i| format!("s{i}")).collect(),
        (0..p).map(|j| format!("x{j}")).collect(),
        "random",
    )
    .unwrap()
}

fn centered(frame: &AnalysisFrame) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (n, p) = frame.x.dim();
    let mut xc = vec![vec![0.0; p]; n];
    for j in 0..p {
        let m = (0..n).map(|i| frame.x[[i, j]]).sum::<f64>() / n as f64;
        for i in 0..n {
            xc[i][j] = frame.x[[i, j]] - m;
        }
    }
    let ym = frame.y.sum() / n as f64;
    (xc, frame.y.iter().map(|v| v - ym).collect())
}

/// Ordinary least squares on centered data through the normal equations,
/// solved by Gaussian elimination with partial pivoting. Returns the
/// solution and the smallest pivot seen.
fn ols(xc: &[Vec<f64>], yc: &[f64]) -> (Vec<f64>, f64) {
    let p = xc[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for r in 0..p {
        for c in 0..p {
            a[r][c] = xc.iter().map(|row| row[r] * row[c]).sum();
        }
        a[r][p] = xc.iter().zip(yc).map(|(row, y)| row[r] * y).sum();
    }
    let mut min_pivot = f64::INFINITY;
    for k in 0..p {
        let piv = (k..p).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        min_pivot = min_pivot.min(a[k][k].abs());
        for i in k + 1..p {
            let f = a[i][k] / a[k][k];
            for c in k..=p {
                a[i][c] -= f * a[k][c];
            }
        }
    }
    let mut b = vec![0.0; p];
    for k in (0..p).rev() {
        let s: f64 = (k + 1..p).map(|c| a[k][c] * b[c]).sum();
        b[k] = (a[k][p] - s) / a[k][k];
    }
    (b, min_pivot)
}

/// One-factor PLS1 in closed form: `w ∝ Xᵀy`, `t = Xw`, `β = w·(tᵀy / tᵀt)`.
fn one_factor(xc: &[Vec<f64>], yc: &[f64]) -> Vec<f64> {
    let p = xc[0].len();
    let mut w: Vec<f64> = (0..p).map(|j| xc.iter().zip(yc).map(|(r, y)| r[j] * y).sum()).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.iter_mut().for_each(|v| *v /= norm);
    let t: Vec<f64> = xc.iter().map(|r| r.iter().zip(&w).map(|(a, b)| a * b).sum()).collect();
    let ty: f64 = t.iter().zip(yc).map(|(a, b)| a * b).sum();
    let tt: f64 = t.iter().map(|v| v * v).sum();
    w.iter().map(|v| v * ty / tt).collect()
}

fn random_frame() -> impl Strategy<Value = AnalysisFrame> {
    (2usize..=4)
        .prop_flat_map(|p| (Just(p), (p + 2)..=10))
        .prop_flat_map(|(p, n)| {
            (
                proptest::collection::vec(-3.0f64..3.0, n * p),
                proptest::collection::vec(-3.0f64..3.0, n),
                Just((n, p)),
            )
        })
        .prop_map(|(xs, ys, (n, p))| frame(Array2::from_shape_vec((n, p), xs).unwrap(), Array1::from(ys)))
}

proptest! {
    #[test]
    fn full_factor_model_matches_least_squares(f in random_frame()) {
        let (xc, yc) = centered(&f);
        let (beta, pivot) = ols(&xc, &yc);
        prop_assume!(pivot > 1e-3);
        let p = f.n_predictors();
        let model = fit(&f, &FitOptions::with_components(p)).unwrap();
        let coef = model.coefficients(p).unwrap();
        for (a, b) in coef.coefficients.iter().zip(&beta) {
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
        }
        let fitted = model.predict(&f.x, p).unwrap();
        let y_mean = f.y.mean().unwrap();
        let ols_fit: Vec<f64> = xc
            .iter()
            .map(|row| row.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>() + y_mean)
            .collect();
        for (a, b) in fitted.iter().zip(&ols_fit) {
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn one_factor_model_matches_closed_form(f in random_frame()) {
        let (xc, yc) = centered(&f);
        prop_assume!(yc.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let model = match fit(&f, &FitOptions::with_components(1)) {
            Ok(m) => m,
            Err(PlsError::ZeroResidual) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let expected = one_factor(&xc, &yc);
        let got = model.coefficients(1).unwrap().coefficients;
        for (a, b) in got.iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn variance_shares_accumulate_to_at_most_one(f in random_frame()) {
        let (xc, yc) = centered(&f);
        prop_assume!(ols(&xc, &yc).1 > 1e-3);
        let p = f.n_predictors();
        let report = variance_explained(&fit(&f, &FitOptions::with_components(p)).unwrap());
        let mut previous = (0.0, 0.0);
        for c in &report.components {
            prop_assert!(c.x_share >= -1e-12 && c.y_share >= -1e-12);
            prop_assert!(c.cumulative_x >= previous.0 - 1e-12 && c.cumulative_y >= previous.1 - 1e-12);
            previous = (c.cumulative_x, c.cumulative_y);
        }
        prop_assert!(previous.0 <= 1.0 + 1e-9 && previous.1 <= 1.0 + 1e-9);
        // all p factors of a full-rank X span it completely
        prop_assert!((previous.0 - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn parallel_and_sequential_fits_are_identical() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let frames: Vec<AnalysisFrame> = (0..32)
        .map(|_| random_frame().new_tree(&mut runner).unwrap().current())
        .collect();
    let options = FitOptions::with_components(2);
    let seq = fit_many(&frames, &options, Execution::Sequential);
    let par = fit_many(&frames, &options, Execution::Parallel);
    for (a, b) in seq.iter().zip(&par) {
        match (a, b) {
            (Ok(a), Ok(b)) => assert_eq!(a, b),
            (Err(a), Err(b)) => assert_eq!(a.to_string(), b.to_string()),
            _ => panic!("executions disagree"),
        }
    }
}

#[test]
fn rejects_more_factors_than_identifiable() {
    let f = frame(
        Array2::from_shape_vec((3, 4), (0..12).map(|v| (v * v % 7) as f64).collect()).unwrap(),
        Array1::from(vec![1.0, 2.0, 4.0]),
    );
    assert!(matches!(
        fit(&f, &FitOptions::with_components(3)),
        Err(PlsError::TooManyComponents { requested: 3, max: 2 })
    ));
}

proptest! {
    #[test]
    fn squared_vip_sums_to_predictor_count(f in random_frame()) {
        let (xc, yc) = centered(&f);
        prop_assume!(ols(&xc, &yc).1 > 1e-3);
        let p = f.n_predictors();
        let model = fit(&f, &FitOptions::with_components(p)).unwrap();
        for a in 1..=p {
            let scores = vip(&model, a, VipBasis::Weights).unwrap();
            let total: f64 = scores.iter().map(|v| v * v).sum();
            prop_assert!((total - p as f64).abs() <= 1e-6, "a={a}: {total}");
        }
    }

    #[test]
    fn flipping_a_factor_changes_no_derived_quantity(f in random_frame(), k in 0usize..2) {
        let (xc, yc) = centered(&f);
        prop_assume!(ols(&xc, &yc).1 > 1e-3);
        let model = fit(&f, &FitOptions::with_components(2)).unwrap();
        let flipped = model.flip_component(k);
        let (a, b) = (model.coefficients(2).unwrap(), flipped.coefficients(2).unwrap());
        prop_assert!((a.intercept - b.intercept).abs() <= 1e-12);
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let (va, vb) = (vip(&model, 2, VipBasis::Weights).unwrap(), vip(&flipped, 2, VipBasis::Weights).unwrap());
        for (x, y) in va.iter().zip(&vb) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert_eq!(variance_explained(&model), variance_explained(&flipped));
    }
}
