use std::collections::BTreeSet;

use bikeshift::frames::{read_frame_table, AnalysisFrame, Transition};
use bikeshift::plsr::{fit, FitOptions, PlsModel, VipBasis};
use bikeshift::report::{
    export_figure_data, markdown_to_csv, render_tables, write_documents, Document, ReportBundle, ReportError,
    TableFormat,
};
use ndarray::{array, Array1};

const TABLE1: &str = include_str!("../fixtures/table1.csv");

fn table1() -> (Vec<(Transition, AnalysisFrame)>, Vec<PlsModel>) {
    let frames = read_frame_table(TABLE1.as_bytes()).unwrap();
    let models = frames
        .iter()
        .map(|(_, f)| fit(f, &FitOptions::default()).unwrap())
        .collect();
    (frames, models)
}

fn bundle(frames: &[(Transition, AnalysisFrame)], models: &[PlsModel]) -> ReportBundle {
    let fits: Vec<_> = frames.iter().zip(models).map(|((t, f), m)| (*t, f, m)).collect();
    ReportBundle::build(&fits, VipBasis::Weights).unwrap()
}

fn doc<'a>(docs: &'a [Document], path: &str) -> &'a str {
    &docs.iter().find(|d| d.path.to_str() == Some(path)).unwrap().contents
}

fn numbers(csv_text: &str) -> Vec<f64> {
    csv_text
        .lines()
        .skip(1)
        .flat_map(|l| l.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .collect()
}

#[test]
fn published_variance_row_renders_verbatim() {
    let (frames, models) = table1();
    let mut b = bundle(&frames, &models);
    let pp = &mut b.periods[0];
    assert_eq!(pp.transition, Transition::PrePandemicToPandemic);
    for (c, share) in pp.variance.components.iter_mut().zip([0.330, 0.555, 0.115]) {
        c.x_share = share;
    }
    let docs = render_tables(&b, TableFormat::Csv).unwrap();
    let variance = doc(&docs, "reports/pre_pandemic_to_pandemic/variance.csv");
    assert!(variance.lines().any(|l| l == "X Variance,0.330,0.555,0.115"), "{variance}");
}

#[test]
fn five_documents_per_transition_with_predictors_in_order() {
    let (frames, models) = table1();
    let docs = render_tables(&bundle(&frames, &models), TableFormat::Csv).unwrap();
    assert_eq!(docs.len(), 15);
    let vip = doc(&docs, "reports/transition_to_normalization/vip.csv");
    let rows: Vec<&str> = vip.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        rows,
        ["Average Income", "Average Education Level", "Average Age", "Total Population", "Male/Female Rate"]
    );
    for d in &docs {
        assert!(!d.contents.contains(",,"), "blank cell in {}", d.path.display());
    }
}

#[test]
fn markdown_round_trips_to_the_csv_numbers() {
    let (frames, models) = table1();
    let b = bundle(&frames, &models);
    let csv = render_tables(&b, TableFormat::Csv).unwrap();
    let md = render_tables(&b, TableFormat::Markdown).unwrap();
    for (c, m) in csv.iter().zip(&md) {
        assert_eq!(c.path.with_extension(""), m.path.with_extension(""));
        assert_eq!(numbers(&markdown_to_csv(&m.contents)), numbers(&c.contents));
    }
}

#[test]
fn printed_numbers_stay_within_rounding_of_the_model() {
    let (frames, models) = table1();
    let b = bundle(&frames, &models);
    let docs = render_tables(&b, TableFormat::Csv).unwrap();
    for period in &b.periods {
        let path = format!("reports/{}/vip.csv", period.transition.slug());
        let printed = numbers(doc(&docs, &path));
        for (p, v) in printed.iter().zip(period.vip.scores.iter()) {
            assert!((p - v).abs() <= 5e-4);
        }
    }
}

#[test]
fn renders_are_byte_identical() {
    let (frames, models) = table1();
    let a = render_tables(&bundle(&frames, &models), TableFormat::Markdown).unwrap();
    let b = render_tables(&bundle(&frames, &models), TableFormat::Markdown).unwrap();
    assert_eq!(a, b);
}

#[test]
fn missing_transition_is_an_incomplete_bundle() {
    let (frames, models) = table1();
    let mut b = bundle(&frames, &models);
    b.periods.pop();
    assert!(matches!(render_tables(&b, TableFormat::Csv), Err(ReportError::IncompleteBundle(_))));
}

#[test]
fn fifteen_figure_files_with_four_rows_each() {
    let (frames, _) = table1();
    let refs: Vec<_> = frames.iter().map(|(t, f)| (*t, f)).collect();
    let docs = export_figure_data(&refs);
    assert_eq!(docs.len(), 15);
    let names: BTreeSet<_> = docs.iter().map(|d| d.path.clone()).collect();
    assert_eq!(names.len(), 15);
    for d in &docs {
        let mut lines = d.contents.lines();
        assert_eq!(lines.next(), Some("station_id,predictor_value,change_rate"));
        assert_eq!(lines.count(), 4);
    }
    let income = doc(&docs, "figures/avg_income__pre_pandemic_to_pandemic.csv");
    let first: Vec<&str> = income.lines().nth(1).unwrap().split(',').collect();
    let (_, pp) = &frames[0];
    let raw = pp.raw_x();
    assert_eq!(first[0], pp.station_ids[0]);
    assert!((first[1].parse::<f64>().unwrap() - raw[[0, 0]]).abs() < 1e-9);
    assert!((first[2].parse::<f64>().unwrap() - pp.y[0]).abs() < 1e-9);
}

#[test]
fn single_station_frame_still_emits_a_row() {
    let frame = AnalysisFrame::new(
        array![[1.0, 2.0]],
        Array1::from(vec![0.5]),
        vec!["only".into()],
        vec!["avg_income".into(), "avg_age".into()],
        "single",
    )
    .unwrap();
    let docs = export_figure_data(&[(Transition::PandemicToTransition, &frame)]);
    assert_eq!(docs.len(), 2);
    for d in &docs {
        assert_eq!(d.contents.lines().count(), 2);
    }
}

#[test]
fn documents_land_under_the_output_root() {
    let (frames, models) = table1();
    let docs = render_tables(&bundle(&frames, &models), TableFormat::Csv).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_documents(dir.path(), &docs).unwrap();
    for d in &docs {
        assert_eq!(std::fs::read_to_string(dir.path().join(&d.path)).unwrap(), d.contents);
    }
}
