//! Table and figure-data rendering for fitted models.
//!
//! Tables are written under `reports/<transition>/<table>.{csv,md}` and
//! scatter data under `figures/<predictor>__<transition>.csv`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{AnalysisFrame, Predictor, Transition};
use crate::plsr::{
    variance_explained, vip_table, CoefficientVector, PlsError, PlsModel, VarianceReport, VipBasis, VipTable,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("incomplete report bundle: {0}")]
    IncompleteBundle(String),
    #[error(transparent)]
    Model(#[from] PlsError),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, ReportError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Markdown => "md",
        }
    }
}

/// Everything rendered for one transition.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodReport {
    pub transition: Transition,
    pub predictors: Vec<String>,
    pub variance: VarianceReport,
    /// Rotation matrix, predictors × factors.
    pub weights: Array2<f64>,
    pub dependent_weights: Vec<f64>,
    pub loadings: Array2<f64>,
    pub dependent_loadings: Vec<f64>,
    pub vip: VipTable,
    pub coefficients: CoefficientVector,
}

impl PeriodReport {
    pub fn from_model(transition: Transition, model: &PlsModel, basis: VipBasis) -> Result<Self> {
        let a = model.components();
        Ok(Self {
            transition,
            predictors: model.predictors.clone(),
            variance: variance_explained(model),
            weights: model.rotations()?,
            dependent_weights: model.y_loadings.row(0).to_vec(),
            loadings: model.x_loadings.clone(),
            dependent_loadings: model.y_weights.row(0).to_vec(),
            vip: vip_table(model, basis)?,
            coefficients: model.coefficients(a)?,
        })
    }

    fn components(&self) -> usize {
        self.variance.components.len()
    }

    fn check(&self) -> Result<()> {
        let a = self.components();
        let p = self.predictors.len();
        let label = self.transition.label();
        let bad = |what: &str| Err(ReportError::IncompleteBundle(format!("{label}: {what}")));
        if a == 0 {
            return bad("no latent factors");
        }
        if self.weights.dim() != (p, a) || self.loadings.dim() != (p, a) || self.vip.scores.dim() != (p, a) {
            return bad("matrix shapes disagree with predictors and factors");
        }
        if self.dependent_weights.len() != a || self.dependent_loadings.len() != a {
            return bad("dependent rows have the wrong length");
        }
        if self.coefficients.coefficients.len() != p {
            return bad("coefficient count differs from predictor count");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigurePoint {
    pub station_id: String,
    pub predictor_value: f64,
    pub change_rate: f64,
}

/// Scatter points for one predictor against one transition's change rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureDataset {
    pub predictor: String,
    pub transition: Transition,
    pub points: Vec<FigurePoint>,
}

/// One figure dataset per predictor column of `frame`, in raw units.
pub fn figure_datasets(transition: Transition, frame: &AnalysisFrame) -> Vec<FigureDataset> {
    let raw = frame.raw_x();
    frame
        .predictors
        .iter()
        .enumerate()
        .map(|(j, predictor)| FigureDataset {
            predictor: predictor.clone(),
            transition,
            points: frame
                .station_ids
                .iter()
                .enumerate()
                .map(|(i, id)| FigurePoint {
                    station_id: id.clone(),
                    predictor_value: raw[[i, j]],
                    change_rate: frame.y[i],
                })
                .collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub periods: Vec<PeriodReport>,
    pub figures: Vec<FigureDataset>,
}

impl ReportBundle {
    /// Builds a bundle from fitted models and the frames they were fit on.
    pub fn build(fits: &[(Transition, &AnalysisFrame, &PlsModel)], basis: VipBasis) -> Result<Self> {
        let mut periods = Vec::with_capacity(fits.len());
        let mut figures = Vec::new();
        for (transition, frame, model) in fits {
            periods.push(PeriodReport::from_model(*transition, model, basis)?);
            figures.extend(figure_datasets(*transition, frame));
        }
        let bundle = Self { periods, figures };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn validate(&self) -> Result<()> {
        let present: BTreeSet<usize> = self.periods.iter().map(|p| p.transition.index()).collect();
        if present.len() != self.periods.len() {
            return Err(ReportError::IncompleteBundle("a transition appears twice".into()));
        }
        for t in Transition::ALL {
            if !present.contains(&t.index()) {
                return Err(ReportError::IncompleteBundle(format!("{} is missing", t.label())));
            }
        }
        for period in &self.periods {
            period.check()?;
        }
        for fig in &self.figures {
            let Some(period) = self.periods.iter().find(|p| p.transition == fig.transition) else {
                continue;
            };
            if !period.predictors.contains(&fig.predictor) {
                return Err(ReportError::IncompleteBundle(format!(
                    "figure data for unknown predictor {}",
                    fig.predictor
                )));
            }
        }
        Ok(())
    }
}

/// A rendered file, with its path relative to the output root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub path: PathBuf,
    pub contents: String,
}

pub fn write_documents(root: &Path, docs: &[Document]) -> Result<()> {
    for doc in docs {
        let path = root.join(&doc.path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| ReportError::Io(format!("{}: {e}", parent.display())))?;
        }
        fs::write(&path, &doc.contents).map_err(|e| ReportError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Three decimals; values with `0 < |v| < 5e-4` switch to two-digit
/// scientific form such as `9.54E-05`.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0.000".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    if v.abs() < 5e-4 {
        let s = format!("{v:.2e}");
        let (mantissa, exp) = s.split_once('e').expect("exponent form");
        let exp: i32 = exp.parse().expect("integer exponent");
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}E{sign}{:02}", exp.abs());
    }
    format!("{v:.3}")
}

/// Lowercase, with runs of non-alphanumerics collapsed to `_`.
pub fn slug(text: &str) -> String {
    let mut out = String::new();
    for ch in text.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn predictor_label(name: &str) -> String {
    Predictor::ALL
        .iter()
        .find(|p| p.column() == name)
        .map(|p| p.label().to_string())
        .unwrap_or_else(|| name.to_string())
}

struct Table {
    header: Vec<String>,
    rows: Vec<(String, Vec<f64>)>,
}

impl Table {
    fn by_factor(first: &str, a: usize) -> Self {
        let mut header = vec![first.to_string()];
        header.extend((1..=a).map(|k| format!("factor_{k}")));
        Self { header, rows: Vec::new() }
    }

    fn push(&mut self, label: impl Into<String>, values: Vec<f64>) {
        self.rows.push((label.into(), values));
    }

    fn push_matrix(&mut self, predictors: &[String], m: &Array2<f64>) {
        for (j, name) in predictors.iter().enumerate() {
            self.push(predictor_label(name), m.row(j).to_vec());
        }
    }

    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|(label, values)| {
                std::iter::once(label.clone())
                    .chain(values.iter().map(|v| format_number(*v)))
                    .collect()
            })
            .collect()
    }

    fn render(&self, format: TableFormat) -> String {
        match format {
            TableFormat::Csv => {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
                w.write_record(&self.header).expect("in-memory write");
                for row in self.cells() {
                    w.write_record(&row).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
            }
            TableFormat::Markdown => {
                let mut out = String::new();
                let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
                out.push_str(&line(&self.header));
                let rule: Vec<String> = self
                    .header
                    .iter()
                    .enumerate()
                    .map(|(i, _)| if i == 0 { "---".to_string() } else { "---:".to_string() })
                    .collect();
                out.push_str(&line(&rule));
                for row in self.cells() {
                    out.push_str(&line(&row));
                }
                out
            }
        }
    }
}

fn period_tables(period: &PeriodReport) -> Vec<(&'static str, Table)> {
    let a = period.components();
    let v = &period.variance.components;

    let mut variance = Table::by_factor("statistic", a);
    variance.push("X Variance", v.iter().map(|c| c.x_share).collect());
    variance.push("Cumulative X Variance", v.iter().map(|c| c.cumulative_x).collect());
    variance.push("Y Variance", v.iter().map(|c| c.y_share).collect());
    variance.push("Cumulative Y Variance", v.iter().map(|c| c.cumulative_y).collect());
    variance.push("Adjusted R-Square", v.iter().map(|c| c.adjusted_r2).collect());

    let mut weights = Table::by_factor("variable", a);
    weights.push_matrix(&period.predictors, &period.weights);
    weights.push("Dependent Variable", period.dependent_weights.clone());

    let mut loadings = Table::by_factor("variable", a);
    loadings.push_matrix(&period.predictors, &period.loadings);
    loadings.push("Dependent Variable", period.dependent_loadings.clone());

    let mut vip = Table::by_factor("variable", a);
    vip.push_matrix(&period.predictors, &period.vip.scores);

    let mut coefficients = Table {
        header: vec!["variable".into(), "coefficient".into()],
        rows: Vec::new(),
    };
    coefficients.push("Constant", vec![period.coefficients.intercept]);
    for (name, b) in period.predictors.iter().zip(&period.coefficients.coefficients) {
        coefficients.push(predictor_label(name), vec![*b]);
    }

    vec![
        ("variance", variance),
        ("weights", weights),
        ("loadings", loadings),
        ("vip", vip),
        ("coefficients", coefficients),
    ]
}

/// Five tables per transition, in transition order.
pub fn render_tables(bundle: &ReportBundle, format: TableFormat) -> Result<Vec<Document>> {
    bundle.validate()?;
    let mut periods: Vec<&PeriodReport> = bundle.periods.iter().collect();
    periods.sort_by_key(|p| p.transition.index());
    let mut docs = Vec::new();
    for period in periods {
        let dir = PathBuf::from("reports").join(period.transition.slug());
        for (name, table) in period_tables(period) {
            docs.push(Document {
                path: dir.join(format!("{name}.{}", format.extension())),
                contents: table.render(format),
            });
        }
    }
    Ok(docs)
}

fn figure_document(file_stem: &str, dataset: &FigureDataset) -> Document {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["station_id", "predictor_value", "change_rate"]).expect("in-memory write");
    for p in &dataset.points {
        w.write_record([p.station_id.clone(), p.predictor_value.to_string(), p.change_rate.to_string()])
            .expect("in-memory write");
    }
    Document {
        path: PathBuf::from("figures").join(format!("{file_stem}.csv")),
        contents: String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells"),
    }
}

/// One `station_id,predictor_value,change_rate` file per dataset. Values are
/// written at full precision. Slug collisions get a numeric suffix.
pub fn render_figures(datasets: &[FigureDataset]) -> Vec<Document> {
    let mut used = BTreeSet::new();
    datasets
        .iter()
        .map(|d| {
            let base = format!("{}__{}", slug(&d.predictor), d.transition.slug());
            let mut stem = base.clone();
            let mut n = 2;
            while !used.insert(stem.clone()) {
                stem = format!("{base}_{n}");
                n += 1;
            }
            figure_document(&stem, d)
        })
        .collect()
}

pub fn export_figure_data(frames: &[(Transition, &AnalysisFrame)]) -> Vec<Document> {
    let datasets: Vec<FigureDataset> = frames
        .iter()
        .flat_map(|(t, frame)| figure_datasets(*t, frame))
        .collect();
    render_figures(&datasets)
}

/// Converts a rendered markdown table back to CSV text.
pub fn markdown_to_csv(markdown: &str) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for (i, line) in markdown.lines().filter(|l| l.trim_start().starts_with('|')).enumerate() {
        if i == 1 {
            continue;
        }
        let inner = line.trim().trim_start_matches('|').trim_end_matches('|');
        let cells: Vec<&str> = inner.split(" | ").map(str::trim).collect();
        w.write_record(&cells).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(0.0), "0.000");
        assert_eq!(format_number(-0.0), "0.000");
        assert_eq!(format_number(0.33), "0.330");
        assert_eq!(format_number(-1.0066), "-1.007");
        assert_eq!(format_number(9.54e-5), "9.54E-05");
        assert_eq!(format_number(-3.2e-4), "-3.20E-04");
        assert_eq!(format_number(1.857e-15), "1.86E-15");
        assert_eq!(format_number(5e-4), "0.001");
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("Male/Female Rate"), "male_female_rate");
        assert_eq!(slug("avg_income"), "avg_income");
        assert_eq!(slug("  A--B "), "a_b");
    }

    #[test]
    fn markdown_back_to_csv() {
        let mut t = Table::by_factor("statistic", 3);
        t.push("X Variance", vec![0.33, 0.555, 0.115]);
        let md = t.render(TableFormat::Markdown);
        assert_eq!(markdown_to_csv(&md), t.render(TableFormat::Csv));
    }
}
