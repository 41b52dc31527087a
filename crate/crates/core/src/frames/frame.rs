use std::collections::BTreeSet;
use std::fmt;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{standardize, FrameError, Result, SocioeconomicProfile, Transition, TransitionTable};

/// The five catchment predictors, in their canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Predictor {
    AvgIncome,
    AvgEducation,
    AvgAge,
    TotalPopulation,
    MaleFemaleRatio,
}

impl Predictor {
    pub const ALL: [Predictor; 5] = [
        Predictor::AvgIncome,
        Predictor::AvgEducation,
        Predictor::AvgAge,
        Predictor::TotalPopulation,
        Predictor::MaleFemaleRatio,
    ];

    /// Row label used in rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            Predictor::AvgIncome => "Average Income",
            Predictor::AvgEducation => "Average Education Level",
            Predictor::AvgAge => "Average Age",
            Predictor::TotalPopulation => "Total Population",
            Predictor::MaleFemaleRatio => "Male/Female Rate",
        }
    }

    /// CSV column name; also used in figure file names.
    pub fn column(self) -> &'static str {
        match self {
            Predictor::AvgIncome => "avg_income",
            Predictor::AvgEducation => "avg_education",
            Predictor::AvgAge => "avg_age",
            Predictor::TotalPopulation => "total_population",
            Predictor::MaleFemaleRatio => "male_female_ratio",
        }
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Standardized predictors paired with one dependent column.
///
/// `x_means`/`x_stds` are the constants that map raw predictor values onto
/// the columns of `x`; a frame read from already-standardized data carries
/// zeros and ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisFrame {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub station_ids: Vec<String>,
    pub predictors: Vec<String>,
    pub label: String,
    pub x_means: Vec<f64>,
    pub x_stds: Vec<f64>,
}

impl AnalysisFrame {
    /// Builds a frame whose `x` is taken as already standardized.
    pub fn new(
        x: Array2<f64>,
        y: Array1<f64>,
        station_ids: Vec<String>,
        predictors: Vec<String>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let p = x.ncols();
        let frame = Self {
            x,
            y,
            station_ids,
            predictors,
            label: label.into(),
            x_means: vec![0.0; p],
            x_stds: vec![1.0; p],
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn with_preprocessing(mut self, means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        self.x_means = means;
        self.x_stds = stds;
        self.validate()?;
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_predictors(&self) -> usize {
        self.x.ncols()
    }

    /// Predictor values in raw units, undoing the stored standardization.
    pub fn raw_x(&self) -> Array2<f64> {
        let mut raw = self.x.clone();
        for (j, mut col) in raw.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| v * self.x_stds[j] + self.x_means[j]);
        }
        raw
    }

    pub fn validate(&self) -> Result<()> {
        let (n, p) = self.x.dim();
        let bad = |m: String| Err(FrameError::InvalidFrame(m));
        if self.y.len() != n {
            return bad(format!("x has {n} rows but y has {}", self.y.len()));
        }
        if self.station_ids.len() != n {
            return bad(format!("{} station ids for {n} rows", self.station_ids.len()));
        }
        if self.predictors.len() != p {
            return bad(format!("{} predictor names for {p} columns", self.predictors.len()));
        }
        if self.x_means.len() != p || self.x_stds.len() != p {
            return bad("preprocessing constants do not match column count".into());
        }
        if self.x_stds.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return bad("preprocessing std must be positive".into());
        }
        if self.x.iter().chain(self.y.iter()).chain(&self.x_means).any(|v| !v.is_finite()) {
            return bad("missing or non-finite entry".into());
        }
        Ok(())
    }
}

/// Standardizes each profile column (and optionally the dependent column)
/// into an analysis frame for one transition.
pub fn assemble_frame(
    profiles: &[(String, SocioeconomicProfile)],
    transitions: &TransitionTable,
    transition: Transition,
    standardize_y: bool,
) -> Result<AnalysisFrame> {
    let n = profiles.len();
    if n < 2 {
        return Err(FrameError::TooFewStations(n));
    }
    let profile_ids: BTreeSet<&str> = profiles.iter().map(|(id, _)| id.as_str()).collect();
    let rate_ids: BTreeSet<&str> = transitions.rows().iter().map(|r| r.station_id.as_str()).collect();
    if profile_ids.len() != n {
        return Err(FrameError::StationMismatch("duplicate station in profiles".into()));
    }
    if profile_ids != rate_ids {
        let diff: Vec<&str> = profile_ids.symmetric_difference(&rate_ids).copied().collect();
        return Err(FrameError::StationMismatch(diff.join(", ")));
    }
    for (id, profile) in profiles {
        profile.validate(id)?;
    }

    let mut x = Array2::zeros((n, Predictor::ALL.len()));
    let mut means = Vec::with_capacity(5);
    let mut stds = Vec::with_capacity(5);
    let mut constant = Vec::new();
    for (j, predictor) in Predictor::ALL.into_iter().enumerate() {
        let raw: Vec<f64> = profiles.iter().map(|(_, p)| p.values()[j]).collect();
        match standardize(&raw) {
            Ok(col) => {
                x.column_mut(j).assign(&Array1::from(col.values));
                means.push(col.source_mean);
                stds.push(col.source_std);
            }
            Err(FrameError::ZeroVariance) => {
                constant.push(predictor.column().to_string());
                means.push(0.0);
                stds.push(1.0);
            }
            Err(e) => return Err(e),
        }
    }

    let raw_y: Vec<f64> = profiles
        .iter()
        .map(|(id, _)| transitions.get(id).expect("station sets checked").rate(transition))
        .collect();
    let y = if standardize_y {
        match standardize(&raw_y) {
            Ok(col) => col.values,
            Err(FrameError::ZeroVariance) => {
                constant.push(transition.slug().to_string());
                raw_y
            }
            Err(e) => return Err(e),
        }
    } else {
        raw_y
    };
    if !constant.is_empty() {
        return Err(FrameError::ConstantColumns(constant));
    }

    let frame = AnalysisFrame {
        x,
        y: Array1::from(y),
        station_ids: profiles.iter().map(|(id, _)| id.clone()).collect(),
        predictors: Predictor::ALL.iter().map(|p| p.column().to_string()).collect(),
        label: transition.slug().to_string(),
        x_means: means,
        x_stds: stds,
    };
    frame.validate()?;
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::TransitionRow;
    use approx::assert_abs_diff_eq;

    /// Predictor rows and dependent columns as printed in the source table.
    const TABLE: [([f64; 3], [f64; 5]); 4] = [
        ([0.36, 1.70, -1.28], [0.65, 0.84, -0.41, -0.81, 1.71]),
        ([0.87, 1.80, -1.55], [0.79, 0.96, -0.56, -0.91, -0.36]),
        ([-1.70, -0.55, -0.90], [0.27, -0.29, 1.72, 0.14, -0.84]),
        ([0.47, -0.84, 3.73], [-1.70, -1.51, -0.75, 1.58, -0.50]),
    ];

    fn inputs() -> (Vec<(String, SocioeconomicProfile)>, TransitionTable) {
        // shift education/population/ratio so the raw profile satisfies its invariants
        let profiles = TABLE
            .iter()
            .enumerate()
            .map(|(i, (_, x))| {
                let v = [x[0], x[1] + 4.0, x[2], x[3] + 10.0, x[4] + 3.0];
                (i.to_string(), SocioeconomicProfile::from_values(v))
            })
            .collect();
        let rows = TABLE
            .iter()
            .enumerate()
            .map(|(i, (y, _))| TransitionRow {
                station_id: i.to_string(),
                rates: *y,
            })
            .collect();
        (profiles, TransitionTable::new(rows).unwrap())
    }

    #[test]
    fn standardized_y_reproduces_printed_column() {
        let (profiles, table) = inputs();
        let f = assemble_frame(&profiles, &table, Transition::PrePandemicToPandemic, true).unwrap();
        assert_eq!(f.x.dim(), (4, 5));
        assert_eq!(f.y.len(), 4);
        for (got, (y, _)) in f.y.iter().zip(TABLE) {
            assert_abs_diff_eq!(*got, y[0], epsilon = 0.01);
        }
        for (got, (_, x)) in f.x.column(2).iter().zip(TABLE) {
            assert_abs_diff_eq!(*got, x[2], epsilon = 0.01);
        }
    }

    #[test]
    fn raw_y_keeps_uncentered_column() {
        let (profiles, table) = inputs();
        let f = assemble_frame(&profiles, &table, Transition::PandemicToTransition, false).unwrap();
        assert_abs_diff_eq!(f.y.mean().unwrap(), 0.5275, epsilon = 1e-12);
        assert_eq!(f.y.to_vec(), vec![1.70, 1.80, -0.55, -0.84]);
    }

    #[test]
    fn identical_stations_are_constant_everywhere() {
        let p = SocioeconomicProfile::from_values([1.0, 2.0, 3.0, 4.0, 1.0]);
        let profiles = vec![("a".to_string(), p), ("b".to_string(), p)];
        let rows = ["a", "b"]
            .iter()
            .map(|id| TransitionRow {
                station_id: id.to_string(),
                rates: [1.0; 3],
            })
            .collect();
        let table = TransitionTable::new(rows).unwrap();
        match assemble_frame(&profiles, &table, Transition::PrePandemicToPandemic, true) {
            Err(FrameError::ConstantColumns(cols)) => assert_eq!(cols.len(), 6),
            other => panic!("expected ConstantColumns, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_station_sets() {
        let (mut profiles, table) = inputs();
        profiles[0].0 = "zz".into();
        assert!(matches!(
            assemble_frame(&profiles, &table, Transition::PrePandemicToPandemic, true),
            Err(FrameError::StationMismatch(_))
        ));
        assert!(matches!(
            assemble_frame(&profiles[..1], &table, Transition::PrePandemicToPandemic, true),
            Err(FrameError::TooFewStations(1))
        ));
    }

    #[test]
    fn raw_x_inverts_standardization() {
        let (profiles, table) = inputs();
        let f = assemble_frame(&profiles, &table, Transition::PrePandemicToPandemic, true).unwrap();
        let raw = f.raw_x();
        for (i, (_, p)) in profiles.iter().enumerate() {
            for j in 0..5 {
                assert_abs_diff_eq!(raw[[i, j]], p.values()[j], epsilon = 1e-12);
            }
        }
    }
}
