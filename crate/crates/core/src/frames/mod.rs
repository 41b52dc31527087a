//! Analysis-ready inputs: periodic change rates, column standardization and
//! catchment-level socioeconomic aggregation.

mod census;
mod frame;
mod io;
mod series;
mod standardize;

pub use census::{
    avg_age, avg_education, avg_income, population_and_gender, SocioeconomicProfile,
    EDUCATION_LEVELS, INCOME_CATEGORIES,
};
pub use frame::{assemble_frame, AnalysisFrame, Predictor};
pub use io::{
    read_frame_table, read_profiles_csv, read_transitions_csv, write_profiles_csv,
    write_frame_table, write_transitions_csv, FRAME_TABLE_HEADER, PROFILES_HEADER, TRANSITIONS_HEADER,
};
pub use series::{
    change_rate, period_totals, rates_from_yoy, transition_rates, CountSeries, Period,
    PeriodSchedule, PeriodWindow, RateMode, Transition, TransitionRow, TransitionTable,
    YearPair,
};
pub use standardize::{mean_and_population_std, standardize, StandardizedColumn};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("zero baseline: previous-period count is 0")]
    ZeroBaseline,
    #[error("station {station}: no observations in {period} {year}")]
    EmptyPeriod {
        station: String,
        period: Period,
        year: i32,
    },
    #[error("station {0}: count series is empty")]
    EmptySeries(String),
    #[error("column has zero variance")]
    ZeroVariance,
    #[error("constant columns: {}", .0.join(", "))]
    ConstantColumns(Vec<String>),
    #[error("column needs at least 2 values, got {0}")]
    TooShort(usize),
    #[error("total household count is zero")]
    EmptyHouseholds,
    #[error("expected {expected} categories, got {actual}")]
    CategoryCount { expected: usize, actual: usize },
    #[error("length mismatch: {0} counts vs {1} levels")]
    LengthMismatch(usize, usize),
    #[error("female population is zero")]
    ZeroFemale,
    #[error("invalid count series for station {station}: {reason}")]
    InvalidSeries { station: String, reason: String },
    #[error("invalid period schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid profile for station {station}: {reason}")]
    InvalidProfile { station: String, reason: String },
    #[error("station sets differ between profiles and transitions: {0}")]
    StationMismatch(String),
    #[error("need at least 2 stations, got {0}")]
    TooFewStations(usize),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("csv error at line {line}: {message}")]
    Csv { line: u64, message: String },
}

pub type Result<T> = std::result::Result<T, FrameError>;
