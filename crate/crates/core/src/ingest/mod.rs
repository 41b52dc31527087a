//! External-data boundary: bicycle counts over an injectable transport with
//! a verbatim on-disk cache, and census tables aggregated per catchment.

mod acs;
mod cache;
mod counts;
mod transport;

pub use acs::{
    catchment_profile, parse_acs_age, parse_acs_education, parse_acs_income, parse_acs_sex,
    AcsRow, AcsSchema, AcsTables, AgeBracket, RawAcsTable,
};
pub use cache::{sha256_hex, CacheMeta, ResponseCache};
pub use counts::{cache_key, fetch_counts, fetch_many, parse_counts_csv, COUNTS_HEADER};
#[cfg(feature = "http")]
pub use transport::HttpTransport;
pub use transport::{FixtureTransport, RecordingTransport, Transport, TransportError};

use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::FrameError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("GET {url} failed after {attempts} attempt(s): {message}")]
    Network {
        url: String,
        attempts: u32,
        message: String,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("cache entry {key:?} failed its checksum")]
    CacheCorrupt { key: String },
    #[error("io: {0}")]
    Io(String),
    #[error("table {table}: county {county:?} not present")]
    MissingCounty { table: String, county: String },
    #[error("table {table}: county {county:?} has {actual} categories, expected {expected}")]
    CategoryCountMismatch {
        table: String,
        county: String,
        expected: usize,
        actual: usize,
    },
    #[error("table {table}: {message}")]
    InvalidTable { table: String, message: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid date range {start}..{end}")]
    InvalidRange { start: NaiveDate, end: NaiveDate },
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Inclusive date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, IngestError> {
        if start > end {
            return Err(IngestError::InvalidRange { start, end });
        }
        Ok(Self { start, end })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SourceConfig {
    /// URL with `{station}`, `{start}` and `{end}` placeholders.
    pub counts_endpoint: String,
    pub cache_dir: std::path::PathBuf,
    pub timeout_secs: u64,
    pub retries: u32,
    pub parallelism: usize,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            counts_endpoint: "https://counts.example.invalid/stations/{station}/counts.csv?start={start}&end={end}".into(),
            cache_dir: ".bikeshift-cache".into(),
            timeout_secs: 30,
            retries: 2,
            parallelism: 4,
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.timeout_secs == 0 {
            return Err(IngestError::InvalidConfig("timeout_secs must be positive".into()));
        }
        if self.parallelism == 0 {
            return Err(IngestError::InvalidConfig("parallelism must be at least 1".into()));
        }
        for placeholder in ["{station}", "{start}", "{end}"] {
            if !self.counts_endpoint.contains(placeholder) {
                return Err(IngestError::InvalidConfig(format!(
                    "counts_endpoint lacks {placeholder}"
                )));
            }
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn counts_url(&self, station_id: &str, range: DateRange) -> String {
        self.counts_endpoint
            .replace("{station}", station_id)
            .replace("{start}", &range.start.to_string())
            .replace("{end}", &range.end.to_string())
    }
}
