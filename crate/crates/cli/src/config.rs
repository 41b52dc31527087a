use std::path::{Path, PathBuf};

use bikeshift::catchment::DEFAULT_RADIUS_M;
use bikeshift::exec::Execution;
use bikeshift::frames::{RateMode, YearPair};
use bikeshift::ingest::SourceConfig;
use bikeshift::plsr::{FitOptions, VipBasis};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportMode {
    #[default]
    Live,
    Fixtures,
}

/// Settings shared by every subcommand. Loaded from `--config` JSON, then
/// overridden field by field from the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schedule: Option<PathBuf>,
    pub radius_m: f64,
    pub components: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub standardize_y: bool,
    pub rate_mode: RateMode,
    pub base_year: i32,
    pub target_year: i32,
    pub vip_basis: VipBasis,
    pub transport: TransportMode,
    pub fixtures_dir: Option<PathBuf>,
    pub stations: Option<PathBuf>,
    pub counties: Option<PathBuf>,
    pub acs_dir: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub models_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub counts_endpoint: String,
    pub cache_dir: PathBuf,
    pub timeout_secs: u64,
    pub retries: u32,
    pub parallelism: usize,
    pub sequential: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let source = SourceConfig::default();
        let years = YearPair::default();
        let fit = FitOptions::default();
        Self {
            schedule: None,
            radius_m: DEFAULT_RADIUS_M,
            components: fit.components,
            tol: fit.tol,
            max_iter: fit.max_iter,
            standardize_y: false,
            rate_mode: RateMode::default(),
            base_year: years.base,
            target_year: years.target,
            vip_basis: VipBasis::default(),
            transport: TransportMode::default(),
            fixtures_dir: None,
            stations: None,
            counties: None,
            acs_dir: None,
            counts: None,
            input: None,
            models_dir: None,
            output_dir: PathBuf::from("out"),
            counts_endpoint: source.counts_endpoint,
            cache_dir: source.cache_dir,
            timeout_secs: source.timeout_secs,
            retries: source.retries,
            parallelism: source.parallelism,
            sequential: false,
        }
    }
}

fn parse_json_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// One flag per config field.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Period schedule JSON.
    #[arg(long, global = true)]
    pub schedule: Option<PathBuf>,
    #[arg(long, global = true)]
    pub radius_m: Option<f64>,
    /// Latent factors to extract.
    #[arg(long, global = true)]
    pub components: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub standardize_y: Option<bool>,
    /// `ratio_of_ratios` or `year_over_year`.
    #[arg(long, global = true, value_parser = parse_json_enum::<RateMode>)]
    pub rate_mode: Option<RateMode>,
    #[arg(long, global = true)]
    pub base_year: Option<i32>,
    #[arg(long, global = true)]
    pub target_year: Option<i32>,
    /// `weights` or `rotations`.
    #[arg(long, global = true, value_parser = parse_json_enum::<VipBasis>)]
    pub vip_basis: Option<VipBasis>,
    /// `live` or `fixtures`.
    #[arg(long, global = true, value_parser = parse_json_enum::<TransportMode>)]
    pub transport: Option<TransportMode>,
    #[arg(long, global = true)]
    pub fixtures_dir: Option<PathBuf>,
    /// Stations CSV (`station_id,name,latitude,longitude`).
    #[arg(long, global = true)]
    pub stations: Option<PathBuf>,
    /// County polygons as a GeoJSON FeatureCollection.
    #[arg(long, global = true)]
    pub counties: Option<PathBuf>,
    /// Directory holding income.csv, education.csv, age.csv and sex.csv.
    #[arg(long, global = true)]
    pub acs_dir: Option<PathBuf>,
    /// Counts CSV (`station_id,date,count`).
    #[arg(long, global = true)]
    pub counts: Option<PathBuf>,
    /// Frame table CSV, as written by `derive`.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true)]
    pub models_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub counts_endpoint: Option<String>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub timeout_secs: Option<u64>,
    #[arg(long, global = true)]
    pub retries: Option<u32>,
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Disable data-parallel execution.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub sequential: Option<bool>,
}

macro_rules! apply {
    ($cfg:ident, $ov:ident; $($field:ident),* ; $($opt:ident),*) => {
        $(if let Some(v) = $ov.$field.clone() { $cfg.$field = v; })*
        $(if let Some(v) = $ov.$opt.clone() { $cfg.$opt = Some(v); })*
    };
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = read_text(p)?;
                serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        let ov = overrides;
        apply!(cfg, ov;
            radius_m, components, tol, max_iter, standardize_y, rate_mode, base_year, target_year,
            vip_basis, transport, output_dir, counts_endpoint, cache_dir, timeout_secs, retries,
            parallelism, sequential;
            schedule, fixtures_dir, stations, counties, acs_dir, counts, input, models_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Input(m.to_string()));
        if self.components < 1 {
            return bad("components must be at least 1");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_iter < 1 {
            return bad("max_iter must be at least 1");
        }
        if !(self.radius_m > 0.0) || !self.radius_m.is_finite() {
            return bad("radius_m must be positive");
        }
        self.source().validate().map_err(|e| CliError::Input(e.to_string()))
    }

    pub fn source(&self) -> SourceConfig {
        SourceConfig {
            counts_endpoint: self.counts_endpoint.clone(),
            cache_dir: self.cache_dir.clone(),
            timeout_secs: self.timeout_secs,
            retries: self.retries,
            parallelism: self.parallelism,
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            components: self.components,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    pub fn years(&self) -> YearPair {
        YearPair {
            base: self.base_year,
            target: self.target_year,
        }
    }

    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    pub fn models_dir(&self) -> PathBuf {
        self.models_dir.clone().unwrap_or_else(|| self.output_dir.join("models"))
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, field: &str) -> Result<&'a Path, CliError> {
        value
            .as_deref()
            .ok_or_else(|| CliError::Input(format!("{field} is not set (use --{} or the config file)", field.replace('_', "-"))))
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}
