use bikeshift::catchment::GeoError;
use bikeshift::frames::FrameError;
use bikeshift::ingest::IngestError;
use bikeshift::plsr::PlsError;
use bikeshift::report::ReportError;
use bikeshift::reproduce::ReproduceError;
use thiserror::Error;

/// Exit status 2 for bad input or configuration, 1 for everything else.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Internal(_) => "internal",
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Internal(format!("{}: {e}", path.display()))
    }
}

impl From<FrameError> for CliError {
    fn from(e: FrameError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GeoError> for CliError {
    fn from(e: GeoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PlsError> for CliError {
    fn from(e: PlsError) -> Self {
        match e {
            PlsError::NoConvergence { .. } | PlsError::SingularProjection { .. } => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Network { .. } | IngestError::Io(_) => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Model(m) => m.into(),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<ReproduceError> for CliError {
    fn from(e: ReproduceError) -> Self {
        match e {
            ReproduceError::Model(m) => m.into(),
            ReproduceError::Report(r) => r.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}
