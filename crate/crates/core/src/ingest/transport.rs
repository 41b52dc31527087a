use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TransportError(pub String);

/// Fetches the body behind a URL.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, timeout: Duration) -> Result<Vec<u8>, TransportError>;
}

/// Serves recorded responses keyed by exact URL.
#[derive(Debug, Clone, Default)]
pub struct FixtureTransport {
    responses: BTreeMap<String, Vec<u8>>,
}

#[derive(Deserialize)]
struct Manifest {
    responses: BTreeMap<String, String>,
}

impl FixtureTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_response(mut self, url: impl Into<String>, body: impl Into<Vec<u8>>) -> Self {
        self.responses.insert(url.into(), body.into());
        self
    }

    /// Loads `manifest.json` (`{"responses": {"<url>": "<file>"}}`) from
    /// `dir`, resolving files relative to it.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(dir.join("manifest.json"))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let mut responses = BTreeMap::new();
        for (url, file) in manifest.responses {
            responses.insert(url, std::fs::read(dir.join(file))?);
        }
        Ok(Self { responses })
    }
}

impl Transport for FixtureTransport {
    fn get(&self, url: &str, _timeout: Duration) -> Result<Vec<u8>, TransportError> {
        self.responses
            .get(url)
            .cloned()
            .ok_or_else(|| TransportError(format!("no recorded response for {url}")))
    }
}

/// Wraps a transport and records every URL requested through it.
#[derive(Debug)]
pub struct RecordingTransport<T> {
    inner: T,
    calls: Mutex<Vec<String>>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<String> {
        self.calls.lock().expect("recorder lock").clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().expect("recorder lock").len()
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn get(&self, url: &str, timeout: Duration) -> Result<Vec<u8>, TransportError> {
        self.calls.lock().expect("recorder lock").push(url.to_string());
        self.inner.get(url, timeout)
    }
}

/// Plain HTTP GET.
#[cfg(feature = "http")]
#[derive(Debug, Default, Clone, Copy)]
pub struct HttpTransport;

#[cfg(feature = "http")]
impl Transport for HttpTransport {
    fn get(&self, url: &str, timeout: Duration) -> Result<Vec<u8>, TransportError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        let mut response = agent.get(url).call().map_err(|e| TransportError(e.to_string()))?;
        response
            .body_mut()
            .read_to_vec()
            .map_err(|e| TransportError(e.to_string()))
    }
}
