//! HTTP annotation service, sidecar and command-line harness around
//! `clore-core`.

pub mod app;
pub mod rle;
pub mod sidecar;
pub mod store;

use std::path::Path;
use std::str::FromStr;

use clore_core::eval::{load_dataset, synthetic_suite, EvalError, Sample};
use clore_core::predictor::{Endpoint, ExternalPredictor, ReferenceClickPredictor, SharedPredictor};

/// `reference` or `external:<endpoint>`.
pub fn parse_predictor(arg: &str) -> Result<SharedPredictor, String> {
    match arg.trim() {
        "reference" => Ok(SharedPredictor::new(ReferenceClickPredictor::default())),
        s => match s.strip_prefix("external:") {
            Some(ep) => Ok(SharedPredictor::new(ExternalPredictor::new(Endpoint::from_str(ep)?))),
            None => Err(format!("unknown predictor {s:?}, expected reference or external:<addr>")),
        },
    }
}

/// Where benchmark samples come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    /// `synthetic:N` or `synthetic:N:SEED`
    Synthetic { count: usize, seed: Option<u64> },
    /// Directory with `images/` and `masks/`.
    Directory(std::path::PathBuf),
}

impl FromStr for DataSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let Some(rest) = s.strip_prefix("synthetic:") else {
            return Ok(DataSource::Directory(s.into()));
        };
        let (n, seed) = match rest.split_once(':') {
            Some((n, seed)) => (n, Some(seed.parse().map_err(|e| format!("bad seed {seed:?}: {e}"))?)),
            None => (rest, None),
        };
        let count = n.parse().map_err(|e| format!("bad sample count {n:?}: {e}"))?;
        Ok(DataSource::Synthetic { count, seed })
    }
}

impl DataSource {
    /// Samples in a fixed order; `default_seed` applies to synthetic data
    /// without an explicit seed.
    pub fn load(&self, default_seed: u64) -> Result<Vec<Sample>, EvalError> {
        match self {
            DataSource::Synthetic { count, seed } => Ok(synthetic_suite(*count, seed.unwrap_or(default_seed))),
            DataSource::Directory(root) => load_directory(root),
        }
    }
}

fn load_directory(root: &Path) -> Result<Vec<Sample>, EvalError> {
    let load = load_dataset(root)?;
    for w in &load.warnings {
        log::warn!("{w}");
    }
    load.records.iter().map(|r| r.load()).collect()
}
