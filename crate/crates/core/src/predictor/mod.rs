//! The single segmentation function behind both coarse and local passes.

mod external;
pub mod protocol;
mod reference;

pub use external::{Endpoint, ExternalPredictor};
pub use reference::{ReferenceClickPredictor, ReferenceParams};

use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::clicks::ClickChannels;
use crate::raster::{BinaryMask, Dims, ProbMask, RasterError, RgbImage};

/// Everything a predictor sees for one patch. All planes share `dims()`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorInput {
    pub image: RgbImage,
    pub clicks: ClickChannels,
    /// Previous mask resampled to the patch; all background when absent.
    pub prev_mask: BinaryMask,
}

impl PredictorInput {
    pub fn new(
        image: RgbImage,
        clicks: ClickChannels,
        prev_mask: BinaryMask,
    ) -> Result<Self, PredictorError> {
        let dims = image.dims();
        for other in [clicks.positive.dims(), clicks.negative.dims(), prev_mask.dims()] {
            if other != dims {
                return Err(PredictorError::InvalidInput(
                    RasterError::DimensionMismatch {
                        left: dims,
                        right: other,
                    }
                    .to_string(),
                ));
            }
        }
        Ok(Self {
            image,
            clicks,
            prev_mask,
        })
    }

    pub fn dims(&self) -> Dims {
        self.image.dims()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PredictorCapabilities {
    /// Whether `predict` may be called from several threads at once.
    pub concurrent_safe: bool,
    /// When set, inputs must be resampled to exactly these dims.
    pub fixed_input_dims: Option<Dims>,
}

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("invalid predictor input: {0}")]
    InvalidInput(String),
    #[error("predictor backend failed: {0}")]
    Backend(String),
    #[error("predictor timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error(transparent)]
    Protocol(#[from] protocol::ProtocolError),
    #[error("predictor transport: {0}")]
    Io(#[from] std::io::Error),
}

/// A segmentation model: probabilities in, probabilities out, same dims.
pub trait Predictor: Send + Sync {
    fn predict(&self, input: &PredictorInput) -> Result<ProbMask, PredictorError>;

    fn capabilities(&self) -> PredictorCapabilities {
        PredictorCapabilities {
            concurrent_safe: true,
            fixed_input_dims: None,
        }
    }

    fn name(&self) -> &str {
        "predictor"
    }
}

impl<P: Predictor + ?Sized> Predictor for Arc<P> {
    fn predict(&self, input: &PredictorInput) -> Result<ProbMask, PredictorError> {
        (**self).predict(input)
    }

    fn capabilities(&self) -> PredictorCapabilities {
        (**self).capabilities()
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn predict(&self, input: &PredictorInput) -> Result<ProbMask, PredictorError> {
        (**self).predict(input)
    }

    fn capabilities(&self) -> PredictorCapabilities {
        (**self).capabilities()
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Shared handle to one predictor instance. Predictors that are not
/// concurrent-safe get a lock around every call.
#[derive(Clone)]
pub struct SharedPredictor {
    inner: Arc<dyn Predictor>,
    lock: Option<Arc<Mutex<()>>>,
}

impl SharedPredictor {
    pub fn new<P: Predictor + 'static>(predictor: P) -> Self {
        Self::from_arc(Arc::new(predictor))
    }

    pub fn from_arc(inner: Arc<dyn Predictor>) -> Self {
        let lock = (!inner.capabilities().concurrent_safe).then(|| Arc::new(Mutex::new(())));
        Self { inner, lock }
    }

    /// Whether two handles route to the same underlying instance.
    pub fn same_instance(&self, other: &SharedPredictor) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }
}

impl std::fmt::Debug for SharedPredictor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SharedPredictor")
            .field("name", &self.inner.name())
            .field("serialized", &self.lock.is_some())
            .finish()
    }
}

impl Predictor for SharedPredictor {
    fn predict(&self, input: &PredictorInput) -> Result<ProbMask, PredictorError> {
        let _guard = match &self.lock {
            Some(lock) => Some(lock.lock().unwrap_or_else(|e| e.into_inner())),
            None => None,
        };
        let out = self.inner.predict(input)?;
        if out.dims() != input.dims() {
            return Err(PredictorError::Backend(format!(
                "{} returned {} for a {} input",
                self.inner.name(),
                out.dims(),
                input.dims()
            )));
        }
        Ok(out)
    }

    fn capabilities(&self) -> PredictorCapabilities {
        PredictorCapabilities {
            concurrent_safe: true,
            ..self.inner.capabilities()
        }
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}
