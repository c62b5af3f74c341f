//! Interactive segmentation engine.
//!
//! A [`pipeline::Session`] turns a stream of positive and negative clicks on
//! one image into a binary mask. Early clicks run a coarse pass over a crop of
//! the image; later clicks additionally re-predict a Local Patch around the
//! correction and merge only the clicked change back. Prediction itself is
//! behind the [`predictor::Predictor`] trait, with an in-process reference
//! model and an external sidecar adapter.

pub mod clicks;
pub mod eval;
pub mod losses;
pub mod pipeline;
pub mod predictor;
pub mod raster;
pub mod simulate;
