//! Per-pixel hyperspectral image classification.
//!
//! Each labeled pixel is classified from its spectral signature alone by a
//! fully connected network with batch normalization. The crate covers the
//! whole experiment: raster ingestion, stratified splitting, class balancing
//! by duplication, training, OA/AA evaluation, divergence-based band
//! selection and classification-map rendering.

pub mod band_select;
pub mod cli;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod nn;
pub mod pipeline;
pub mod registry;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};
