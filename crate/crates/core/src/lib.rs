//! Layered graphic-design documents.
//!
//! - [`model`]: the layer tree, validation and flattening
//! - [`tokens`]: the standardized token format (serialize, parse, streaming lexer)
//! - [`vector`]: k-means palettes and boundary tracing into vector paths
//! - [`render`]: deterministic rasterization of documents
//! - [`metrics`]: alignment, overlap, background complexity and character P/R/F
//! - [`augment`]: length-preserving text augmentation
//! - [`buckets`]: resolution buckets for generated images
//! - [`session`]: the pause-and-resume generation protocol with pluggable providers

pub mod augment;
pub mod buckets;
pub mod config;
pub mod metrics;
pub mod model;
pub mod num;
pub mod raster;
pub mod render;
pub mod session;
pub mod tokens;
pub mod vector;

pub use model::{BBox, Color, DesignDocument, Layer, LayerKind};
pub use raster::{AssetStore, Raster};
