//! Exemplar-based colorization of gray images by transporting chrominance
//! along a discrete image metamorphosis between the exemplar's luminance and
//! the target.
//!
//! Coordinates are 1-based `(x1, x2) = (row, column)`; fields are stored
//! row-major.

pub mod colorspace;
pub mod error;
pub mod grid;
pub mod morphing;
pub mod pipeline;
pub mod postprocess;
pub mod transfer;

pub use colorspace::{luminance_remap, rgb_to_yuv, yuv_to_rgb, ColorImage, YuvImage};
pub use error::{Error, Result};
pub use grid::{CoordinateMap, Point2, ScalarField, VectorField2};
pub use morphing::{
    compose_map, image_sequence_step, morph, morph_with_observer, path_energy, register,
    DeformationPath, ImagePath, MorphOutcome, MorphParams, SweepRecord,
};
pub use pipeline::{
    colorize_from_exemplar, colorize_from_exemplar_with_observer, path_montage, rgb_transport,
    PipelineOutput, PipelineParams, PostReport,
};
pub use postprocess::{debias, tv_chrominance, Chroma, PostParams, ProxNorm};
pub use transfer::{colorize, transfer_chrominance};
