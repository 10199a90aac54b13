//! Geometry-based stochastic channel modeling with channel images.
//!
//! - [`channel`]: multipath records and deterministic LOS physics.
//! - [`surrogate`]: parametric generator of urban link datasets.
//! - [`codec`]: the invertible link <-> 64 x 50 image pipeline.
//! - [`genmodel`]: conditional generative backends (WGAN-GP, resampler).
//! - [`stats`]: CDFs, link-state probabilities, zenith PDFs, RMS spreads.
//! - [`formats`]: on-disk formats shared with the command-line tool.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod codec;
pub mod error;
pub mod formats;
pub mod genmodel;
pub mod rng;
pub mod stats;
pub mod surrogate;

pub use channel::{
    fspl, geometry, los_params, ConditionVector, LinkGeometry, LinkRecord, LinkState, PathParams, Point3, MAX_PATHS,
    SPEED_OF_LIGHT,
};
pub use codec::{ChannelImage, ChannelMatrix, Codec, CodecParams, FeatureScaler};
pub use error::{Error, Result};
pub use genmodel::{EmpiricalResampler, GenerativeBackend, TrainingSet, WganGp, WganGpHyperparams};
pub use surrogate::{generate_dataset, SurrogateConfig};
