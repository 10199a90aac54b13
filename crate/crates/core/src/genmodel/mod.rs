//! Conditional generative models over channel images.
//!
//! A backend learns the distribution of images given `(dist2d, height)` and
//! samples new ones. Two backends share the [`GenerativeBackend`] contract:
//! a conditional WGAN-GP trained with hand-written backpropagation and a
//! nearest-neighbour resampler used as a baseline.

pub mod adam;
pub mod mlp;
pub mod networks;
pub mod resampler;
pub mod wgan;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use mlp::{Activation, Dense, Mlp, MlpGrads};
pub use networks::{
    critic_loss, generator_loss, interpolates, Architecture, ConditionNormalizer, Critic, CriticLoss, Generator,
    NetGrads,
};
pub use resampler::{EmpiricalResampler, ResamplerConfig};
pub use wgan::{train_wgan_gp, LogEntry, TrainingLog, WganGp, WganGpHyperparams};

use ndarray::{Array2, Axis};

use crate::channel::ConditionVector;
use crate::codec::ChannelImage;
use crate::error::{Error, Result};

/// Images (one flattened image per row) with their conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    pub images: Array2<f64>,
    pub conditions: Vec<ConditionVector>,
}

impl TrainingSet {
    pub fn new(images: Array2<f64>, conditions: Vec<ConditionVector>) -> Result<Self> {
        if images.nrows() != conditions.len() {
            return Err(Error::Shape {
                expected: format!("{} images", conditions.len()),
                actual: format!("{} images", images.nrows()),
            });
        }
        Ok(Self {
            images: images.as_standard_layout().into_owned(),
            conditions,
        })
    }

    pub fn from_images(images: &[ChannelImage], conditions: Vec<ConditionVector>) -> Result<Self> {
        let width = images.first().map_or(0, |i| i.pixels().len());
        let flat: Vec<f64> = images.iter().flat_map(|i| i.pixels().iter().copied()).collect();
        let array = Array2::from_shape_vec((images.len(), width), flat).expect("images share one shape");
        Self::new(array, conditions)
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn pixels(&self) -> usize {
        self.images.ncols()
    }

    pub fn image(&self, i: usize) -> Result<ChannelImage> {
        ChannelImage::from_pixels(self.images.index_axis(Axis(0), i).to_vec())
    }
}

/// Conditional image sampler.
pub trait GenerativeBackend {
    fn name(&self) -> &'static str;

    /// `n` images for `cond`; image `i` depends only on `(seed, i, cond)`.
    fn sample(&self, cond: &ConditionVector, n: usize, seed: u64) -> Result<Vec<ChannelImage>>;
}

impl GenerativeBackend for WganGp {
    fn name(&self) -> &'static str {
        "wgan-gp"
    }

    fn sample(&self, cond: &ConditionVector, n: usize, seed: u64) -> Result<Vec<ChannelImage>> {
        self.validate()?;
        self.sample_pixels(cond, n, seed)
            .rows()
            .into_iter()
            .map(|r| ChannelImage::from_pixels(r.to_vec()))
            .collect()
    }
}

impl GenerativeBackend for EmpiricalResampler {
    fn name(&self) -> &'static str {
        "resampler"
    }

    fn sample(&self, cond: &ConditionVector, n: usize, seed: u64) -> Result<Vec<ChannelImage>> {
        self.sample_indices(cond, n, seed)
            .into_iter()
            .map(|i| self.data.image(i))
            .collect()
    }
}
