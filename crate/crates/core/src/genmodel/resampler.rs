use rand::Rng;
use serde::{Deserialize, Serialize};

use super::networks::ConditionNormalizer;
use super::TrainingSet;
use crate::channel::ConditionVector;
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResamplerConfig {
    pub k: usize,
}

impl Default for ResamplerConfig {
    fn default() -> Self {
        Self { k: 50 }
    }
}

/// Nearest-neighbour baseline: returns stored images whose conditions are
/// closest to the query in normalized condition space, drawn with
/// replacement from the `k` nearest.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalResampler {
    pub config: ResamplerConfig,
    pub normalizer: ConditionNormalizer,
    pub data: TrainingSet,
}

impl EmpiricalResampler {
    pub fn fit(data: TrainingSet, config: ResamplerConfig) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if config.k == 0 {
            return Err(Error::Config("resampler k must be positive".into()));
        }
        let normalizer = ConditionNormalizer::fit(&data.conditions)?;
        Ok(Self {
            config,
            normalizer,
            data,
        })
    }

    /// Indices of the `k` nearest stored conditions, ties broken by index.
    pub fn neighbours(&self, cond: &ConditionVector) -> Vec<usize> {
        let q = self.normalizer.normalize(cond);
        let mut scored: Vec<(f64, usize)> = self
            .data
            .conditions
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let p = self.normalizer.normalize(c);
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2), i)
            })
            .collect();
        let k = self.config.k.min(scored.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        scored.into_iter().map(|(_, i)| i).collect()
    }

    /// Stored-image indices for `n` draws; draw `i` uses the
    /// `(seed, Sampling, i)` substream.
    pub fn sample_indices(&self, cond: &ConditionVector, n: usize, seed: u64) -> Vec<usize> {
        let pool = self.neighbours(cond);
        (0..n)
            .map(|i| {
                let mut rng = substream(seed, Stream::Sampling, i as u64);
                pool[rng.random_range(0..pool.len())]
            })
            .collect()
    }
}
