//! Invertible link <-> channel-image pipeline.
//!
//! Encoding: pad to 25 paths with virtual paths, reference pathloss and delay
//! to their LOS values, min-max scale every row into [-1, 1], then tile each
//! entry into an 8 x 2 pixel block. Decoding runs the same steps backwards,
//! decides the link state from the sign of the link-state row, restores the
//! deterministic LOS path and strips virtual paths by their pathloss.

mod matrix;
mod scaler;

pub use matrix::{
    tile, untile, ChannelImage, ChannelMatrix, Feature, Stage, IMAGE_COLS, IMAGE_PIXELS, IMAGE_ROWS, MATRIX_COLS,
    MATRIX_ROWS, TILE_COLS, TILE_ROWS,
};
pub use scaler::{FeatureScaler, Scaled};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{fspl, wrap_degrees, LinkGeometry, LinkRecord, LinkState, PathParams, MAX_PATHS, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream, StreamRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodecParams {
    /// Width of the link-state encoding intervals.
    pub epsilon: f64,
    /// Multiplier applied to excess delays (seconds).
    pub delay_scale: f64,
    /// Paths with a larger pathloss are treated as absent.
    pub outage_threshold_db: f64,
    /// Virtual-path pathloss is drawn uniformly from this interval.
    pub virtual_pathloss_db: [f64; 2],
}

impl Default for CodecParams {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            delay_scale: 1e7,
            outage_threshold_db: 180.0,
            virtual_pathloss_db: [181.0, 190.0],
        }
    }
}

impl CodecParams {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.virtual_pathloss_db;
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config("epsilon must lie in (0, 1)".into()));
        }
        if !(self.delay_scale > 0.0) {
            return Err(Error::Config("delay scale must be positive".into()));
        }
        if !(lo > self.outage_threshold_db && hi >= lo) {
            return Err(Error::Config(
                "virtual pathloss must lie above the outage threshold".into(),
            ));
        }
        Ok(())
    }
}

/// Per-feature range of raw values over the real paths of a dataset, in
/// [`Feature::PATH`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanges {
    pub min: [f64; 7],
    pub max: [f64; 7],
}

impl FeatureRanges {
    pub fn from_links(links: &[LinkRecord]) -> Result<Self> {
        let mut min = [f64::INFINITY; 7];
        let mut max = [f64::NEG_INFINITY; 7];
        for p in links.iter().flat_map(|l| &l.paths) {
            for (k, v) in p.to_array().into_iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        if min[0] > max[0] {
            return Err(Error::EmptyDataset);
        }
        Ok(Self { min, max })
    }
}

/// Draws the link-state code: (1 - eps, 1] for LOS, [-1, -1 + eps) otherwise.
pub fn link_state_code(state: LinkState, epsilon: f64, rng: &mut StreamRng) -> f64 {
    let offset = epsilon * rng.random::<f64>();
    match state {
        LinkState::Los => 1.0 - offset,
        LinkState::Nlos | LinkState::Outage => -1.0 + offset,
    }
}

/// Fills columns past the real paths with virtual ones and sets the
/// link-state row. Output is in raw units.
pub fn pad_virtual_paths(
    link: &LinkRecord,
    ranges: &FeatureRanges,
    params: &CodecParams,
    rng: &mut StreamRng,
) -> Result<ChannelMatrix> {
    if link.paths.is_empty() {
        return Err(Error::EmptyLink);
    }
    if link.paths.len() > MAX_PATHS {
        return Err(Error::TooManyPaths(link.paths.len()));
    }
    let mut m = ChannelMatrix::zeros(Stage::Raw);
    let state = link_state_code(link.link_state, params.epsilon, rng);
    m.row_mut(Feature::LinkState).fill(state);
    let [pl_lo, pl_hi] = params.virtual_pathloss_db;
    for j in 0..MATRIX_COLS {
        let column = match link.paths.get(j) {
            Some(p) => p.to_array(),
            None => {
                let mut v = [0.0; 7];
                v[0] = pl_lo + (pl_hi - pl_lo) * rng.random::<f64>();
                for k in 1..7 {
                    v[k] = ranges.min[k] + (ranges.max[k] - ranges.min[k]) * rng.random::<f64>();
                }
                v
            }
        };
        for (k, v) in column.into_iter().enumerate() {
            m.values[k][j] = v;
        }
    }
    Ok(m)
}

/// References pathloss to free space and delay to the LOS delay (scaled).
/// Angle, phase and link-state rows pass through unchanged.
pub fn normalize_link_features(
    raw: &ChannelMatrix,
    geometry: &LinkGeometry,
    params: &CodecParams,
) -> Result<ChannelMatrix> {
    if raw.stage != Stage::Raw {
        return Err(Error::Shape {
            expected: "raw matrix".into(),
            actual: format!("{:?} matrix", raw.stage),
        });
    }
    let d = geometry.distances()?;
    let free_space = fspl(d.dist3d, geometry.carrier_freq)?;
    let los_delay = d.dist3d / SPEED_OF_LIGHT;
    let mut m = raw.clone();
    m.stage = Stage::Normalized;
    for v in m.row_mut(Feature::Pathloss) {
        *v -= free_space;
    }
    for v in m.row_mut(Feature::Delay) {
        *v = (*v - los_delay) * params.delay_scale;
    }
    Ok(m)
}

/// Inverse of [`normalize_link_features`]. Excess delays are floored at
/// zero: nothing arrives before the direct path.
pub fn denormalize_link_features(
    normalized: &ChannelMatrix,
    geometry: &LinkGeometry,
    params: &CodecParams,
) -> Result<ChannelMatrix> {
    let d = geometry.distances()?;
    let free_space = fspl(d.dist3d, geometry.carrier_freq)?;
    let los_delay = d.dist3d / SPEED_OF_LIGHT;
    let mut m = normalized.clone();
    m.stage = Stage::Raw;
    for v in m.row_mut(Feature::Pathloss) {
        *v += free_space;
    }
    for v in m.row_mut(Feature::Delay) {
        *v = los_delay + (*v / params.delay_scale).max(0.0);
    }
    Ok(m)
}

/// Folds a phase into (-360, 0].
fn wrap_phase(phase: f64) -> f64 {
    let p = phase.clamp(-360.0, 0.0);
    if p <= -360.0 {
        0.0
    } else {
        p
    }
}

/// Fitted encoder/decoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codec {
    pub params: CodecParams,
    pub ranges: FeatureRanges,
    pub scaler: FeatureScaler,
}

impl Codec {
    /// Fits virtual-path ranges on the real paths, then the scaler on the
    /// padded and normalized matrices. Link `i` is padded with the
    /// `(seed, Padding, i)` substream, the same one [`Codec::encode_dataset`]
    /// uses, so every training matrix lies inside the scaler range.
    pub fn fit(links: &[LinkRecord], params: CodecParams, seed: u64) -> Result<Self> {
        params.validate()?;
        if links.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let ranges = FeatureRanges::from_links(links)?;
        let matrices = links
            .par_iter()
            .enumerate()
            .map(|(i, link)| {
                let mut rng = substream(seed, Stream::Padding, i as u64);
                let raw = pad_virtual_paths(link, &ranges, &params, &mut rng)?;
                normalize_link_features(&raw, &link.geometry(), &params)
            })
            .collect::<Result<Vec<_>>>()?;
        let scaler = FeatureScaler::fit(&matrices)?;
        Ok(Self { params, ranges, scaler })
    }

    pub fn encode_matrix(&self, link: &LinkRecord, rng: &mut StreamRng) -> Result<Scaled> {
        let raw = pad_virtual_paths(link, &self.ranges, &self.params, rng)?;
        let normalized = normalize_link_features(&raw, &link.geometry(), &self.params)?;
        Ok(self.scaler.scale(&normalized))
    }

    pub fn encode(&self, link: &LinkRecord, rng: &mut StreamRng) -> Result<ChannelImage> {
        tile(&self.encode_matrix(link, rng)?.matrix)
    }

    /// Encodes every link with its own padding substream. Returns the images
    /// and the total number of clamped entries.
    pub fn encode_dataset(&self, links: &[LinkRecord], seed: u64) -> Result<(Vec<ChannelImage>, usize)> {
        let encoded = links
            .par_iter()
            .enumerate()
            .map(|(i, link)| {
                let mut rng = substream(seed, Stream::Padding, i as u64);
                let scaled = self.encode_matrix(link, &mut rng)?;
                Ok((tile(&scaled.matrix)?, scaled.clamped))
            })
            .collect::<Result<Vec<_>>>()?;
        let clamped = encoded.iter().map(|(_, c)| c).sum();
        Ok((encoded.into_iter().map(|(img, _)| img).collect(), clamped))
    }

    pub fn decode(&self, image: &ChannelImage, geometry: &LinkGeometry) -> Result<LinkRecord> {
        if let Some(k) = image.pixels().iter().position(|p| !p.is_finite()) {
            return Err(Error::CorruptImage(format!("non-finite pixel at index {k}")));
        }
        self.decode_matrix(&untile(image), geometry)
    }

    pub fn decode_matrix(&self, scaled: &ChannelMatrix, geometry: &LinkGeometry) -> Result<LinkRecord> {
        if !scaled.is_finite() {
            return Err(Error::CorruptImage("non-finite matrix entry".into()));
        }
        let normalized = self.scaler.unscale(scaled);
        let raw = denormalize_link_features(&normalized, geometry, &self.params)?;

        let state_row = raw.row(Feature::LinkState);
        let is_los = state_row.iter().sum::<f64>() / MATRIX_COLS as f64 > 0.0;

        let mut paths: Vec<PathParams> = (0..MATRIX_COLS)
            .map(|j| {
                let v = |f: Feature| raw.values[f.row()][j];
                PathParams {
                    pathloss: v(Feature::Pathloss),
                    delay: v(Feature::Delay),
                    aod: wrap_degrees(v(Feature::Aod)),
                    zod: v(Feature::Zod).clamp(0.0, 180.0),
                    aoa: wrap_degrees(v(Feature::Aoa)),
                    zoa: v(Feature::Zoa).clamp(0.0, 180.0),
                    phase: wrap_phase(v(Feature::Phase)),
                }
            })
            .collect();
        if is_los {
            paths[0] = geometry.los_params()?;
        }
        paths.retain(|p| p.pathloss <= self.params.outage_threshold_db);
        paths.sort_by(|a, b| a.delay.total_cmp(&b.delay));

        let link_state = if paths.is_empty() {
            LinkState::Outage
        } else if is_los {
            LinkState::Los
        } else {
            LinkState::Nlos
        };
        Ok(LinkRecord {
            tx: geometry.tx,
            rx: geometry.rx,
            carrier_freq: geometry.carrier_freq,
            link_state,
            paths,
        })
    }
}
