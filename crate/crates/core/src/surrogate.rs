//! Parametric stand-in for a ray-traced urban dataset.
//!
//! None of the distributions below are fitted to measurements. They are
//! chosen to exhibit the qualitative trends of dense-urban ray tracing:
//! visibility grows with receiver height, scattering (path count and
//! angular spread) shrinks with distance, azimuths and phases are uniform.
//!
//! Each transmitter serves receiver sites spread uniformly over a disk
//! around it, so link azimuths are uniform. Every site is replicated at all
//! configured heights, and the LOS draw of a (transmitter, site) pair is
//! shared by all heights. Since the LOS probability grows with height, a site visible at
//! one height stays visible at every greater height.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    fspl, geometry, los_params, wrap_degrees, LinkRecord, LinkState, PathParams, Point3, MAX_PATHS, SPEED_OF_LIGHT,
};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream, StreamRng};

/// `P_LOS(d, h) = min(1, exp(-d / (base + per_height * h)))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LosModel {
    pub base_m: f64,
    pub per_height: f64,
    /// Overrides the distance/height model with a constant probability.
    pub forced_probability: Option<f64>,
}

impl Default for LosModel {
    fn default() -> Self {
        Self {
            base_m: 50.0,
            per_height: 3.0,
            forced_probability: None,
        }
    }
}

impl LosModel {
    pub fn probability(&self, dist2d: f64, height: f64) -> f64 {
        match self.forced_probability {
            Some(p) => p,
            None => (-dist2d / (self.base_m + self.per_height * height)).exp().min(1.0),
        }
    }
}

/// Links carry `1 + Poisson(peak * exp(-d / decay_m))` paths, clipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathCountModel {
    pub peak: f64,
    pub decay_m: f64,
}

impl Default for PathCountModel {
    fn default() -> Self {
        Self {
            peak: 12.0,
            decay_m: 300.0,
        }
    }
}

impl PathCountModel {
    pub fn mean_extra_paths(&self, dist2d: f64) -> f64 {
        self.peak * (-dist2d / self.decay_m).exp()
    }
}

/// Per-path statistics of scattered components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpreadModel {
    pub excess_delay_mean_s: f64,
    pub excess_pathloss_sigma_db: f64,
    pub pathloss_per_ns_db: f64,
    /// Laplacian scale of azimuth offsets at zero distance.
    pub azimuth_scale_deg: f64,
    /// Laplacian scale of zenith offsets at zero distance.
    pub zenith_scale_deg: f64,
    /// Angular scales decay as `exp(-d / shrink_m)`.
    pub shrink_m: f64,
}

impl Default for SpreadModel {
    fn default() -> Self {
        Self {
            excess_delay_mean_s: 200e-9,
            excess_pathloss_sigma_db: 8.0,
            pathloss_per_ns_db: 0.02,
            azimuth_scale_deg: 20.0,
            zenith_scale_deg: 8.0,
            shrink_m: 400.0,
        }
    }
}

impl SpreadModel {
    pub fn shrink(&self, dist2d: f64) -> f64 {
        (-dist2d / self.shrink_m).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub num_tx: usize,
    /// Receiver sites per transmitter; each is replicated at every height.
    pub num_rx_per_height: usize,
    pub heights: Vec<f64>,
    /// Width and depth of the area transmitters are placed in, meters.
    pub area: [f64; 2],
    /// Receivers lie within this 2D distance of their transmitter.
    pub cell_radius_m: f64,
    pub tx_height_range: [f64; 2],
    pub carrier_freq: f64,
    pub seed: u64,
    pub max_paths: usize,
    pub outage_threshold_db: f64,
    pub los: LosModel,
    pub path_count: PathCountModel,
    pub spread: SpreadModel,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            num_tx: 25,
            num_rx_per_height: 40,
            heights: vec![1.6, 30.0, 60.0, 90.0, 120.0],
            area: [1000.0, 1000.0],
            cell_radius_m: 800.0,
            tx_height_range: [20.0, 60.0],
            carrier_freq: 12e9,
            seed: 0,
            max_paths: MAX_PATHS,
            outage_threshold_db: 180.0,
            los: LosModel::default(),
            path_count: PathCountModel::default(),
            spread: SpreadModel::default(),
        }
    }
}

/// Closest 2D distance between a transmitter and its receivers.
const MIN_DIST2D_M: f64 = 1.0;

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.heights.is_empty() || self.heights.iter().any(|h| !(*h > 0.0)) {
            return fail("heights must be non-empty and positive");
        }
        if self.area.iter().any(|a| !(*a > 0.0)) {
            return fail("area dimensions must be positive");
        }
        if !(self.cell_radius_m > MIN_DIST2D_M) {
            return fail("cell radius must exceed 1 m");
        }
        let [lo, hi] = self.tx_height_range;
        if !(lo > 0.0 && hi >= lo) {
            return fail("transmitter height range must be positive and ordered");
        }
        if !(self.carrier_freq > 0.0) {
            return fail("carrier frequency must be positive");
        }
        if self.max_paths == 0 || self.max_paths > MAX_PATHS {
            return fail("max_paths must lie in 1..=25");
        }
        if let Some(p) = self.los.forced_probability {
            if !(0.0..=1.0).contains(&p) {
                return fail("forced LOS probability must lie in [0, 1]");
            }
        }
        let s = &self.spread;
        if !(s.excess_delay_mean_s > 0.0 && s.shrink_m > 0.0 && self.path_count.decay_m > 0.0)
            || s.excess_pathloss_sigma_db < 0.0
            || s.azimuth_scale_deg < 0.0
            || s.zenith_scale_deg < 0.0
            || self.path_count.peak < 0.0
        {
            return fail("spread and path-count parameters must be positive");
        }
        Ok(())
    }

    pub fn num_links_requested(&self) -> usize {
        self.num_tx * self.num_rx_per_height * self.heights.len()
    }
}

fn uniform_in(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Zero-mean Laplacian draw with the given scale.
fn laplace(rng: &mut StreamRng, scale: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    let magnitude = Exp::new(1.0 / scale).expect("positive rate").sample(rng);
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

/// Folds a zenith angle back into [0, 180].
fn reflect_zenith(mut z: f64) -> f64 {
    loop {
        if z < 0.0 {
            z = -z;
        } else if z > 180.0 {
            z = 360.0 - z;
        } else {
            return z;
        }
    }
}

struct Site {
    x: f64,
    y: f64,
}

/// Generates the full dataset. Output is a pure function of `config`.
pub fn generate_dataset(config: &SurrogateConfig) -> Result<Vec<LinkRecord>> {
    config.validate()?;
    if config.num_links_requested() == 0 {
        return Err(Error::EmptyDataset);
    }
    let [width, depth] = config.area;
    let txs: Vec<Point3> = (0..config.num_tx)
        .map(|i| {
            let mut rng = substream(config.seed, Stream::TxSites, i as u64);
            let x = uniform_in(&mut rng, 0.0, width);
            let y = uniform_in(&mut rng, 0.0, depth);
            let z = uniform_in(&mut rng, config.tx_height_range[0], config.tx_height_range[1]);
            Point3::new(x, y, z)
        })
        .collect();
    let per_tx = config.num_rx_per_height;
    let sites: Vec<Site> = (0..config.num_tx * per_tx)
        .map(|pair| {
            let mut rng = substream(config.seed, Stream::RxSites, pair as u64);
            let tx = txs[pair / per_tx];
            // Uniform in distance, so every distance bin is equally populated.
            let r = uniform_in(&mut rng, MIN_DIST2D_M, config.cell_radius_m);
            let theta = uniform_in(&mut rng, -std::f64::consts::PI, std::f64::consts::PI);
            Site {
                x: tx.x + r * theta.cos(),
                y: tx.y + r * theta.sin(),
            }
        })
        .collect();

    let num_heights = config.heights.len();
    let links: Vec<LinkRecord> = (0..config.num_links_requested())
        .into_par_iter()
        .map(|index| {
            let pair = index / num_heights;
            let tx = txs[pair / per_tx];
            let site = &sites[pair];
            let rx = Point3::new(site.x, site.y, config.heights[index % num_heights]);
            generate_link(config, tx, rx, pair as u64, index as u64)
        })
        .collect::<Result<_>>()?;
    if links.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(links)
}

fn generate_link(config: &SurrogateConfig, tx: Point3, rx: Point3, pair: u64, index: u64) -> Result<LinkRecord> {
    let dist = geometry(tx, rx)?;
    let visibility: f64 = substream(config.seed, Stream::Visibility, pair).random();
    let is_los = visibility < config.los.probability(dist.dist2d, rx.z);

    let mut rng = substream(config.seed, Stream::Links, index);
    let lambda = config.path_count.mean_extra_paths(dist.dist2d);
    let extra = if lambda > 0.0 {
        Poisson::new(lambda).expect("positive rate").sample(&mut rng) as usize
    } else {
        0
    };
    let num_paths = (1 + extra).min(config.max_paths);

    let los = los_params(tx, rx, config.carrier_freq)?;
    let free_space = fspl(dist.dist3d, config.carrier_freq)?;
    let spread = &config.spread;
    let shrink = spread.shrink(dist.dist2d);
    let excess_delay = Exp::new(1.0 / spread.excess_delay_mean_s).expect("positive rate");
    let excess_loss = Normal::new(0.0, spread.excess_pathloss_sigma_db).expect("finite sigma");

    let mut paths = Vec::with_capacity(num_paths);
    if is_los {
        paths.push(los);
    }
    while paths.len() < num_paths {
        let tau = loop {
            let t = excess_delay.sample(&mut rng);
            if t > 0.0 {
                break t;
            }
        };
        let tau_ns = tau * 1e9;
        let pathloss = free_space + excess_loss.sample(&mut rng).abs() + spread.pathloss_per_ns_db * tau_ns;
        let az = spread.azimuth_scale_deg * shrink;
        let zen = spread.zenith_scale_deg * shrink;
        let aod = wrap_degrees(los.aod + laplace(&mut rng, az));
        let aoa = wrap_degrees(los.aoa + laplace(&mut rng, az));
        let zod = reflect_zenith(los.zod + laplace(&mut rng, zen));
        let zoa = reflect_zenith(los.zoa + laplace(&mut rng, zen));
        let phase = -360.0 * rng.random::<f64>() + 0.0;
        paths.push(PathParams {
            pathloss,
            delay: dist.dist3d / SPEED_OF_LIGHT + tau,
            aod,
            zod,
            aoa,
            zoa,
            phase,
        });
    }
    paths.sort_by(|a, b| a.delay.total_cmp(&b.delay));

    let threshold = config.outage_threshold_db;
    let link_state = if paths.iter().all(|p| p.pathloss > threshold) {
        LinkState::Outage
    } else {
        // Components under the detection threshold are not reported.
        paths.retain(|p| p.pathloss <= threshold);
        if is_los {
            LinkState::Los
        } else {
            LinkState::Nlos
        }
    };

    Ok(LinkRecord {
        tx,
        rx,
        carrier_freq: config.carrier_freq,
        link_state,
        paths,
    })
}
