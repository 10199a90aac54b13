use serde::{Deserialize, Serialize};

use crate::channel::{LinkRecord, PathParams};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadFeature {
    Delay,
    Aoa,
    Aod,
    Zoa,
    Zod,
}

impl SpreadFeature {
    pub const ALL: [SpreadFeature; 5] = [
        SpreadFeature::Delay,
        SpreadFeature::Aoa,
        SpreadFeature::Aod,
        SpreadFeature::Zoa,
        SpreadFeature::Zod,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpreadFeature::Delay => "delay",
            SpreadFeature::Aoa => "aoa",
            SpreadFeature::Aod => "aod",
            SpreadFeature::Zoa => "zoa",
            SpreadFeature::Zod => "zod",
        }
    }

    fn is_azimuth(self) -> bool {
        matches!(self, SpreadFeature::Aoa | SpreadFeature::Aod)
    }
}

/// Linear power gain of a pathloss in dB.
pub fn path_gain(pathloss_db: f64) -> f64 {
    10f64.powf(-pathloss_db / 10.0)
}

/// Gain-weighted mean and RMS spread of `values`.
pub fn weighted_spread(values: &[f64], gains: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyLink);
    }
    if values.len() != gains.len() {
        return Err(Error::Shape {
            expected: format!("{} gains", values.len()),
            actual: format!("{} gains", gains.len()),
        });
    }
    let total: f64 = gains.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Domain("path gains must have a positive finite sum".into()));
    }
    if values.len() == 1 {
        return Ok((values[0], 0.0));
    }
    let mean = values.iter().zip(gains).map(|(v, g)| v * g).sum::<f64>() / total;
    let var = values
        .iter()
        .zip(gains)
        .map(|(v, g)| (v - mean).powi(2) * g)
        .sum::<f64>()
        / total;
    Ok((mean, var.max(0.0).sqrt()))
}

/// Azimuths re-expressed within 180 degrees of their gain-weighted
/// circular mean, so the spread does not see the +-180 seam.
fn unwrap_azimuths(angles: &[f64], gains: &[f64]) -> Vec<f64> {
    let (s, c) = angles.iter().zip(gains).fold((0.0, 0.0), |(s, c), (a, g)| {
        let r = a.to_radians();
        (s + g * r.sin(), c + g * r.cos())
    });
    let center = if s == 0.0 && c == 0.0 {
        0.0
    } else {
        s.atan2(c).to_degrees()
    };
    angles
        .iter()
        .map(|&a| match a - center {
            d if d > 180.0 => a - 360.0,
            d if d <= -180.0 => a + 360.0,
            _ => a,
        })
        .collect()
}

/// RMS spread of one feature over a link's paths. Delays are taken as
/// excess delays; azimuths are unwrapped around their circular mean.
pub fn rms_spread(paths: &[PathParams], feature: SpreadFeature) -> Result<f64> {
    if paths.is_empty() {
        return Err(Error::EmptyLink);
    }
    let gains: Vec<f64> = paths.iter().map(|p| path_gain(p.pathloss)).collect();
    let raw: Vec<f64> = paths
        .iter()
        .map(|p| match feature {
            SpreadFeature::Delay => p.delay,
            SpreadFeature::Aoa => p.aoa,
            SpreadFeature::Aod => p.aod,
            SpreadFeature::Zoa => p.zoa,
            SpreadFeature::Zod => p.zod,
        })
        .collect();
    let values = if feature == SpreadFeature::Delay {
        let first = raw.iter().copied().fold(f64::INFINITY, f64::min);
        raw.iter().map(|d| d - first).collect()
    } else if feature.is_azimuth() {
        unwrap_azimuths(&raw, &gains)
    } else {
        raw
    };
    Ok(weighted_spread(&values, &gains)?.1)
}

/// RMS spreads of one link, seconds for delay and degrees for angles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmsSpreadReport {
    pub delay: f64,
    pub aoa: f64,
    pub aod: f64,
    pub zoa: f64,
    pub zod: f64,
}

impl RmsSpreadReport {
    /// `None` for links without paths.
    pub fn from_link(link: &LinkRecord) -> Result<Option<Self>> {
        if link.paths.is_empty() {
            return Ok(None);
        }
        let f = |feature| rms_spread(&link.paths, feature);
        Ok(Some(Self {
            delay: f(SpreadFeature::Delay)?,
            aoa: f(SpreadFeature::Aoa)?,
            aod: f(SpreadFeature::Aod)?,
            zoa: f(SpreadFeature::Zoa)?,
            zod: f(SpreadFeature::Zod)?,
        }))
    }

    pub fn get(&self, feature: SpreadFeature) -> f64 {
        match feature {
            SpreadFeature::Delay => self.delay,
            SpreadFeature::Aoa => self.aoa,
            SpreadFeature::Aod => self.aod,
            SpreadFeature::Zoa => self.zoa,
            SpreadFeature::Zod => self.zod,
        }
    }
}
