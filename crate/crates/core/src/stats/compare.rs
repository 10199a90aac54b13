//! Model-versus-data scoring over decoded link sets.

use serde::{Deserialize, Serialize};

use super::bins::Bins;
use super::ecdf::{ks_statistic, uniformity_check, UniformTarget};
use super::link_state::{at_height, link_state_prob};
use super::spread::{RmsSpreadReport, SpreadFeature};
use crate::channel::LinkRecord;
use crate::error::Result;

/// Scalar features pooled over links (and over paths, for path features).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkFeature {
    Pathloss,
    Delay,
    Aod,
    Zod,
    Aoa,
    Zoa,
    Phase,
    NumPaths,
    DelaySpread,
    AoaSpread,
    AodSpread,
    ZoaSpread,
    ZodSpread,
}

impl LinkFeature {
    pub const ALL: [LinkFeature; 13] = [
        LinkFeature::Pathloss,
        LinkFeature::Delay,
        LinkFeature::Aod,
        LinkFeature::Zod,
        LinkFeature::Aoa,
        LinkFeature::Zoa,
        LinkFeature::Phase,
        LinkFeature::NumPaths,
        LinkFeature::DelaySpread,
        LinkFeature::AoaSpread,
        LinkFeature::AodSpread,
        LinkFeature::ZoaSpread,
        LinkFeature::ZodSpread,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LinkFeature::Pathloss => "pathloss",
            LinkFeature::Delay => "delay",
            LinkFeature::Aod => "aod",
            LinkFeature::Zod => "zod",
            LinkFeature::Aoa => "aoa",
            LinkFeature::Zoa => "zoa",
            LinkFeature::Phase => "phase",
            LinkFeature::NumPaths => "num_paths",
            LinkFeature::DelaySpread => "delay_spread",
            LinkFeature::AoaSpread => "aoa_spread",
            LinkFeature::AodSpread => "aod_spread",
            LinkFeature::ZoaSpread => "zoa_spread",
            LinkFeature::ZodSpread => "zod_spread",
        }
    }

    fn spread(self) -> Option<SpreadFeature> {
        match self {
            LinkFeature::DelaySpread => Some(SpreadFeature::Delay),
            LinkFeature::AoaSpread => Some(SpreadFeature::Aoa),
            LinkFeature::AodSpread => Some(SpreadFeature::Aod),
            LinkFeature::ZoaSpread => Some(SpreadFeature::Zoa),
            LinkFeature::ZodSpread => Some(SpreadFeature::Zod),
            _ => None,
        }
    }
}

/// Values of `feature` over links at `height`. Outage links contribute
/// only to the path count.
pub fn feature_values(links: &[LinkRecord], height: f64, feature: LinkFeature) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for link in links.iter().filter(|l| at_height(l, height)) {
        if let Some(s) = feature.spread() {
            if let Some(r) = RmsSpreadReport::from_link(link)? {
                out.push(r.get(s));
            }
            continue;
        }
        if feature == LinkFeature::NumPaths {
            out.push(link.paths.len() as f64);
            continue;
        }
        out.extend(link.paths.iter().map(|p| match feature {
            LinkFeature::Pathloss => p.pathloss,
            LinkFeature::Delay => p.delay,
            LinkFeature::Aod => p.aod,
            LinkFeature::Zod => p.zod,
            LinkFeature::Aoa => p.aoa,
            LinkFeature::Zoa => p.zoa,
            _ => p.phase,
        }));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureKs {
    pub height: f64,
    pub feature: LinkFeature,
    pub n_model: usize,
    pub n_data: usize,
    /// `None` when either side has no values.
    pub ks: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkStateComparison {
    pub height: f64,
    pub lower: f64,
    pub upper: f64,
    pub n_model: usize,
    pub n_data: usize,
    pub p_los_model: Option<f64>,
    pub p_los_data: Option<f64>,
    pub p_outage_model: Option<f64>,
    pub p_outage_data: Option<f64>,
}

impl LinkStateComparison {
    pub fn los_gap(&self) -> Option<f64> {
        Some((self.p_los_model? - self.p_los_data?).abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityRow {
    pub height: f64,
    pub feature: LinkFeature,
    pub n: usize,
    pub ks: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub features: Vec<FeatureKs>,
    pub link_states: Vec<LinkStateComparison>,
    pub uniformity: Vec<UniformityRow>,
}

pub fn compare_features(model: &[LinkRecord], data: &[LinkRecord], heights: &[f64]) -> Result<Vec<FeatureKs>> {
    let mut out = Vec::new();
    for &height in heights {
        for feature in LinkFeature::ALL {
            let a = feature_values(model, height, feature)?;
            let b = feature_values(data, height, feature)?;
            let ks = if a.is_empty() || b.is_empty() {
                None
            } else {
                Some(ks_statistic(&a, &b)?)
            };
            out.push(FeatureKs {
                height,
                feature,
                n_model: a.len(),
                n_data: b.len(),
                ks,
            });
        }
    }
    Ok(out)
}

pub fn compare_link_states(
    model: &[LinkRecord],
    data: &[LinkRecord],
    heights: &[f64],
    bins: &Bins,
) -> Vec<LinkStateComparison> {
    let mut out = Vec::new();
    for &height in heights {
        let m = link_state_prob(model, height, bins);
        let d = link_state_prob(data, height, bins);
        for (m, d) in m.iter().zip(&d) {
            out.push(LinkStateComparison {
                height,
                lower: m.lower,
                upper: m.upper,
                n_model: m.count,
                n_data: d.count,
                p_los_model: m.p_los,
                p_los_data: d.p_los,
                p_outage_model: m.p_outage,
                p_outage_data: d.p_outage,
            });
        }
    }
    out
}

/// KS distance of azimuths and phases against their uniform references.
pub fn uniformity_report(links: &[LinkRecord], heights: &[f64]) -> Result<Vec<UniformityRow>> {
    let mut out = Vec::new();
    for &height in heights {
        for (feature, target) in [
            (LinkFeature::Aoa, UniformTarget::Azimuth),
            (LinkFeature::Aod, UniformTarget::Azimuth),
            (LinkFeature::Phase, UniformTarget::Phase),
        ] {
            let v = feature_values(links, height, feature)?;
            let ks = if v.is_empty() {
                None
            } else {
                Some(uniformity_check(&v, target)?)
            };
            out.push(UniformityRow {
                height,
                feature,
                n: v.len(),
                ks,
            });
        }
    }
    Ok(out)
}

pub fn evaluate(model: &[LinkRecord], data: &[LinkRecord], heights: &[f64], bins: &Bins) -> Result<EvaluationReport> {
    Ok(EvaluationReport {
        features: compare_features(model, data, heights)?,
        link_states: compare_link_states(model, data, heights, bins),
        uniformity: uniformity_report(model, heights)?,
    })
}
