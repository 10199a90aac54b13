use serde::{Deserialize, Serialize};

use super::bins::Bins;
use super::link_state::at_height;
use crate::channel::{LinkRecord, LinkState};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZenithKind {
    Zod,
    Zoa,
}

impl ZenithKind {
    pub fn name(self) -> &'static str {
        match self {
            ZenithKind::Zod => "zod",
            ZenithKind::Zoa => "zoa",
        }
    }
}

/// Distance x angle histogram, each distance column normalized to sum to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedPdf2D {
    pub distance: Bins,
    pub angle: Bins,
    /// `density[d][a]`; an empty column is all zeros.
    pub density: Vec<Vec<f64>>,
    /// Paths per distance column before normalization.
    pub counts: Vec<usize>,
}

impl BinnedPdf2D {
    /// Standard deviation of the angle under column `d`, using bin centers.
    pub fn column_std(&self, d: usize) -> Option<f64> {
        if self.counts[d] == 0 {
            return None;
        }
        let col = &self.density[d];
        let mean: f64 = col.iter().enumerate().map(|(a, p)| p * self.angle.center(a)).sum();
        let var: f64 = col
            .iter()
            .enumerate()
            .map(|(a, p)| p * (self.angle.center(a) - mean).powi(2))
            .sum();
        Some(var.max(0.0).sqrt())
    }
}

/// Result of [`relative_zenith_pdf`].
#[derive(Clone, Debug, PartialEq)]
pub struct ZenithPdf {
    pub pdf: BinnedPdf2D,
    /// Links whose LOS reference could not be computed.
    pub skipped_links: usize,
    /// Paths whose distance or relative angle fell outside the bins.
    pub outside: usize,
}

/// Default angle bins: 2 degrees wide, one centered on every even angle in
/// [-90, 90].
pub fn default_angle_bins() -> Bins {
    Bins::uniform(-91.0, 91.0, 2.0).expect("valid constant bins")
}

/// Histogram of path zenith angles relative to the LOS zenith angle of the
/// same geometry, over non-outage links at `height`.
pub fn relative_zenith_pdf(
    links: &[LinkRecord],
    height: f64,
    kind: ZenithKind,
    distance: &Bins,
    angle: &Bins,
) -> Result<ZenithPdf> {
    let mut counts2d = vec![vec![0usize; angle.len()]; distance.len()];
    let (mut skipped_links, mut outside) = (0, 0);
    for link in links.iter().filter(|l| at_height(l, height)) {
        if link.link_state == LinkState::Outage {
            continue;
        }
        let g = link.geometry();
        let (Ok(d), Ok(los)) = (g.distances(), g.los_params()) else {
            skipped_links += 1;
            continue;
        };
        let Some(col) = distance.find(d.dist2d) else {
            outside += link.paths.len();
            continue;
        };
        for p in &link.paths {
            let rel = match kind {
                ZenithKind::Zod => p.zod - los.zod,
                ZenithKind::Zoa => p.zoa - los.zoa,
            };
            match angle.find(rel) {
                Some(a) => counts2d[col][a] += 1,
                None => outside += 1,
            }
        }
    }
    let counts: Vec<usize> = counts2d.iter().map(|c| c.iter().sum()).collect();
    let density = counts2d
        .iter()
        .zip(&counts)
        .map(|(c, &total)| {
            c.iter()
                .map(|&x| if total > 0 { x as f64 / total as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(ZenithPdf {
        pdf: BinnedPdf2D {
            distance: distance.clone(),
            angle: angle.clone(),
            density,
            counts,
        },
        skipped_links,
        outside,
    })
}
