use serde::{Deserialize, Serialize};

use super::bins::Bins;
use crate::channel::{LinkRecord, LinkState};

/// Receiver heights closer than this are treated as equal.
pub const HEIGHT_TOLERANCE_M: f64 = 1e-6;

pub fn at_height(link: &LinkRecord, height: f64) -> bool {
    (link.height() - height).abs() <= HEIGHT_TOLERANCE_M
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkStateBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// `None` for empty bins.
    pub p_los: Option<f64>,
    pub p_outage: Option<f64>,
}

/// LOS and outage fractions per 2D-distance bin among links at `height`.
/// Links outside every bin are ignored.
pub fn link_state_prob(links: &[LinkRecord], height: f64, bins: &Bins) -> Vec<LinkStateBin> {
    let mut los = vec![0usize; bins.len()];
    let mut outage = vec![0usize; bins.len()];
    let mut count = vec![0usize; bins.len()];
    for link in links.iter().filter(|l| at_height(l, height)) {
        let Ok(d) = link.geometry().distances() else {
            continue;
        };
        if let Some(k) = bins.find(d.dist2d) {
            count[k] += 1;
            match link.link_state {
                LinkState::Los => los[k] += 1,
                LinkState::Outage => outage[k] += 1,
                LinkState::Nlos => {}
            }
        }
    }
    (0..bins.len())
        .map(|k| {
            let (lower, upper) = bins.bounds(k);
            let frac = |x: usize| (count[k] > 0).then(|| x as f64 / count[k] as f64);
            LinkStateBin {
                lower,
                upper,
                count: count[k],
                p_los: frac(los[k]),
                p_outage: frac(outage[k]),
            }
        })
        .collect()
}
