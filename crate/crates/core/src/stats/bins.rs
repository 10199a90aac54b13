use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contiguous half-open bins `[e_k, e_{k+1})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bins {
    edges: Vec<f64>,
}

impl Bins {
    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Config("bins need at least two edges".into()));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("bin edges must be finite and increasing".into()));
        }
        Ok(Self { edges })
    }

    /// Bins of `width` starting at `start` until `end` is covered.
    pub fn uniform(start: f64, end: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && end > start) {
            return Err(Error::Config(format!("bad bin range [{start}, {end}) / {width}")));
        }
        let count = ((end - start) / width).ceil().max(1.0) as usize;
        Self::from_edges((0..=count).map(|k| start + k as f64 * width).collect())
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bounds(&self, k: usize) -> (f64, f64) {
        (self.edges[k], self.edges[k + 1])
    }

    pub fn center(&self, k: usize) -> f64 {
        0.5 * (self.edges[k] + self.edges[k + 1])
    }

    pub fn find(&self, x: f64) -> Option<usize> {
        if !(x >= self.edges[0] && x < self.edges[self.edges.len() - 1]) {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= x) - 1)
    }
}
