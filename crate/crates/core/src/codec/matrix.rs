use serde::{Deserialize, Serialize};

use crate::channel::MAX_PATHS;
use crate::error::{Error, Result};

pub const MATRIX_ROWS: usize = 8;
pub const MATRIX_COLS: usize = MAX_PATHS;

/// Each matrix entry becomes a block of this many image rows...
pub const TILE_ROWS: usize = 8;
/// ...and this many image columns.
pub const TILE_COLS: usize = 2;

pub const IMAGE_ROWS: usize = MATRIX_ROWS * TILE_ROWS;
pub const IMAGE_COLS: usize = MATRIX_COLS * TILE_COLS;
pub const IMAGE_PIXELS: usize = IMAGE_ROWS * IMAGE_COLS;

/// Channel-matrix rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Pathloss,
    Delay,
    Aod,
    Zod,
    Aoa,
    Zoa,
    Phase,
    LinkState,
}

impl Feature {
    pub const ALL: [Feature; MATRIX_ROWS] = [
        Feature::Pathloss,
        Feature::Delay,
        Feature::Aod,
        Feature::Zod,
        Feature::Aoa,
        Feature::Zoa,
        Feature::Phase,
        Feature::LinkState,
    ];

    /// The seven per-path features.
    pub const PATH: [Feature; 7] = [
        Feature::Pathloss,
        Feature::Delay,
        Feature::Aod,
        Feature::Zod,
        Feature::Aoa,
        Feature::Zoa,
        Feature::Phase,
    ];

    pub fn row(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::Pathloss => "pathloss",
            Feature::Delay => "delay",
            Feature::Aod => "aod",
            Feature::Zod => "zod",
            Feature::Aoa => "aoa",
            Feature::Zoa => "zoa",
            Feature::Phase => "phase",
            Feature::LinkState => "link_state",
        }
    }
}

/// Which processing stage a matrix is in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Physical units, virtual paths padded.
    Raw,
    /// Pathloss and delay referenced to the LOS values.
    Normalized,
    /// Every row min-max scaled into [-1, 1].
    Scaled,
}

/// The padded 8 x 25 parameter matrix of one link.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrix {
    pub values: [[f64; MATRIX_COLS]; MATRIX_ROWS],
    pub stage: Stage,
}

impl ChannelMatrix {
    pub fn zeros(stage: Stage) -> Self {
        Self {
            values: [[0.0; MATRIX_COLS]; MATRIX_ROWS],
            stage,
        }
    }

    pub fn row(&self, feature: Feature) -> &[f64; MATRIX_COLS] {
        &self.values[feature.row()]
    }

    pub fn row_mut(&mut self, feature: Feature) -> &mut [f64; MATRIX_COLS] {
        &mut self.values[feature.row()]
    }

    pub fn is_scaled(&self) -> bool {
        self.stage == Stage::Scaled
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|v| v.is_finite())
    }
}

/// A 64 x 50 channel image, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelImage {
    pixels: Vec<f64>,
}

impl ChannelImage {
    pub fn from_pixels(pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != IMAGE_PIXELS {
            return Err(Error::Shape {
                expected: format!("{IMAGE_ROWS}x{IMAGE_COLS} image"),
                actual: format!("{} pixels", pixels.len()),
            });
        }
        Ok(Self { pixels })
    }

    pub fn filled(value: f64) -> Self {
        Self {
            pixels: vec![value; IMAGE_PIXELS],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * IMAGE_COLS + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.pixels[row * IMAGE_COLS + col] = value;
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }
}

/// Replicates every entry into an 8 x 2 block.
pub fn tile(matrix: &ChannelMatrix) -> Result<ChannelImage> {
    if !matrix.is_scaled() {
        return Err(Error::Shape {
            expected: "scaled matrix".into(),
            actual: format!("{:?} matrix", matrix.stage),
        });
    }
    let mut pixels = Vec::with_capacity(IMAGE_PIXELS);
    for r in 0..IMAGE_ROWS {
        let row = &matrix.values[r / TILE_ROWS];
        for c in 0..IMAGE_COLS {
            pixels.push(row[c / TILE_COLS]);
        }
    }
    Ok(ChannelImage { pixels })
}

/// Block mean over every 8 x 2 block.
///
/// The 16 block values are summed as a balanced binary tree and divided by
/// 16, so a constant block returns its value bit-exactly.
pub fn untile(image: &ChannelImage) -> ChannelMatrix {
    let mut out = ChannelMatrix::zeros(Stage::Scaled);
    for i in 0..MATRIX_ROWS {
        for j in 0..MATRIX_COLS {
            let mut sums = [0.0f64; TILE_ROWS];
            for (k, s) in sums.iter_mut().enumerate() {
                let r = i * TILE_ROWS + k;
                *s = image.get(r, j * TILE_COLS) + image.get(r, j * TILE_COLS + 1);
            }
            let quads = [
                sums[0] + sums[1],
                sums[2] + sums[3],
                sums[4] + sums[5],
                sums[6] + sums[7],
            ];
            let total = (quads[0] + quads[1]) + (quads[2] + quads[3]);
            out.values[i][j] = total / (TILE_ROWS * TILE_COLS) as f64;
        }
    }
    out
}
