use serde::{Deserialize, Serialize};

use super::matrix::{ChannelMatrix, Feature, Stage, MATRIX_ROWS};
use crate::error::{Error, Result};

/// Per-feature min-max scaling into [-1, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub min: [f64; MATRIX_ROWS],
    pub max: [f64; MATRIX_ROWS],
}

/// Result of [`FeatureScaler::scale`]. `clamped` counts entries that were
/// outside the fitted range and got clamped to the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaled {
    pub matrix: ChannelMatrix,
    pub clamped: usize,
}

impl FeatureScaler {
    /// Fits min and max of every row over all matrices and all columns,
    /// virtual columns included.
    pub fn fit<'a, I>(matrices: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a ChannelMatrix>,
    {
        let mut min = [f64::INFINITY; MATRIX_ROWS];
        let mut max = [f64::NEG_INFINITY; MATRIX_ROWS];
        let mut seen = false;
        for m in matrices {
            if m.stage != Stage::Normalized {
                return Err(Error::Shape {
                    expected: "normalized matrix".into(),
                    actual: format!("{:?} matrix", m.stage),
                });
            }
            if !m.is_finite() {
                return Err(Error::Domain("non-finite matrix entry".into()));
            }
            seen = true;
            for (i, row) in m.values.iter().enumerate() {
                for &v in row {
                    min[i] = min[i].min(v);
                    max[i] = max[i].max(v);
                }
            }
        }
        if !seen {
            return Err(Error::EmptyDataset);
        }
        Self::from_bounds(min, max)
    }

    pub fn from_bounds(min: [f64; MATRIX_ROWS], max: [f64; MATRIX_ROWS]) -> Result<Self> {
        for f in Feature::ALL {
            let (lo, hi) = (min[f.row()], max[f.row()]);
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::Domain(format!("non-finite bounds for {}", f.name())));
            }
            if hi <= lo {
                return Err(Error::DegenerateFeature(f.name()));
            }
        }
        Ok(Self { min, max })
    }

    pub fn scale_value(&self, feature: Feature, v: f64) -> (f64, bool) {
        let (lo, hi) = (self.min[feature.row()], self.max[feature.row()]);
        let out_of_range = v < lo || v > hi;
        let s = (2.0 * v - hi - lo) / (hi - lo);
        (s.clamp(-1.0, 1.0), out_of_range)
    }

    pub fn unscale_value(&self, feature: Feature, s: f64) -> f64 {
        let (lo, hi) = (self.min[feature.row()], self.max[feature.row()]);
        (s * (hi - lo) + hi + lo) / 2.0
    }

    pub fn scale(&self, matrix: &ChannelMatrix) -> Scaled {
        let mut out = ChannelMatrix::zeros(Stage::Scaled);
        let mut clamped = 0;
        for f in Feature::ALL {
            for (dst, &v) in out.values[f.row()].iter_mut().zip(matrix.row(f)) {
                let (s, clipped) = self.scale_value(f, v);
                clamped += clipped as usize;
                *dst = s;
            }
        }
        Scaled { matrix: out, clamped }
    }

    pub fn unscale(&self, matrix: &ChannelMatrix) -> ChannelMatrix {
        let mut out = ChannelMatrix::zeros(Stage::Normalized);
        for f in Feature::ALL {
            for (dst, &s) in out.values[f.row()].iter_mut().zip(matrix.row(f)) {
                *dst = self.unscale_value(f, s);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::matrix::MATRIX_COLS;
    use proptest::prelude::*;

    fn normalized(fill: impl Fn(usize, usize) -> f64) -> ChannelMatrix {
        let mut m = ChannelMatrix::zeros(Stage::Normalized);
        for i in 0..MATRIX_ROWS {
            for j in 0..MATRIX_COLS {
                m.values[i][j] = fill(i, j);
            }
        }
        m
    }

    fn bounds_0_10() -> FeatureScaler {
        FeatureScaler::from_bounds([0.0; 8], [10.0; 8]).unwrap()
    }

    #[test]
    fn endpoints_and_midpoint() {
        let s = bounds_0_10();
        assert_eq!(s.scale_value(Feature::Delay, 0.0), (-1.0, false));
        assert_eq!(s.scale_value(Feature::Delay, 10.0), (1.0, false));
        assert_eq!(s.scale_value(Feature::Delay, 5.0), (0.0, false));
    }

    #[test]
    fn single_link_fit_uses_row_extremes() {
        let m = normalized(|i, j| (i * 100 + j) as f64);
        let s = FeatureScaler::fit([&m]).unwrap();
        for i in 0..MATRIX_ROWS {
            assert_eq!(s.min[i], (i * 100) as f64);
            assert_eq!(s.max[i], (i * 100 + 24) as f64);
        }
    }

    #[test]
    fn constant_feature_is_named() {
        let m = normalized(|i, j| if i == 3 { 7.0 } else { j as f64 });
        match FeatureScaler::fit([&m]) {
            Err(Error::DegenerateFeature(name)) => assert_eq!(name, "zod"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_fit_fails() {
        assert!(matches!(
            FeatureScaler::fit(std::iter::empty()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn out_of_range_values_are_clamped_and_counted() {
        let s = bounds_0_10();
        let m = normalized(|i, j| {
            if i == 0 && j < 3 {
                12.0
            } else if i == 1 && j == 0 {
                -3.0
            } else {
                5.0
            }
        });
        let out = s.scale(&m);
        assert_eq!(out.clamped, 4);
        assert_eq!(out.matrix.values[0][0], 1.0);
        assert_eq!(out.matrix.values[1][0], -1.0);
        assert!(out.matrix.is_scaled());
    }

    proptest! {
        #[test]
        fn unscale_inverts_scale(
            lo in -500.0f64..500.0,
            width in 1e-3f64..1000.0,
            fracs in proptest::collection::vec(0.0f64..=1.0, 200),
        ) {
            let s = FeatureScaler::from_bounds([lo; 8], [lo + width; 8]).unwrap();
            let m = normalized(|i, j| lo + width * fracs[i * MATRIX_COLS + j]);
            let out = s.scale(&m);
            prop_assert_eq!(out.clamped, 0);
            for v in out.matrix.values.iter().flatten() {
                prop_assert!((-1.0..=1.0).contains(v));
            }
            let back = s.unscale(&out.matrix);
            for (a, b) in back.values.iter().flatten().zip(m.values.iter().flatten()) {
                prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
            }
        }
    }
}
