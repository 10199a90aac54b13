use crate::error::{Error, Result};

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("NaN sample".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Right-continuous empirical CDF.
#[derive(Clone, Debug, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        Ok(Self {
            sorted: sorted_finite(samples)?,
        })
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Empirical quantile, lower step.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.sorted.len();
        let k = ((q.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[k - 1]
    }
}

/// Two-sample Kolmogorov-Smirnov distance `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted_finite(a)?;
    let b = sorted_finite(b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Reference distributions for uniformity checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UniformTarget {
    /// U(-180, 180), for azimuths.
    Azimuth,
    /// U(-360, 0), for arrival phases.
    Phase,
}

impl UniformTarget {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            UniformTarget::Azimuth => (-180.0, 180.0),
            UniformTarget::Phase => (-360.0, 0.0),
        }
    }
}

/// One-sample KS distance against `U(lo, hi)`.
pub fn ks_uniform(samples: &[f64], lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo) {
        return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
    }
    let s = sorted_finite(samples)?;
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

pub fn uniformity_check(samples: &[f64], target: UniformTarget) -> Result<f64> {
    let (lo, hi) = target.bounds();
    ks_uniform(samples, lo, hi)
}
