//! Evaluation metrics: CDFs and KS distances, link-state probabilities by
//! distance, relative zenith-angle heatmaps, uniformity checks and RMS
//! spreads.

mod bins;
pub mod compare;
mod ecdf;
mod link_state;
mod spread;
mod zenith;

pub use bins::Bins;
pub use compare::{
    compare_features, compare_link_states, evaluate, feature_values, uniformity_report, EvaluationReport, FeatureKs,
    LinkFeature, LinkStateComparison, UniformityRow,
};
pub use ecdf::{ks_statistic, ks_uniform, uniformity_check, Ecdf, UniformTarget};
pub use link_state::{at_height, link_state_prob, LinkStateBin, HEIGHT_TOLERANCE_M};
pub use spread::{path_gain, rms_spread, weighted_spread, RmsSpreadReport, SpreadFeature};
pub use zenith::{default_angle_bins, relative_zenith_pdf, BinnedPdf2D, ZenithKind, ZenithPdf};

/// Default distance bin width for heatmaps.
pub const DEFAULT_DISTANCE_BIN_M: f64 = 25.0;
