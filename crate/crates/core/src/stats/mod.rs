//! Population statistics over a [`Dataset`](crate::Dataset) and its
//! exposure records.

pub mod correlation;
pub mod curve;
pub mod kde;
pub mod popularity;
pub mod powerlaw;
pub mod summary;
pub mod zeta;

pub use correlation::{popularity_threshold_correlation, spearman, CorrelationMethod, CorrelationReport};
pub use curve::{adoption_curve, AdoptionCurve, CurvePoint};
pub use kde::{smooth_distribution, DensityCurve};
pub use popularity::{tag_popularity, TagPopularity};
pub use powerlaw::{fit_power_law, PowerLawFit, PowerLawOptions};
pub use summary::Summary;
