//! Adoption-threshold measurement for temporal user-tag logs.
//!
//! [`event_model`] holds the immutable [`Dataset`] (adoption log, follower
//! graph, binary snapshot). [`exposure`] measures exposure at each first
//! usage and averages it into per-user thresholds. [`stats`] covers tag
//! popularity, discrete power-law fits, adoption curves, density smoothing
//! and rank correlation. [`sim`] runs diffusion models on generated graphs
//! and feeds their output back through the measurement code.

pub mod error;
pub mod event_model;
pub mod exposure;
pub mod seed;
pub mod sim;
pub mod stats;
pub mod time;

pub use error::{Error, Result};
pub use event_model::{
    build_dataset, AdoptionEvent, AdoptionRow, BuildOptions, BuildReport, Dataset, DatasetCounts,
    FollowEdge, FollowRow, FollowerGraph, TagId, UserId,
};
pub use exposure::{ExposureOptions, ExposureRecord, PopularityMode, TieRule, UserThreshold};
pub use time::Timestamp;
