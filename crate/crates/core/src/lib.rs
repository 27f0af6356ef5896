//! Unsupervised channel charting.
//!
//! Synthesizes spatially consistent MIMO channels, initializes a sparse
//! correlation encoder from a phase-invariant distance and Isomap, trains it
//! with a temporally mined triplet loss, and scores the resulting charts by
//! trustworthiness and continuity.

pub mod encoder;
pub mod error;
pub mod evalmetrics;
pub mod isomap;
pub mod linalg;
pub mod metricspace;
pub mod rng;
pub mod synthgen;
pub mod trainer;
pub mod triplet;

pub use error::{Error, Result};
