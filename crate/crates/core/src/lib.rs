//! Yaw estimation for hex nuts on a tabletop.
//!
//! The pipeline accumulates point-cloud frames, segments them into clusters
//! and keeps the nut-sized ones ([`cloud`]). Each nut centroid is then
//! scored against a binary Scharr edge image of the scene photo
//! ([`imaging`]) by projecting a rendered CAD nut edge model ([`model`]) at
//! every yaw of a grid that covers one 60° symmetry period ([`matching`]).
//! [`synth`] generates tabletop scenes with known ground truth.

// `!(x > 0.0)` is used on purpose throughout validation so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod config;
pub mod error;
pub mod geometry;
pub mod imaging;
pub mod matching;
pub mod model;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
