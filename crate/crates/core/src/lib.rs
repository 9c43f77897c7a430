//! Reconstruction of spheres, cylinders and cuboids from four laser scan
//! lines, aiming cues for a hand-mounted sensor, and the grasp controller
//! that consumes both.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod ellipse;
pub mod error;
pub mod feedback;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod reconstruct;
pub mod sac;
pub mod scan_sim;
pub mod scene;
pub mod trial;

pub use error::{Error, Result};
