//! Occupancy-grid anticipation with a Kalman-style GRU array.
//!
//! The crate covers the whole pipeline: a small autodiff engine
//! ([`numerics`]), synthetic avoidance-only Boids scenes ([`boids`]), miss and
//! shift corruption ([`noise`]), the OGSQ1 sequence container and track/PGM
//! interchange ([`dataset`]), the two recurrent models ([`model`]), training
//! ([`training`]) and the comparison harness ([`evaluation`]).

pub mod boids;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod gradcheck;
pub mod grid;
pub mod model;
pub mod noise;
pub mod numerics;
pub mod rng;
pub mod training;

pub use error::{Error, Result};

// Lets shared test oracles name the crate as `kga` from unit tests too.
#[cfg(test)]
extern crate self as kga;
