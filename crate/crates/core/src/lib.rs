//! Aumann and conditional integrals of correspondences on saturated
//! finite models, with the Walsh-series counterexamples and a large game
//! built on them.

pub mod correspondence;
pub mod dyadic;
pub mod error;
pub mod game;
pub mod measure_space;
pub mod rcd;
pub mod sequence_space;
pub mod set_integration;
pub mod walsh;

pub use error::{Error, Result};

/// Two vectors closer than this (max-coordinate) are the same point.
pub const DEDUP_TOL: f64 = 1e-12;
/// Distance below which a point counts as a member of a finite set.
pub const MEMBER_TOL: f64 = 1e-9;
/// Payoff gap below which two actions tie in a best response.
pub const TIE_TOL: f64 = 1e-10;
