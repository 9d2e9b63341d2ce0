//! Riesz-energy dimension lower bounds for limsup sets of open sets inside
//! shrinking balls on the torus `T^d`, together with the measures behind the
//! bound and empirical checks on Diophantine examples.

pub mod bound;
pub mod cli;
pub mod error;
pub mod lab;
pub mod measures;
pub mod riesz;
pub mod rng;
pub mod stats;
pub mod torus;
pub mod vitali;

pub use error::{Error, Result};
pub use rng::Stream;
