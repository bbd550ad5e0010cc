//! Numerical core for an emergent-quantum-mechanics description of market
//! prices: scaling statistics of log-price paths, occupancy densities, the
//! inverse problem recovering a potential well from a density, forward
//! Schrodinger-type solvers, and seeded stochastic path generators used as
//! oracles for the estimators.
//!
//! The crate is `no_std` (with `alloc`); all IO, calendar handling and file
//! formats live in the companion `qfin` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod density;
pub mod error;
pub mod inverse;
pub mod params;
pub mod scaling;
pub mod series;
pub mod simulate;
pub mod solver;

pub use density::DensityGrid;
pub use error::Error;
pub use inverse::PotentialProfile;
pub use params::ModelParams;
pub use series::CoordinateSeries;

pub type Result<T> = core::result::Result<T, Error>;
