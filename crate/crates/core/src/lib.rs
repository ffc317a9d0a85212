//! Voter-model stationary measures on Z^d, sampled through coalescing random
//! walk duality, together with the percolation and multiscale tooling built
//! on top of them.

pub mod error;
pub mod green;
pub mod lattice;
pub mod percolation;
pub mod renorm;
pub mod rng;
pub mod scalar;
pub mod stationary;
pub mod stats;
pub mod union_find;
pub mod walks;

pub use error::{Error, Result};
pub use lattice::{Annulus, ConnectivityMode, LatticePoint, Norm, Window};
pub use scalar::Scalar;

pub type Estimate64 = stats::Estimate<f64>;
pub type Estimate32 = stats::Estimate<f32>;
pub type Moments64 = stats::Moments<f64>;
pub type Spectrum64 = green::Spectrum<f64>;
pub type Spectrum32 = green::Spectrum<f32>;
pub type GreenSolver64 = green::GreenSolver<f64>;
pub type GreenSolver32 = green::GreenSolver<f32>;
pub type GreenTable64 = green::GreenTable<f64>;
pub type GreenTable32 = green::GreenTable<f32>;
pub type HittingTable64 = green::HittingTable<f64>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
