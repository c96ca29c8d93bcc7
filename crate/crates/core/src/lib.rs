//! Digital-analog counterdiabatic circuit synthesis and verification.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation: the Pauli algebra, the model instances, the variational
//! gauge-potential solver, product-formula and analog-block synthesis into
//! a small circuit IR, and an exact dense simulator used to check all of it
//! at desk scale. File formats, experiment drivers and the command line live
//! in the `dacqc` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod aab;
pub mod agp;
pub mod circuit;
pub mod depth;
pub mod error;
pub mod evolve;
pub mod fit;
pub mod linalg;
pub mod model;
pub mod pauli;
pub mod pf;
pub mod scaling;
pub mod sim;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use pauli::{PauliString, PauliSum, Phase};
