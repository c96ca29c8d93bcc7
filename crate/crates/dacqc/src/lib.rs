//! File formats, experiment drivers and the command line on top of
//! `dacqc-core`.

pub mod bench;
pub mod cli;
pub mod error;
pub mod formats;

pub use error::{Error, Result};
