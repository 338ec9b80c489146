//! Extension weights, closures, random expansions and component census
//! checks for sparse random relational structures.

pub mod catalog;
pub mod cli;
pub mod compsys;
pub mod error;
pub mod expansion;
pub mod sampler;
pub mod structures;
pub mod weights;

pub use error::{Error, Result};
