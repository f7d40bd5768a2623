pub mod audio;
pub mod corpus;
pub mod enhance;
pub mod error;
pub mod features;
pub mod intelligibility;
pub mod nn;
pub mod pipeline;
pub mod vc;
pub mod rng;

pub use error::{Error, Result};
