//! Minimal reverse-mode autodiff and optimiser for the conversion model.

mod graph;
mod params;

pub use graph::{Graph, Mat, Var, BCE_CLAMP};
pub(crate) use graph::bce_value;
pub use params::{Adam, Init, ParamStore};
