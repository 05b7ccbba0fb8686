pub mod approx;
pub mod convex;
pub mod desing;
pub mod curve;
pub mod error;
pub mod geometry;
pub mod net;
pub mod pipeline;
pub mod stretch;

pub use error::{Error, Result};
