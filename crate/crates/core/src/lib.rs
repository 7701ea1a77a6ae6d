//! Single-shot 6D pose estimation toolkit for depth images.
//!
//! Objects are detected on an `S x S` grid of image cells; each cell regresses
//! the probability that an object origin falls into it, the object's
//! visibility, its position relative to the cell and its orientation as
//! bounded Euler angles. Evaluation uses a symmetry-aware distance between
//! pose representatives.

pub mod error;
pub mod eval;
pub mod geometry;
pub mod gridcodec;
pub mod losses;
pub mod model;
pub mod postprocess;
pub mod scenegen;

pub use error::{Error, Result};
