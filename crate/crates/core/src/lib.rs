//! Projection-free solvers for simple bilevel problems: minimize a smooth
//! upper objective over the solution set of a smooth convex lower problem
//! on a compact convex region.

pub mod error;
pub mod functions;
pub mod linalg;
pub mod model;
pub mod oracles;
pub mod problems;
pub mod solvers;

pub use error::{Error, Result};
pub use model::*;
