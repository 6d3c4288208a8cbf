//! First-passage percolation on crystal lattices.
//!
//! Lattices are voltage graphs over a finite base graph; every computation
//! runs on a finite [`lattice::Window`] and reports when the window was too
//! small instead of silently truncating.

pub mod error;
pub mod graph;
pub mod lattice;
pub mod fpp;
pub mod estimate;
pub mod quotient;

pub use error::{Error, Result};
