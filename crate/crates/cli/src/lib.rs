//! Experiment harness for first-passage percolation on crystal lattices:
//! configuration loading, experiment commands, output files and SVG plots.

pub mod cli;
pub mod commands;
pub mod config;
pub mod svg;
