//! Experiment configuration, sweeps over `n` and plot-ready output.

pub mod config;
pub mod plot;
pub mod slope;
pub mod sweep;
