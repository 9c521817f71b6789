//! Command-line front end for the vRAN platform simulator: training,
//! evaluation, benchmarking, trace generation, oracle diagnostics, and
//! inference latency measurement, all driven by one TOML experiment config.

pub mod cli;
pub mod commands;
pub mod config;
pub mod csvout;
pub mod svg;
pub mod util;
