//! Command-line front end and reproducible experiments for `curveband`.

pub mod commands;
pub mod experiments;
