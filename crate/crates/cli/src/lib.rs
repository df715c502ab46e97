//! Configuration, file formats and the parallel driver behind the `cascade-qsd` binary.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod engine;
pub mod fieldcache;
