//! File formats, model backends and the command-line pipeline around
//! `dreamcode-core`.

pub mod backend;
pub mod commands;
pub mod records;
pub mod report;
pub mod run;
