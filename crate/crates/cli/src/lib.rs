//! Library side of the `primasm` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod obj;
