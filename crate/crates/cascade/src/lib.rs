//! Std companion to `cascade-core`: BEIR-style file formats, the binary
//! index snapshot, the JSON-lines client for external scorer processes,
//! TOML pipeline files, run/report writers and multi-threaded evaluation.

pub mod config;
pub mod error;
pub mod eval;
pub mod external;
pub mod io;
pub mod output;
pub mod protocol;
pub mod snapshot;

pub use error::{Error, Result};
