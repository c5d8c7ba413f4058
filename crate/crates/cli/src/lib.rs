//! Command-line front-end: `estimate`, `simulate`, `analyze` and `optimize`,
//! plus the manifest runner behind `sampled-card-repro`.

pub mod args;
pub mod commands;
pub mod input;
pub mod manifest;

pub use args::{Cli, Command};

/// Exit codes shared by every subcommand.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const DEGENERATE: i32 = 3;
    pub const EMPTY: i32 = 4;
}
