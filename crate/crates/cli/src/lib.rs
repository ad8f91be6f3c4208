//! Argument definitions and command implementations of the `mintube`
//! binary, exposed so the commands can be driven in-process.

pub mod cli;
pub mod commands;
