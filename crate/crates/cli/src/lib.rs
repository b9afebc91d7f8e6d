//! Command-line front end for `regretlab`. The binary is a thin wrapper
//! around [`run`]; the command table lives in [`args`].

pub mod args;
pub mod commands;
pub mod io;
pub mod reproduce;

pub use commands::run;
