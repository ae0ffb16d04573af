//! Command line interface and HTTP API over [`nous_core::Engine`].

pub mod cli;
pub mod server;
