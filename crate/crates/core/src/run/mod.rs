//! Command implementations shared by the executable and the tests.

mod commands;
mod config;

pub use commands::{ablate, analyze, corpus, eval, respond, synth, train, Log};
pub use config::RunConfig;
