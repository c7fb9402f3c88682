//! Command line and HTTP front end for the psc2code pipeline.

pub mod api;
pub mod cli;
pub mod snapshot;
