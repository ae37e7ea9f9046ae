//! Command line and HTTP/JSON front end for the juris engine.

pub mod cli;
pub mod service;
