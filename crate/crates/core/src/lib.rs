//! Answer-set reasoning over encoded criminal-code articles.

pub mod engine;
pub mod explain;
pub mod ground;
pub mod ilp;
pub mod kb;
pub mod solve;
pub mod syntax;
pub mod verify;
