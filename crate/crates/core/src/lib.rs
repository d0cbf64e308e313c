//! Genuine multipartite nonlocality and entanglement-depth witnesses for
//! full-correlation Bell functionals with two settings and two outcomes per
//! party.

pub mod bounds;
pub mod certify;
pub mod correl;
pub mod error;
pub mod localset;
pub mod quantum;
mod rank;
pub mod sdpexport;

pub use error::{Error, Result};
