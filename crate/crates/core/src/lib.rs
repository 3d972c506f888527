// Rate and step checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod curve;
pub mod error;
pub mod fock;
pub mod master;
pub mod optics;
pub mod transparency;
pub mod zeno;

pub use error::{Error, Result};

/// Version string stamped into every experiment's metadata.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
