pub mod channel;
pub mod choieffros;
pub mod cli;
pub mod error;
pub mod matcore;
pub mod spectral;
pub mod structure;
pub mod tolerance;
pub mod unfolder;

pub use error::{Error, Result};
pub use tolerance::{Check, Tolerances};
