pub mod alignment;
pub mod augment;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod monotonic;
pub mod sftformat;
pub mod simulator;
pub mod trajectory;

pub use error::{Error, Result};
