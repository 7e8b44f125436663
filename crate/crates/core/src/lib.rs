pub mod adaptation;
pub mod case;
pub mod config;
pub mod embed;
pub mod env;
pub mod error;
pub mod gda;
pub mod grammar;
pub mod index;
pub mod learning;
pub mod library;
pub mod metrics;
pub mod persist;
pub mod retrieval;

pub use error::{Error, Result};
