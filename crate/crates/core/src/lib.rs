pub mod error;
pub mod geo;
pub mod preprocess;

pub use error::{Error, Result};
pub mod network;
pub mod matcher;
pub mod enrich;
pub mod metrics;
pub mod evaluation;
pub mod synthetic;
pub mod pipeline;
