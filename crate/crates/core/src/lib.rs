pub mod dataset;
pub mod embeddings;
pub mod error;
pub mod harness;
pub mod knn;
pub mod metrics;
pub mod privacy;

pub use error::{Error, Result};
