pub mod active;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod features;
pub mod learners;
pub mod rng;
pub mod trees;
pub mod types;

pub use error::{Error, Result};
pub use types::{argmax_class, normalize, ClassLabel, ClassRegistry, Dataset, Instance, Prediction};
