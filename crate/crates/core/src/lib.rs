//! Length-desensitized preference optimization on a toy language model:
//! losses, model, optimizer, data curation, synthetic tasks and training.

pub mod checkpoint;
pub mod datapipe;
pub mod error;
pub mod experiment;
pub mod optim;
pub mod prefloss;
pub mod rng;
pub mod synthbench;
pub mod tinylm;
pub mod train;

pub use error::{Error, Result};
