//! Two-phase CO₂ storage simulator plus a Fourier-neural-operator surrogate
//! workbench: data generation, feature assembly, training and evaluation.

mod binio;
pub mod config;
pub mod data;
pub mod design;
pub mod error;
pub mod eval;
pub mod field;
pub mod fno;
pub mod grad;
pub mod kv;
pub mod pipeline;
pub mod sim;
pub mod spectral;
pub mod train;
pub mod units;

pub use error::{Error, Result};
pub use field::Field2D;
