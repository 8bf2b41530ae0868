pub mod error;
pub mod geometry;
pub mod linalg;
pub mod maps;
pub mod metrics;
pub mod models;
pub mod observables;
pub mod operator;
pub mod optim;
pub mod random;
pub mod scenario;
pub mod sdp;

pub use error::{Error, Result};
pub use operator::{DensityMatrix, HermitianOperator, MatrixRecord, SpectralDecomposition};
