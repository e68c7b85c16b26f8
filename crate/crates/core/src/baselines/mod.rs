//! Comparison methods: regression MF, JMSD-based KNN and the error-matrix
//! reliability add-on.

pub mod knn;
pub mod mf;
pub mod reliability;

pub use knn::{jmsd, KnnConfig, KnnMode, KnnModel};
pub use mf::{MfHyperparams, MfModel, MfVariant};
pub use reliability::{EnforcedPredictor, ReliabilityAddOn};
