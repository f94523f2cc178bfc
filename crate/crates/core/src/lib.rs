//! Discriminative lifting: an adaptive, PSVM-trained lifting scheme that maps
//! labelled signals to expansion coefficients, each usable as a local
//! classifier.
//!
//! Each decomposition level splits the signal into odd and even samples,
//! averages them into a coarse approximation, and predicts every even sample
//! from a small window of the coarse signal. The prediction weights come from
//! a proximal SVM, so the prediction errors (the detail coefficients) are
//! discriminative between the two classes.

pub mod datasets;
pub mod error;
pub mod evaluation;
pub mod lifting;
pub mod model;
pub mod psvm;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
pub use lifting::{BaseVectors, CoefficientId, CoefficientTable, FittedTransform, LevelRecord, Predictor};
pub use psvm::{PredictProblem, PredictSolution, ProximalSvm};
pub use rng::SeedStream;
pub use types::{
    index_window, interleave, split, IndexWindow, Matrix, MulticlassDataset, SignalDataset, TransformConfig, Variant,
};
