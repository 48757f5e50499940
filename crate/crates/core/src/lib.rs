//! Leaf-disease image classification with a frozen VGG16 feature extractor
//! and a random-forest classifier.
//!
//! The pipeline is: [`dataset::scan_dataset`] → [`dataset::preprocess`] →
//! [`vgg::FeatureExtractor`] → [`io::cache::FeatureCache`] →
//! [`dataset::stratified_split`] → [`forest::train`] → [`metrics`].

pub mod dataset;
pub mod error;
pub mod forest;
mod gemm;
pub mod io;
pub mod metrics;
mod rng;
pub mod tensor;
pub mod vgg;

pub use dataset::{LabeledImageSet, SplitConfig, TrainTestSplit};
pub use error::{Error, Result};
pub use forest::{Forest, ForestParams, Prediction};
pub use io::cache::FeatureCache;
pub use io::weights::{validate_weights, Violation, WeightSet};
pub use metrics::{ClassMetrics, ConfusionMatrix, EvaluationReport};
pub use tensor::{conv2d, im2col, maxpool2d, relu, ConvKernel, Matrix, Tensor};
pub use vgg::{FeatureExtractor, FeatureVector, LayerKind, LayerSpec};
