//! Nonparametric undirected graphical models from i.i.d. samples.
//!
//! For every pair of variables a low-dimensional predictor of the remaining
//! variables is extracted by kernel sliced inverse regression, and the pair
//! is scored by the Hilbert–Schmidt norm of a kernel conditional covariance
//! operator given that predictor. Thresholding the scores gives the graph.

pub mod ccco;
pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod gsir;
pub mod kernel;
pub mod numerics;
pub mod simgen;
pub mod tuning;

pub use ccco::{naive_pair_score, pair_score, EdgeScore, Method};
pub use data::SampleMatrix;
pub use error::{Error, Result};
pub use graph::{
    estimate, score_all_pairs, threshold_graph, EdgeScoreMatrix, EpsSetting, FailurePolicy,
    GraphEstimate, PipelineConfig, RhoSetting,
};
pub use simgen::{GroundTruth, ModelTag, SimModel};
pub use tuning::{GcvGrid, Regularizers};
