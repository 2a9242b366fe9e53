//! Interpretable tree-ensemble analysis of environmental hazard exposure.
//!
//! Per (county, hazard) pair the library binarizes tract exposure at the
//! county mean, trains a random forest and a boosted-tree baseline with a
//! stratified 70/30 split and ten-fold cross-validation, scores the held-out
//! predictions with F-beta, and derives:
//!
//! * normalized Gini feature importance per county and a rank-based overall
//!   importance score per hazard ([`importance`]),
//! * inter-county and inter-hazard dispersion of the scores ([`metrics`]),
//! * cross-county and cross-hazard transferability matrices ([`transfer`]).
//!
//! [`synth`] generates counties with planted feature→hazard laws so every
//! stage can be checked against a known answer, and [`pipeline`] wires the
//! whole experiment together behind a JSON config.
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! ```bash
//! cargo run --release --example full_pipeline
//! ```

pub mod cart;
pub mod dataset;
pub mod error;
pub mod forest;
pub mod gbt;
pub mod importance;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod selection;
pub mod synth;
pub mod transfer;

pub use cart::{DecisionTree, ImportanceFormula, TreeNode, TreeParams};
pub use dataset::{CountyDataset, FeatureSchema, LabeledDataset, Matrix, RiskLabel};
pub use error::{Error, Result};
pub use forest::{train_forest, ForestModel, ForestParams};
pub use gbt::{train_gbt, BoostedModel, GbtParams};
pub use model::{Classifier, ModelConfig, ModelKind, TrainedModel};
