//! Ranks unlabeled fine-tuning samples for manual annotation.
//!
//! The engine works on latent embeddings (for example bottleneck activations of an
//! encoder-decoder segmentation network). Core-training samples carry a measured IoU;
//! fine-tuning samples do not. The pipeline is:
//!
//! 1. [`reduce`]: PCA over the collected activations.
//! 2. [`metrics`]: k-NN prediction of IoU for fine-tuning samples.
//! 3. [`cluster`]: k-means over core samples with an extra IoU coordinate, classification of
//!    fine-tuning samples, error clusters and orphaned clusters.
//! 4. [`outlier`]: Local Outlier Probability.
//! 5. [`priority`]: basic and multiparty priority scores, ranking and budget selection.
//!
//! [`pipeline`] wires the stages together and [`sim`] is a seeded synthetic benchmark that
//! compares priority sampling with random sampling over an annotation budget sweep.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod binio;
pub mod cluster;
pub mod data;
pub mod error;
pub mod kmeans;
pub mod metrics;
pub mod outlier;
pub mod pipeline;
pub mod priority;
pub mod reduce;
pub mod sim;

pub use cluster::{AssignedCluster, Assignment, Cluster, ClusterModel, OrphanReport};
pub use data::{BinaryMask, Corpus, EmbeddingRecord, FileFormat, Split};
pub use error::{Error, Result};
pub use metrics::{iou, IouPredictor};
pub use outlier::LoopModel;
pub use pipeline::{FittedModels, PipelineConfig};
pub use priority::{Coefficients, FeatureBundle, SampleScore, Strategy};
pub use reduce::{Components, PcaModel};
pub use sim::{GroundTruth, SweepResult, SyntheticSpec};

/// Squared Euclidean distance. Slices must have equal length.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}
