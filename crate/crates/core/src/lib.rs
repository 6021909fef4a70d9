//! Graph-guided unsupervised domain adaptation for cross-session EEG emotion
//! recognition.
//!
//! A labeled source session and an unlabeled target session are projected into a
//! shared subspace `A` that jointly
//!
//! * aligns marginal and class-conditional means (linear MMD),
//! * compacts source classes (within-class scatter),
//! * preserves the neighborhood structure of an adaptively learned similarity graph,
//!
//! subject to `AᵀXHXᵀA = I`. The projection is a generalized symmetric eigenproblem;
//! the graph rows are Euclidean projections onto the probability simplex; target
//! pseudo-labels come from a 1-nearest-neighbor classifier and are refined iteratively.
//!
//! Samples are stored column-wise: a dataset with `d` features and `n` samples is a
//! `d × n` matrix, and combined data is always `[source | target]`.

pub mod adapt;
pub mod alignment;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod importance;
pub mod scatter;
mod serde_matrix;
pub mod subspace;

pub use adapt::{
    evaluate, nn1_classify, run_egda, AdaptationReport, ClassifierKind, Convergence, EgdaConfig,
    Evaluation,
};
pub use alignment::{build_m0, build_mc, mmd_trace, AlignmentMatrices};
pub use dataset::{
    generate_synthetic, load_dataset, standardize, CombinedData, DomainDataset, FeatureLayout,
    FeatureOrdering, StandardizeMode,
};
pub use error::{EgdaError, Result};
pub use graph::{
    build_laplacian, graph_trace, project_to_simplex, update_similarity, Laplacian,
    SimilarityGraph,
};
pub use importance::{
    band_importance, channel_importance, feature_importance, rank_report, ImportanceProfile,
};
pub use scatter::{build_sw, scatter_trace, ScatterMatrix};
pub use subspace::{
    assemble, centering_matrix, objective_value, solve_projection, ObjectivePieces, Projection,
    Weights,
};

/// Hyperparameter grid the trade-off weights are drawn from in the original experiments.
pub const PARAMETER_GRID: [f64; 11] = [0.001, 0.01, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0];
