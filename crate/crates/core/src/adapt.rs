//! The alternating adaptation loop: projection, pseudo-labels, conditional
//! alignment and similarity graph, repeated until the labels settle or the
//! iteration budget runs out.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::alignment::AlignmentMatrices;
use crate::dataset::{CombinedData, DomainDataset};
use crate::error::{EgdaError, Result};
use crate::graph::{build_laplacian, update_similarity_with, GraphOptions, Laplacian, SimilarityGraph};
use crate::scatter::build_sw;
use crate::subspace::{assemble, objective_value, solve_projection, Projection, Weights};

/// Subspace dimension used for inputs wider than this.
pub const DEFAULT_DIM: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    /// 1-nearest neighbor, Euclidean, ties to the lowest training index.
    #[default]
    Nn1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    /// Always run `max_iters` iterations.
    #[default]
    FixedIters,
    /// Stop once the fraction of changed pseudo-labels is at most `stability_threshold`.
    LabelStability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgdaConfig {
    pub weights: Weights,
    /// Subspace dimension; `None` picks [`default_dim`].
    pub dim: Option<usize>,
    pub max_iters: usize,
    /// Ridge added to the constraint matrix; `None` uses `1e-6·tr(Q)/d`.
    pub ridge: Option<f64>,
    pub classifier: ClassifierKind,
    pub convergence: Convergence,
    pub stability_threshold: f64,
    /// When false the conditional (per-class) alignment terms are never added.
    pub conditional: bool,
    pub exclude_self: bool,
    pub parallel_graph: bool,
    pub seed: u64,
}

impl Default for EgdaConfig {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            dim: None,
            max_iters: 15,
            ridge: None,
            classifier: ClassifierKind::Nn1,
            convergence: Convergence::FixedIters,
            stability_threshold: 0.0,
            conditional: true,
            exclude_self: false,
            parallel_graph: false,
            seed: 0,
        }
    }
}

/// `100` for wide inputs, otherwise half the feature count (at least 1).
pub fn default_dim(d: usize) -> usize {
    if d > DEFAULT_DIM {
        DEFAULT_DIM
    } else {
        (d / 2).max(1)
    }
}

impl EgdaConfig {
    pub fn resolved_dim(&self, d: usize) -> usize {
        self.dim.unwrap_or_else(|| default_dim(d))
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.max_iters == 0 {
            return Err(EgdaError::InvalidParameter("max_iters must be at least 1".into()));
        }
        if self.dim == Some(0) {
            return Err(EgdaError::InvalidParameter("dim must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.stability_threshold) {
            return Err(EgdaError::InvalidParameter(
                "stability_threshold must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationReport {
    pub predictions: Vec<usize>,
    pub projection: Projection,
    pub iterations_run: usize,
    pub objective_trace: Vec<f64>,
    pub label_change_trace: Vec<usize>,
    /// Present when target ground truth was supplied for evaluation.
    pub evaluation: Option<Evaluation>,
}

/// Minimal fit/predict contract for the pseudo-labeling classifier.
pub trait Classifier {
    fn fit(&mut self, train: &DMatrix<f64>, labels: &[usize]) -> Result<()>;
    fn predict(&self, test: &DMatrix<f64>) -> Result<Vec<usize>>;
}

#[derive(Debug, Clone, Default)]
pub struct NearestNeighbor {
    train: DMatrix<f64>,
    labels: Vec<usize>,
}

impl Classifier for NearestNeighbor {
    fn fit(&mut self, train: &DMatrix<f64>, labels: &[usize]) -> Result<()> {
        if train.ncols() == 0 {
            return Err(EgdaError::EmptyTrainingSet);
        }
        if labels.len() != train.ncols() {
            return Err(EgdaError::LabelCountMismatch {
                expected: train.ncols(),
                found: labels.len(),
            });
        }
        self.train = train.clone();
        self.labels = labels.to_vec();
        Ok(())
    }

    fn predict(&self, test: &DMatrix<f64>) -> Result<Vec<usize>> {
        nn1_classify(&self.train, &self.labels, test)
    }
}

pub fn nn1_classify(
    train: &DMatrix<f64>,
    train_labels: &[usize],
    test: &DMatrix<f64>,
) -> Result<Vec<usize>> {
    if train.ncols() == 0 {
        return Err(EgdaError::EmptyTrainingSet);
    }
    if train_labels.len() != train.ncols() {
        return Err(EgdaError::LabelCountMismatch {
            expected: train.ncols(),
            found: train_labels.len(),
        });
    }
    if train.nrows() != test.nrows() {
        return Err(EgdaError::shape(
            "nn1_classify",
            format!("train has {} rows, test has {}", train.nrows(), test.nrows()),
        ));
    }
    Ok(test
        .column_iter()
        .map(|t| {
            let mut best = (f64::INFINITY, 0);
            for (j, x) in train.column_iter().enumerate() {
                let dist: f64 = t.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                if dist < best.0 {
                    best = (dist, j);
                }
            }
            train_labels[best.1]
        })
        .collect())
}

pub fn evaluate(predictions: &[usize], truth: &[usize], class_count: usize) -> Result<Evaluation> {
    if predictions.len() != truth.len() {
        return Err(EgdaError::LabelCountMismatch {
            expected: truth.len(),
            found: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EgdaError::InvalidParameter("nothing to evaluate".into()));
    }
    crate::dataset::check_labels(predictions, class_count)?;
    crate::dataset::check_labels(truth, class_count)?;
    let mut confusion = vec![vec![0; class_count]; class_count];
    let mut correct = 0;
    for (&p, &t) in predictions.iter().zip(truth) {
        confusion[t][p] += 1;
        correct += usize::from(p == t);
    }
    Ok(Evaluation {
        accuracy: correct as f64 / truth.len() as f64,
        confusion,
    })
}

fn build_graph(
    z: &DMatrix<f64>,
    config: &EgdaConfig,
) -> Result<(SimilarityGraph, Laplacian)> {
    let options = GraphOptions {
        exclude_self: config.exclude_self,
        parallel: config.parallel_graph,
    };
    let graph = update_similarity_with(z, config.weights.gamma, options)?;
    let laplacian = build_laplacian(&graph);
    Ok((graph, laplacian))
}

/// Adapt from a labeled source to an unlabeled target.
///
/// Target labels, if present on `target`, are used only to fill
/// [`AdaptationReport::evaluation`] after the loop has finished.
pub fn run_egda(
    source: &DomainDataset,
    target: &DomainDataset,
    config: &EgdaConfig,
) -> Result<AdaptationReport> {
    config.validate()?;
    let source_labels = source.labels().ok_or(EgdaError::MissingLabels)?;
    let classes = source.class_count();
    if classes < 2 {
        return Err(EgdaError::InvalidParameter("at least 2 classes are required".into()));
    }
    if target.class_count() != classes {
        return Err(EgdaError::InvalidParameter(format!(
            "source has {classes} classes, target has {}",
            target.class_count()
        )));
    }
    let data = CombinedData::new(source, target)?;
    let x = &data.features;
    let (ns, nt) = (data.source_count, data.target_count);
    let dim = config.resolved_dim(x.nrows());

    // Initial graph lives in the input space.
    let (_, mut laplacian) = build_graph(x, config)?;
    let sw = build_sw(source)?.sw;
    let mut alignment = AlignmentMatrices::marginal(ns, nt)?;

    let mut classifier = match config.classifier {
        ClassifierKind::Nn1 => NearestNeighbor::default(),
    };
    let mut pseudo: Option<Vec<usize>> = None;
    let mut projection = None;
    let mut objective_trace = Vec::with_capacity(config.max_iters);
    let mut label_change_trace = Vec::with_capacity(config.max_iters);

    for iteration in 1..=config.max_iters {
        let at = |source: EgdaError| EgdaError::Iteration {
            iteration,
            source: Box::new(source),
        };
        let pieces = assemble(x, &alignment.combined, &sw, &laplacian.l, config.weights)?;
        let proj = solve_projection(&pieces, dim, config.ridge).map_err(at)?;

        let z = proj.a.transpose() * x;
        classifier.fit(&z.columns(0, ns).into_owned(), source_labels)?;
        let labels = classifier.predict(&z.columns(ns, nt).into_owned())?;
        let changed = match &pseudo {
            Some(prev) => prev.iter().zip(&labels).filter(|(a, b)| a != b).count(),
            None => nt,
        };

        if config.conditional {
            alignment = AlignmentMatrices::with_conditional(source_labels, &labels, classes)?;
        }
        let graph;
        (graph, laplacian) = build_graph(&z, config)?;

        objective_trace.push(objective_value(
            &proj.a,
            x,
            &alignment.combined,
            &sw,
            Some((&graph, &laplacian)),
            config.weights,
        )?);
        label_change_trace.push(changed);
        pseudo = Some(labels);
        projection = Some(proj);

        let stable = config.convergence == Convergence::LabelStability
            && changed as f64 <= config.stability_threshold * nt as f64;
        if stable {
            break;
        }
    }

    let predictions = pseudo.expect("at least one iteration runs");
    let evaluation = target
        .labels()
        .map(|truth| evaluate(&predictions, truth, classes))
        .transpose()?;
    Ok(AdaptationReport {
        iterations_run: objective_trace.len(),
        predictions,
        projection: projection.expect("at least one iteration runs"),
        objective_trace,
        label_change_trace,
        evaluation,
    })
}
