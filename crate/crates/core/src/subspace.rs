//! Assembly of the unified objective and the projection update.
//!
//! With `S` fixed, the projection minimizes `Tr(AᵀPA)` subject to `AᵀQA = I`, where
//!
//! ```text
//! P = α X M Xᵀ + β S_w + μ X L Xᵀ + λ I
//! Q = X H Xᵀ,   H = I − 11ᵀ/n
//! ```
//!
//! The minimizer stacks the generalized eigenvectors of `PA = QAΦ` with the smallest
//! eigenvalues. `Q` is ridged to `Q + εI`, Cholesky-factored as `GGᵀ`, and the pencil is
//! reduced to the standard symmetric problem `G⁻¹PG⁻ᵀ`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::alignment::mmd_trace;
use crate::error::{EgdaError, Result};
use crate::graph::{graph_trace, Laplacian, SimilarityGraph};
use crate::scatter::scatter_trace;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITERS: usize = 10_000;
const RESIDUAL_TOLERANCE: f64 = 1e-6;
/// Eigenvalues of `Q` below this fraction of the largest count as null space.
const RANK_TOLERANCE: f64 = 1e-10;

/// Trade-off weights of the unified objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    /// Marginal and conditional distribution alignment.
    pub alpha: f64,
    /// Source within-class compactness.
    pub beta: f64,
    /// Graph (neighborhood) preservation.
    pub mu: f64,
    /// Frobenius regularization of the projection.
    pub lambda: f64,
    /// Similarity smoothness; also the row-projection scale of the graph update.
    pub gamma: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.1,
            mu: 0.1,
            lambda: 1.0,
            gamma: 1.0,
        }
    }
}

impl Weights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("mu", self.mu),
            ("lambda", self.lambda),
            ("gamma", self.gamma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(EgdaError::InvalidParameter(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if self.gamma == 0.0 {
            return Err(EgdaError::InvalidParameter("gamma must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ObjectivePieces {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub weights: Weights,
}

/// Learned projection, `d × d_f`, columns ordered by ascending eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    #[serde(with = "crate::serde_matrix")]
    pub a: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// Ridge `ε` actually added to `Q`.
    pub ridge: f64,
}

pub fn centering_matrix(n: usize) -> DMatrix<f64> {
    let inv = 1.0 / n as f64;
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 - inv } else { -inv })
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `X M Xᵀ` for a square `n × n` coefficient matrix.
fn sandwich(x: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    (x * m) * x.transpose()
}

/// `Q = X H Xᵀ`, computed from row-centered `X` since `H` is a symmetric projector.
pub fn constraint_matrix(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        let mean = row.mean();
        row.add_scalar_mut(-mean);
    }
    symmetrize(&(&centered * centered.transpose()))
}

pub fn assemble(
    x: &DMatrix<f64>,
    m_combined: &DMatrix<f64>,
    sw: &DMatrix<f64>,
    laplacian: &DMatrix<f64>,
    weights: Weights,
) -> Result<ObjectivePieces> {
    let (d, n) = x.shape();
    if m_combined.shape() != (n, n) || laplacian.shape() != (n, n) || sw.shape() != (d, d) {
        return Err(EgdaError::shape(
            "assemble",
            format!(
                "X {d}x{n}, M {:?}, S_w {:?}, L {:?}",
                m_combined.shape(),
                sw.shape(),
                laplacian.shape()
            ),
        ));
    }
    for (name, v) in [
        ("alpha", weights.alpha),
        ("beta", weights.beta),
        ("mu", weights.mu),
        ("lambda", weights.lambda),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(EgdaError::InvalidParameter(format!(
                "{name} must be finite and nonnegative, got {v}"
            )));
        }
    }

    let mut p = DMatrix::identity(d, d) * weights.lambda;
    if weights.alpha != 0.0 {
        p += sandwich(x, m_combined) * weights.alpha;
    }
    if weights.beta != 0.0 {
        p += sw * weights.beta;
    }
    if weights.mu != 0.0 {
        p += sandwich(x, laplacian) * weights.mu;
    }
    Ok(ObjectivePieces {
        p: symmetrize(&p),
        q: constraint_matrix(x),
        weights,
    })
}

/// Default ridge: `1e-6 · tr(Q) / d`.
pub fn default_ridge(q: &DMatrix<f64>) -> f64 {
    1e-6 * q.trace() / q.nrows() as f64
}

fn numerical_rank(q: &DMatrix<f64>) -> Result<usize> {
    let eig = SymmetricEigen::try_new(q.clone(), EIGEN_EPS, EIGEN_MAX_ITERS)
        .ok_or(EgdaError::Unconverged { residual: f64::NAN })?;
    let top = eig.eigenvalues.amax();
    if top == 0.0 {
        return Ok(0);
    }
    Ok(eig
        .eigenvalues
        .iter()
        .filter(|&&v| v > RANK_TOLERANCE * top)
        .count())
}

/// Flip each column so its first clearly nonzero entry is positive.
fn canonicalize_signs(a: &mut DMatrix<f64>) {
    for mut col in a.column_iter_mut() {
        let cutoff = col.amax() * 1e-10;
        if let Some(&first) = col.iter().find(|v| v.abs() > cutoff) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Smallest-`d_f` generalized eigenvectors of `(P, Q + εI)`, scaled so that
/// `Aᵀ(Q + εI)A = I`. `ridge = None` uses [`default_ridge`].
pub fn solve_projection(
    pieces: &ObjectivePieces,
    dim: usize,
    ridge: Option<f64>,
) -> Result<Projection> {
    let d = pieces.p.nrows();
    if pieces.p.shape() != (d, d) || pieces.q.shape() != (d, d) {
        return Err(EgdaError::shape(
            "solve_projection",
            format!("P {:?}, Q {:?}", pieces.p.shape(), pieces.q.shape()),
        ));
    }
    if dim == 0 || dim > d {
        return Err(EgdaError::InvalidParameter(format!(
            "subspace dimension must lie in 1..={d}, got {dim}"
        )));
    }
    let ridge = ridge.unwrap_or_else(|| default_ridge(&pieces.q));
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(EgdaError::InvalidParameter(format!(
            "ridge must be finite and nonnegative, got {ridge}"
        )));
    }
    let rank = numerical_rank(&pieces.q)?;
    if dim > rank {
        return Err(EgdaError::RankDeficient {
            requested: dim,
            rank,
        });
    }

    let mut q_ridged = pieces.q.clone();
    for i in 0..d {
        q_ridged[(i, i)] += ridge;
    }
    let chol = q_ridged
        .clone()
        .cholesky()
        .ok_or(EgdaError::SingularConstraint { ridge })?;
    let g = chol.l();
    let pivots = g.diagonal();
    let (lo, hi) = (pivots.min(), pivots.max());
    if !(lo > 0.0) || lo * lo < 1e-14 * hi * hi {
        return Err(EgdaError::SingularConstraint { ridge });
    }

    // C = G⁻¹ P G⁻ᵀ = G⁻¹ (G⁻¹ P)ᵀ since P is symmetric.
    let ginv_p = g
        .solve_lower_triangular(&pieces.p)
        .ok_or(EgdaError::SingularConstraint { ridge })?;
    let c = g
        .solve_lower_triangular(&ginv_p.transpose())
        .ok_or(EgdaError::SingularConstraint { ridge })?;
    let eig = SymmetricEigen::try_new(symmetrize(&c), EIGEN_EPS, EIGEN_MAX_ITERS)
        .ok_or(EgdaError::Unconverged { residual: f64::NAN })?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    order.truncate(dim);

    let selected = eig.eigenvectors.select_columns(&order);
    let mut a = g
        .transpose()
        .solve_upper_triangular(&selected)
        .ok_or(EgdaError::SingularConstraint { ridge })?;
    canonicalize_signs(&mut a);
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    let pa = &pieces.p * &a;
    let qa_phi = (&q_ridged * &a) * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&eigenvalues));
    let scale = pa.norm().max(qa_phi.norm()).max(f64::MIN_POSITIVE);
    let residual = (&pa - &qa_phi).norm() / scale;
    if !(residual < RESIDUAL_TOLERANCE) {
        return Err(EgdaError::Unconverged { residual });
    }

    Ok(Projection {
        a,
        eigenvalues,
        ridge,
    })
}

/// Value of the unified objective. `graph = None` drops the graph and similarity terms.
pub fn objective_value(
    a: &DMatrix<f64>,
    x: &DMatrix<f64>,
    m_combined: &DMatrix<f64>,
    sw: &DMatrix<f64>,
    graph: Option<(&SimilarityGraph, &Laplacian)>,
    weights: Weights,
) -> Result<f64> {
    let mut value = weights.alpha * mmd_trace(a, x, m_combined)?
        + weights.beta * scatter_trace(a, sw)?
        + weights.lambda * a.norm_squared();
    if let Some((s, l)) = graph {
        value += weights.mu * graph_trace(a, x, l)? + weights.gamma * s.frobenius_sq();
    }
    Ok(value)
}
