//! Adaptive similarity graph and its Laplacian.
//!
//! Each row `sⁱ` of the similarity matrix solves
//!
//! ```text
//! min_{sⁱ ≥ 0, sⁱ1 = 1}  Σ_j d_ij s_ij + γ s_ij²
//! ```
//!
//! with `d_ij = ‖z_i − z_j‖²`. Completing the square turns this into the Euclidean
//! projection of `−dⁱ / 2γ` onto the probability simplex, solved exactly by sorting.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{EgdaError, Result};

/// Row-stochastic nonnegative similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    pub s: DMatrix<f64>,
    pub gamma: f64,
}

impl SimilarityGraph {
    /// `Tr(SᵀS)`, the squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        self.s.norm_squared()
    }
}

/// `L = D − (S + Sᵀ)/2`, with `D` the row sums of the symmetrized matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    pub l: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GraphOptions {
    /// Force `s_ii = 0` so each sample's weight goes to its neighbors.
    pub exclude_self: bool,
    /// Solve the row subproblems on the rayon pool. Output is identical either way.
    pub parallel: bool,
}

/// Euclidean projection onto `{u : u ≥ 0, Σu = 1}`.
pub fn project_to_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(EgdaError::InvalidParameter(
            "cannot project an empty vector onto the simplex".into(),
        ));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(EgdaError::NonFinite { row: 0, column: i });
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));

    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            threshold = t;
        } else {
            break;
        }
    }

    let mut out: Vec<f64> = v.iter().map(|&x| (x - threshold).max(0.0)).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= total);
    Ok(out)
}

fn squared_distances_from(z: &DMatrix<f64>, i: usize) -> Vec<f64> {
    let zi = z.column(i);
    z.column_iter()
        .map(|zj| zi.iter().zip(zj.iter()).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect()
}

fn similarity_row(z: &DMatrix<f64>, i: usize, gamma: f64, exclude_self: bool) -> Result<Vec<f64>> {
    let dist = squared_distances_from(z, i);
    if let Some(j) = dist.iter().position(|d| !d.is_finite()) {
        return Err(EgdaError::NonFinite { row: i, column: j });
    }
    let scale = -1.0 / (2.0 * gamma);
    if exclude_self && dist.len() > 1 {
        let others: Vec<f64> = dist
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, d)| d * scale)
            .collect();
        let mut row = project_to_simplex(&others)?;
        row.insert(i, 0.0);
        Ok(row)
    } else {
        project_to_simplex(&dist.iter().map(|d| d * scale).collect::<Vec<_>>())
    }
}

/// Learn `S` from projected samples `z` (`d_f × n`, samples as columns).
pub fn update_similarity(z: &DMatrix<f64>, gamma: f64) -> Result<SimilarityGraph> {
    update_similarity_with(z, gamma, GraphOptions::default())
}

pub fn update_similarity_with(
    z: &DMatrix<f64>,
    gamma: f64,
    options: GraphOptions,
) -> Result<SimilarityGraph> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(EgdaError::InvalidParameter("gamma must be positive".into()));
    }
    let n = z.ncols();
    let rows: Vec<Vec<f64>> = if options.parallel {
        (0..n)
            .into_par_iter()
            .map(|i| similarity_row(z, i, gamma, options.exclude_self))
            .collect::<Result<_>>()?
    } else {
        (0..n)
            .map(|i| similarity_row(z, i, gamma, options.exclude_self))
            .collect::<Result<_>>()?
    };
    Ok(SimilarityGraph {
        s: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
        gamma,
    })
}

pub fn build_laplacian(graph: &SimilarityGraph) -> Laplacian {
    let w = (&graph.s + graph.s.transpose()) * 0.5;
    let mut l = -&w;
    for (i, row) in w.row_iter().enumerate() {
        l[(i, i)] += row.sum();
    }
    Laplacian { l }
}

/// `Tr(AᵀXLXᵀA)`. For `L` built from `S` this is half of `Σ_ij s_ij ‖Aᵀx_i − Aᵀx_j‖²`.
pub fn graph_trace(a: &DMatrix<f64>, x: &DMatrix<f64>, laplacian: &Laplacian) -> Result<f64> {
    let l = &laplacian.l;
    if a.nrows() != x.nrows() || l.nrows() != x.ncols() || l.ncols() != x.ncols() {
        return Err(EgdaError::shape(
            "graph_trace",
            format!(
                "A {}x{}, X {}x{}, L {}x{}",
                a.nrows(),
                a.ncols(),
                x.nrows(),
                x.ncols(),
                l.nrows(),
                l.ncols()
            ),
        ));
    }
    let z = a.transpose() * x;
    Ok((&z * l).component_mul(&z).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn simplex_examples() {
        let u = vec![0.25; 4];
        assert!(close(&project_to_simplex(&u).unwrap(), &u, 1e-15));
        assert_eq!(project_to_simplex(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let p = project_to_simplex(&[0.9, 0.5, -0.3]).unwrap();
        assert!(close(&p, &[0.7, 0.3, 0.0], 1e-12), "{p:?}");
    }

    #[test]
    fn simplex_rejects_bad_input() {
        assert!(project_to_simplex(&[1.0, f64::NAN]).is_err());
        assert!(project_to_simplex(&[]).is_err());
    }

    #[test]
    fn simplex_large_negative_values() {
        let p = project_to_simplex(&[-1e6, -1e6 - 1.0, -1e6 - 5.0]).unwrap();
        assert!(close(&p, &[1.0, 0.0, 0.0], 1e-12), "{p:?}");
    }

    #[test]
    fn huge_gamma_gives_uniform_rows() {
        let z = dmatrix![0.0, 1.0, 3.0, -2.0];
        let g = update_similarity(&z, 1e12).unwrap();
        assert!(g.s.iter().all(|s| (s - 0.25).abs() < 1e-6));
    }

    #[test]
    fn identical_points() {
        let z = dmatrix![1.0, 1.0; 2.0, 2.0];
        let g = update_similarity(&z, 1.0).unwrap();
        assert_eq!(g.s, DMatrix::from_element(2, 2, 0.5));
    }

    #[test]
    fn colinear_points_gamma_one() {
        // Row 0: distances (0, 1, 9) → v = (0, -0.5, -4.5) → threshold -0.75 → (0.75, 0.25, 0).
        // Row 1: distances (1, 0, 4) → v = (-0.5, 0, -2) → (0.25, 0.75, 0).
        // Row 2: distances (9, 4, 0) → v = (-4.5, -2, 0) → (0, 0, 1).
        let z = dmatrix![0.0, 1.0, 3.0];
        let g = update_similarity(&z, 1.0).unwrap();
        let expected = dmatrix![0.75, 0.25, 0.0; 0.25, 0.75, 0.0; 0.0, 0.0, 1.0];
        assert!((g.s - expected).amax() < 1e-12);
    }

    #[test]
    fn exclude_self_zeroes_diagonal() {
        let z = dmatrix![0.0, 1.0, 3.0];
        let g = update_similarity_with(&z, 1.0, GraphOptions { exclude_self: true, parallel: false }).unwrap();
        for i in 0..3 {
            assert_eq!(g.s[(i, i)], 0.0);
            assert!((g.s.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_rows_match_sequential() {
        let z = DMatrix::from_fn(3, 40, |i, j| ((i * 7 + j * 13) % 11) as f64 * 0.3 - (j as f64).sin());
        let seq = update_similarity(&z, 0.7).unwrap();
        let par = update_similarity_with(&z, 0.7, GraphOptions { exclude_self: false, parallel: true }).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn gamma_must_be_positive() {
        assert!(update_similarity(&dmatrix![1.0, 2.0], 0.0).is_err());
        assert!(update_similarity(&dmatrix![1.0, 2.0], -1.0).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let g = SimilarityGraph { s: dmatrix![0.0, 1.0; 1.0, 0.0], gamma: 1.0 };
        assert_eq!(build_laplacian(&g).l, dmatrix![1.0, -1.0; -1.0, 1.0]);
        let g = SimilarityGraph { s: DMatrix::identity(3, 3), gamma: 1.0 };
        assert_eq!(build_laplacian(&g).l, DMatrix::zeros(3, 3));
    }

    #[test]
    fn trace_examples() {
        let l = build_laplacian(&SimilarityGraph { s: DMatrix::from_element(2, 2, 0.5), gamma: 1.0 });
        let x = dmatrix![1.0, 1.0; 2.0, 2.0];
        assert_eq!(graph_trace(&DMatrix::zeros(2, 1), &x, &l).unwrap(), 0.0);
        assert_eq!(graph_trace(&DMatrix::identity(2, 2), &x, &l).unwrap(), 0.0);
        assert!(graph_trace(&DMatrix::identity(3, 3), &x, &l).is_err());
    }
}
