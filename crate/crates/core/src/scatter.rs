//! Source-domain within-class scatter.

use nalgebra::{DMatrix, DVector};

use crate::dataset::DomainDataset;
use crate::error::{EgdaError, Result};

/// `S_w = Σ_c Σ_{x ∈ c} (x − μ_c)(x − μ_c)ᵀ`, unnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterMatrix {
    pub sw: DMatrix<f64>,
}

pub fn build_sw(source: &DomainDataset) -> Result<ScatterMatrix> {
    let labels = source.labels().ok_or(EgdaError::MissingLabels)?;
    let x = source.features();
    let d = x.nrows();
    let mut sw = DMatrix::zeros(d, d);
    for c in 0..source.class_count() {
        let members: Vec<usize> = (0..labels.len()).filter(|&j| labels[j] == c).collect();
        if members.is_empty() {
            continue;
        }
        let class = x.select_columns(&members);
        let mean: DVector<f64> = class.column_mean();
        let mut centered = class;
        for mut col in centered.column_iter_mut() {
            col -= &mean;
        }
        sw.gemm(1.0, &centered, &centered.transpose(), 1.0);
    }
    // gemm on a centered block is symmetric up to rounding; make it exact.
    let sw = (&sw + sw.transpose()) * 0.5;
    Ok(ScatterMatrix { sw })
}

/// `Tr(AᵀS_wA)`.
pub fn scatter_trace(a: &DMatrix<f64>, sw: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != sw.nrows() || !sw.is_square() {
        return Err(EgdaError::shape(
            "scatter_trace",
            format!("A {}x{}, S_w {}x{}", a.nrows(), a.ncols(), sw.nrows(), sw.ncols()),
        ));
    }
    Ok((sw * a).component_mul(a).sum())
}
