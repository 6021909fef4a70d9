//! Linear MMD coefficient matrices over the combined `[source | target]` samples.

use nalgebra::{DMatrix, DVector};

use crate::dataset::check_labels;
use crate::error::{EgdaError, Result};

/// Marginal matrix `m0`, one conditional matrix per class, and their sum.
#[derive(Debug, Clone)]
pub struct AlignmentMatrices {
    pub m0: DMatrix<f64>,
    pub mc: Vec<DMatrix<f64>>,
    pub combined: DMatrix<f64>,
}

impl AlignmentMatrices {
    /// Marginal term only; used before any pseudo-labels exist.
    pub fn marginal(source_count: usize, target_count: usize) -> Result<Self> {
        let m0 = build_m0(source_count, target_count)?;
        Ok(Self {
            combined: m0.clone(),
            m0,
            mc: Vec::new(),
        })
    }

    pub fn with_conditional(
        source_labels: &[usize],
        target_pseudo: &[usize],
        class_count: usize,
    ) -> Result<Self> {
        let m0 = build_m0(source_labels.len(), target_pseudo.len())?;
        let mc = build_mc(source_labels, target_pseudo, class_count)?;
        let mut combined = m0.clone();
        for m in &mc {
            combined += m;
        }
        Ok(Self { m0, mc, combined })
    }
}

/// `v vᵀ` where `v` holds `1/ns` on source entries and `-1/nt` on target entries.
fn outer_coefficients(v: &DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    DMatrix::from_fn(n, n, |i, j| v[i] * v[j])
}

pub fn build_m0(source_count: usize, target_count: usize) -> Result<DMatrix<f64>> {
    if source_count == 0 || target_count == 0 {
        return Err(EgdaError::InvalidParameter(
            "both domains need at least one sample".into(),
        ));
    }
    let (ns, nt) = (source_count as f64, target_count as f64);
    let n = source_count + target_count;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        match (i < source_count, j < source_count) {
            (true, true) => 1.0 / (ns * ns),
            (false, false) => 1.0 / (nt * nt),
            _ => -1.0 / (ns * nt),
        }
    }))
}

/// One matrix per class. A class missing from either domain gets an all-zero matrix.
pub fn build_mc(
    source_labels: &[usize],
    target_pseudo: &[usize],
    class_count: usize,
) -> Result<Vec<DMatrix<f64>>> {
    check_labels(source_labels, class_count)?;
    check_labels(target_pseudo, class_count)?;
    let ns = source_labels.len();
    let n = ns + target_pseudo.len();
    Ok((0..class_count)
        .map(|c| {
            let ns_c = source_labels.iter().filter(|&&l| l == c).count();
            let nt_c = target_pseudo.iter().filter(|&&l| l == c).count();
            if ns_c == 0 || nt_c == 0 {
                return DMatrix::zeros(n, n);
            }
            let v = DVector::from_fn(n, |i, _| {
                if i < ns {
                    if source_labels[i] == c { 1.0 / ns_c as f64 } else { 0.0 }
                } else if target_pseudo[i - ns] == c {
                    -1.0 / nt_c as f64
                } else {
                    0.0
                }
            });
            outer_coefficients(&v)
        })
        .collect())
}

/// `Tr(AᵀXMXᵀA)`.
pub fn mmd_trace(a: &DMatrix<f64>, x: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != x.nrows() || m.nrows() != x.ncols() || m.ncols() != x.ncols() {
        return Err(EgdaError::shape(
            "mmd_trace",
            format!(
                "A {}x{}, X {}x{}, M {}x{}",
                a.nrows(),
                a.ncols(),
                x.nrows(),
                x.ncols(),
                m.nrows(),
                m.ncols()
            ),
        ));
    }
    let z = a.transpose() * x;
    Ok((&z * m).component_mul(&z).sum())
}
