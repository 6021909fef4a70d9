//! Domain data containers, feature/label file IO, standardization and a synthetic
//! cross-session shift generator.
//!
//! Feature files are either CSV (one sample per line, `d` comma-separated fields) or
//! a little-endian binary blob: the magic `EGDA`, `u32` d, `u32` n, then `d × n`
//! `f64` values in column-major order. The format is detected from the magic bytes
//! on read and from the `.bin` extension on write.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{EgdaError, Result};

const BINARY_MAGIC: &[u8; 4] = b"EGDA";

/// Distance of each synthetic class mean from the origin along its own axis.
const SYNTHETIC_SEPARATION: f64 = 4.0;

/// Features of one domain, `d × n` with samples as columns, plus optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDataset {
    features: DMatrix<f64>,
    labels: Option<Vec<usize>>,
    class_count: usize,
}

impl DomainDataset {
    pub fn new(
        features: DMatrix<f64>,
        labels: Option<Vec<usize>>,
        class_count: usize,
    ) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(EgdaError::DimensionMismatch(format!(
                "feature matrix must be non-empty, got {}x{}",
                features.nrows(),
                features.ncols()
            )));
        }
        if class_count == 0 {
            return Err(EgdaError::InvalidParameter(
                "class count must be positive".into(),
            ));
        }
        check_finite(&features)?;
        if let Some(labels) = &labels {
            if labels.len() != features.ncols() {
                return Err(EgdaError::LabelCountMismatch {
                    expected: features.ncols(),
                    found: labels.len(),
                });
            }
            check_labels(labels, class_count)?;
        }
        Ok(Self {
            features,
            labels,
            class_count,
        })
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn dims(&self) -> usize {
        self.features.nrows()
    }

    pub fn len(&self) -> usize {
        self.features.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.features.ncols() == 0
    }

    /// Same features with labels removed.
    pub fn without_labels(&self) -> Self {
        Self {
            features: self.features.clone(),
            labels: None,
            class_count: self.class_count,
        }
    }

    pub fn save(&self, features_path: &Path, labels_path: Option<&Path>) -> Result<()> {
        write_features(features_path, &self.features)?;
        if let (Some(path), Some(labels)) = (labels_path, &self.labels) {
            write_labels(path, labels)?;
        }
        Ok(())
    }
}

pub(crate) fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    for (column, col) in m.column_iter().enumerate() {
        if let Some(row) = col.iter().position(|v| !v.is_finite()) {
            return Err(EgdaError::NonFinite { row, column });
        }
    }
    Ok(())
}

pub(crate) fn check_labels(labels: &[usize], class_count: usize) -> Result<()> {
    match labels.iter().position(|&l| l >= class_count) {
        Some(position) => Err(EgdaError::LabelOutOfRange {
            position,
            label: labels[position],
            classes: class_count,
        }),
        None => Ok(()),
    }
}

/// Source and target features side by side, source columns first.
#[derive(Debug, Clone)]
pub struct CombinedData {
    pub features: DMatrix<f64>,
    pub source_count: usize,
    pub target_count: usize,
}

impl CombinedData {
    pub fn new(source: &DomainDataset, target: &DomainDataset) -> Result<Self> {
        if source.dims() != target.dims() {
            return Err(EgdaError::DimensionMismatch(format!(
                "source has {} features, target has {}",
                source.dims(),
                target.dims()
            )));
        }
        let (ns, nt) = (source.len(), target.len());
        let mut features = DMatrix::zeros(source.dims(), ns + nt);
        features.columns_mut(0, ns).copy_from(source.features());
        features.columns_mut(ns, nt).copy_from(target.features());
        Ok(Self {
            features,
            source_count: ns,
            target_count: nt,
        })
    }

    pub fn len(&self) -> usize {
        self.source_count + self.target_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureOrdering {
    /// All channels of band 0, then all channels of band 1, and so on.
    #[default]
    BandMajor,
    /// All bands of channel 0, then all bands of channel 1, and so on.
    ChannelMajor,
}

/// How the feature vector decomposes into frequency bands × EEG channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub band_count: usize,
    pub channel_count: usize,
    pub ordering: FeatureOrdering,
}

impl Default for FeatureLayout {
    fn default() -> Self {
        Self {
            band_count: 5,
            channel_count: 62,
            ordering: FeatureOrdering::BandMajor,
        }
    }
}

impl FeatureLayout {
    pub fn dims(&self) -> usize {
        self.band_count * self.channel_count
    }

    /// Position of `(band, channel)` in the raw feature vector.
    pub fn index(&self, band: usize, channel: usize) -> usize {
        match self.ordering {
            FeatureOrdering::BandMajor => band * self.channel_count + channel,
            FeatureOrdering::ChannelMajor => channel * self.band_count + band,
        }
    }

    pub fn check(&self, d: usize) -> Result<()> {
        if self.band_count == 0 || self.channel_count == 0 || self.dims() != d {
            return Err(EgdaError::Layout(format!(
                "{} bands x {} channels does not cover {} features",
                self.band_count, self.channel_count, d
            )));
        }
        Ok(())
    }
}

/// Load a feature file and, optionally, a label file.
pub fn load_dataset(
    features_path: &Path,
    labels_path: Option<&Path>,
    class_count: usize,
) -> Result<DomainDataset> {
    let features = read_features(features_path)?;
    let labels = labels_path.map(read_labels).transpose()?;
    DomainDataset::new(features, labels, class_count)
}

pub fn read_features(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| EgdaError::io(path, e))?;
    if bytes.starts_with(BINARY_MAGIC) {
        decode_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| EgdaError::DimensionMismatch(format!("{} is not UTF-8 CSV", path.display())))?;
        parse_csv(&text)
    }
}

fn decode_binary(bytes: &[u8]) -> Result<DMatrix<f64>> {
    let header = |at: usize| -> Result<usize> {
        let raw: [u8; 4] = bytes
            .get(at..at + 4)
            .and_then(|s| s.try_into().ok())
            .ok_or_else(|| EgdaError::DimensionMismatch("truncated binary header".into()))?;
        Ok(u32::from_le_bytes(raw) as usize)
    };
    let d = header(4)?;
    let n = header(8)?;
    let body = &bytes[12..];
    if body.len() != d * n * 8 {
        return Err(EgdaError::DimensionMismatch(format!(
            "binary payload holds {} bytes, header declares {}x{} doubles",
            body.len(),
            d,
            n
        )));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let m = DMatrix::from_vec(d, n, values);
    check_finite(&m)?;
    Ok(m)
}

fn parse_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut columns: Vec<f64> = Vec::new();
    let mut d = None;
    let mut n = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut width = 0;
        for (field, raw) in line.split(',').enumerate() {
            let raw = raw.trim();
            let value: f64 = raw.parse().map_err(|_| EgdaError::Parse {
                line: lineno + 1,
                field: field + 1,
                message: format!("cannot parse {raw:?} as a number"),
            })?;
            if !value.is_finite() {
                return Err(EgdaError::NonFinite {
                    row: field,
                    column: n,
                });
            }
            columns.push(value);
            width += 1;
        }
        match d {
            None => d = Some(width),
            Some(expected) if expected != width => {
                return Err(EgdaError::DimensionMismatch(format!(
                    "line {} has {} fields, expected {}",
                    lineno + 1,
                    width,
                    expected
                )))
            }
            Some(_) => {}
        }
        n += 1;
    }
    let d = d.ok_or_else(|| EgdaError::DimensionMismatch("feature file is empty".into()))?;
    Ok(DMatrix::from_vec(d, n, columns))
}

/// Write a feature matrix; `.bin` paths get the binary format, everything else CSV.
pub fn write_features(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let bytes = if path.extension().is_some_and(|e| e == "bin") {
        encode_binary(m)?
    } else {
        encode_csv(m)
    };
    fs::write(path, bytes).map_err(|e| EgdaError::io(path, e))
}

fn encode_binary(m: &DMatrix<f64>) -> Result<Vec<u8>> {
    let dim = |v: usize| {
        u32::try_from(v)
            .map_err(|_| EgdaError::DimensionMismatch(format!("{v} does not fit the u32 header")))
    };
    let mut out = Vec::with_capacity(12 + m.len() * 8);
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&dim(m.nrows())?.to_le_bytes());
    out.extend_from_slice(&dim(m.ncols())?.to_le_bytes());
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn encode_csv(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::new();
    for col in m.column_iter() {
        let line: Vec<String> = col.iter().map(|v| v.to_string()).collect();
        out.extend_from_slice(line.join(",").as_bytes());
        out.push(b'\n');
    }
    out
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let file = fs::File::open(path).map_err(|e| EgdaError::io(path, e))?;
    let mut labels = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| EgdaError::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        labels.push(line.parse().map_err(|_| EgdaError::Parse {
            line: lineno + 1,
            field: 1,
            message: format!("cannot parse {line:?} as a class label"),
        })?);
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| EgdaError::io(path, e))?;
    let mut text = String::with_capacity(labels.len() * 2);
    for l in labels {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    file.write_all(text.as_bytes())
        .map_err(|e| EgdaError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum StandardizeMode {
    None,
    /// Per-feature z-score over the union of both domains.
    #[default]
    ZscoreJoint,
    /// Scale every sample to unit Euclidean norm.
    UnitColumn,
}

pub fn standardize(
    source: &DomainDataset,
    target: &DomainDataset,
    mode: StandardizeMode,
) -> Result<(DomainDataset, DomainDataset)> {
    if source.dims() != target.dims() {
        return Err(EgdaError::DimensionMismatch(format!(
            "source has {} features, target has {}",
            source.dims(),
            target.dims()
        )));
    }
    let (mut xs, mut xt) = (source.features.clone(), target.features.clone());
    match mode {
        StandardizeMode::None => {}
        StandardizeMode::ZscoreJoint => {
            let n = (xs.ncols() + xt.ncols()) as f64;
            for r in 0..xs.nrows() {
                let values: Vec<f64> = xs.row(r).iter().chain(xt.row(r).iter()).copied().collect();
                if values.iter().all(|&v| v == values[0]) {
                    continue;
                }
                let mean = values.iter().sum::<f64>() / n;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                let std = var.sqrt();
                xs.row_mut(r).apply(|v| *v = (*v - mean) / std);
                xt.row_mut(r).apply(|v| *v = (*v - mean) / std);
            }
        }
        StandardizeMode::UnitColumn => {
            for m in [&mut xs, &mut xt] {
                for mut col in m.column_iter_mut() {
                    let norm = col.norm();
                    if norm > 0.0 {
                        col /= norm;
                    }
                }
            }
        }
    }
    Ok((
        DomainDataset {
            features: xs,
            ..source.clone()
        },
        DomainDataset {
            features: xt,
            ..target.clone()
        },
    ))
}

/// Parameters of the synthetic two-session problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub class_count: usize,
    pub dims: usize,
    pub per_class: usize,
    /// Translation applied to every target sample, length `dims`.
    pub shift: Vec<f64>,
    /// Rotation of the target in the plane of the first two coordinates, radians.
    pub rotation_angle: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Shift of Euclidean norm `magnitude` spread evenly over all coordinates.
    pub fn uniform_shift(dims: usize, magnitude: f64) -> Vec<f64> {
        vec![magnitude / (dims as f64).sqrt(); dims]
    }
}

/// Class `c` sits on coordinate axis `c mod d`, pushed further out for every wrap.
fn synthetic_mean(class: usize, dims: usize) -> DVector<f64> {
    let mut mean = DVector::zeros(dims);
    mean[class % dims] = SYNTHETIC_SEPARATION * (1 + class / dims) as f64;
    mean
}

/// Source: `C` unit-covariance Gaussian clusters with `m` samples each. Target: fresh
/// draws from the same clusters, rotated on the first two coordinates and shifted.
/// Both carry ground-truth labels; samples are ordered class by class.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(DomainDataset, DomainDataset)> {
    if spec.class_count < 2 {
        return Err(EgdaError::InvalidParameter("synthetic data needs at least 2 classes".into()));
    }
    if spec.per_class < 2 {
        return Err(EgdaError::InvalidParameter(
            "synthetic data needs at least 2 samples per class".into(),
        ));
    }
    if spec.dims == 0 {
        return Err(EgdaError::InvalidParameter("dims must be positive".into()));
    }
    if spec.shift.len() != spec.dims {
        return Err(EgdaError::DimensionMismatch(format!(
            "shift has length {}, expected {}",
            spec.shift.len(),
            spec.dims
        )));
    }
    if spec.dims < 2 && spec.rotation_angle != 0.0 {
        return Err(EgdaError::InvalidParameter(
            "rotation needs at least 2 dimensions".into(),
        ));
    }
    if !spec.rotation_angle.is_finite() || spec.shift.iter().any(|v| !v.is_finite()) {
        return Err(EgdaError::InvalidParameter("shift and angle must be finite".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.class_count * spec.per_class;
    let labels: Vec<usize> = (0..spec.class_count)
        .flat_map(|c| std::iter::repeat_n(c, spec.per_class))
        .collect();

    let draw = |rng: &mut ChaCha8Rng| {
        DMatrix::from_fn(spec.dims, n, |_, _| StandardNormal.sample(rng))
            + DMatrix::from_fn(spec.dims, n, |r, j| {
                synthetic_mean(labels[j], spec.dims)[r]
            })
    };
    let source = draw(&mut rng);
    let mut target: DMatrix<f64> = draw(&mut rng);

    let (sin, cos) = spec.rotation_angle.sin_cos();
    for mut col in target.column_iter_mut() {
        if spec.dims >= 2 {
            let (x, y) = (col[0], col[1]);
            col[0] = cos * x - sin * y;
            col[1] = sin * x + cos * y;
        }
        for (v, s) in col.iter_mut().zip(&spec.shift) {
            *v += s;
        }
    }

    Ok((
        DomainDataset::new(source, Some(labels.clone()), spec.class_count)?,
        DomainDataset::new(target, Some(labels), spec.class_count)?,
    ))
}
