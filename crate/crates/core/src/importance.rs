//! Feature, frequency-band and channel importance from a learned projection.
//!
//! Feature `i` scores the ℓ2 norm of row `i` of `A`, normalized to sum to one. With a
//! band × channel layout the scores fold into per-band and per-channel totals.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureLayout;
use crate::error::{EgdaError, Result};

/// 62-electrode 10–20 montage, one name per line, in feature order.
pub const SEED_IV_CHANNELS: &str = include_str!("../data/seed_iv_channels.txt");

pub const BAND_NAMES: [&str; 5] = ["Delta", "Theta", "Alpha", "Beta", "Gamma"];

pub fn default_channel_names() -> Vec<String> {
    SEED_IV_CHANNELS.lines().map(str::to_owned).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceProfile {
    pub theta: Vec<f64>,
    pub band: Vec<f64>,
    pub channel: Vec<f64>,
}

impl ImportanceProfile {
    pub fn from_projection(a: &DMatrix<f64>, layout: &FeatureLayout) -> Result<Self> {
        let theta = feature_importance(a)?;
        Ok(Self {
            band: band_importance(&theta, layout)?,
            channel: channel_importance(&theta, layout)?,
            theta,
        })
    }

    /// Uniform mean over several runs, e.g. the session pairs of one subject.
    pub fn average(profiles: &[ImportanceProfile]) -> Result<Self> {
        let first = profiles
            .first()
            .ok_or_else(|| EgdaError::InvalidParameter("no profiles to average".into()))?;
        let mean = |pick: fn(&ImportanceProfile) -> &Vec<f64>| -> Result<Vec<f64>> {
            let len = pick(first).len();
            let mut acc = vec![0.0; len];
            for p in profiles {
                if pick(p).len() != len {
                    return Err(EgdaError::Layout("profiles have different lengths".into()));
                }
                acc.iter_mut().zip(pick(p)).for_each(|(a, v)| *a += v);
            }
            acc.iter_mut().for_each(|a| *a /= profiles.len() as f64);
            Ok(acc)
        };
        Ok(Self {
            theta: mean(|p| &p.theta)?,
            band: mean(|p| &p.band)?,
            channel: mean(|p| &p.channel)?,
        })
    }
}

pub fn feature_importance(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let norms: Vec<f64> = a.row_iter().map(|r| r.norm()).collect();
    let total: f64 = norms.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(EgdaError::ZeroProjection);
    }
    Ok(norms.into_iter().map(|v| v / total).collect())
}

pub fn band_importance(theta: &[f64], layout: &FeatureLayout) -> Result<Vec<f64>> {
    layout.check(theta.len())?;
    Ok((0..layout.band_count)
        .map(|b| (0..layout.channel_count).map(|c| theta[layout.index(b, c)]).sum())
        .collect())
}

pub fn channel_importance(theta: &[f64], layout: &FeatureLayout) -> Result<Vec<f64>> {
    layout.check(theta.len())?;
    Ok((0..layout.channel_count)
        .map(|c| (0..layout.band_count).map(|b| theta[layout.index(b, c)]).sum())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub rank: usize,
    pub name: String,
    pub score: f64,
}

/// Rank arbitrary scores descending; ties keep index order.
pub fn rank_scores(scores: &[f64], names: &[String], top_k: usize) -> Result<Vec<RankedEntry>> {
    if names.len() != scores.len() {
        return Err(EgdaError::Layout(format!(
            "{} names for {} scores",
            names.len(),
            scores.len()
        )));
    }
    if top_k > scores.len() {
        return Err(EgdaError::InvalidParameter(format!(
            "top_k {top_k} exceeds {} entries",
            scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    Ok(order
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(r, i)| RankedEntry {
            rank: r + 1,
            name: names[i].clone(),
            score: scores[i],
        })
        .collect())
}

/// Top-`k` channels of a profile. Without names, the bundled montage is used when it
/// fits and `ch{k}` labels otherwise.
pub fn rank_report(
    profile: &ImportanceProfile,
    channel_names: Option<&[String]>,
    top_k: usize,
) -> Result<Vec<RankedEntry>> {
    let q = profile.channel.len();
    let names = match channel_names {
        Some(names) => names.to_vec(),
        None => {
            let bundled = default_channel_names();
            if bundled.len() == q {
                bundled
            } else {
                (0..q).map(|k| format!("ch{k}")).collect()
            }
        }
    };
    rank_scores(&profile.channel, &names, top_k)
}

/// `%g`-style rendering with `digits` significant digits.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// CSV with header `rank,name,score`, scores to 6 significant digits.
pub fn write_rank_csv(path: &Path, rows: &[RankedEntry]) -> Result<()> {
    let mut out = String::from("rank,name,score\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.rank, r.name, format_significant(r.score, 6)));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| EgdaError::io(path, e))
}
