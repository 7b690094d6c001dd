//! Screening stereo pairs by how well one channel predicts the other.
//!
//! A pair is informative for training when the left channel does a poor
//! job of explaining the right channel through a single short filter:
//! whatever the filter cannot absorb is exactly the spatial diversity a
//! separation model can exploit. Pairs whose channels are near copies of
//! each other score close to the ceiling and are dropped.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::metrics;
use crate::wav::read_wav;
use crate::wiener::{apply_filter, fit_wiener, FilterSpec};

/// Fits one filter from `left` to `right` and scores the fit in dB.
///
/// The score is the SNR-style distortion ratio of the prediction against
/// the actual right channel, so a pair of identical channels lands at the
/// metric ceiling and uncorrelated channels land near or below zero.
pub fn informativeness_sdr(
    left: &AudioBuffer,
    right: &AudioBuffer,
    spec: &FilterSpec,
) -> Result<f64> {
    if left.sample_rate != right.sample_rate {
        return Err(Error::InvalidArgument(format!(
            "channel sample rates differ: {} vs {}",
            left.sample_rate, right.sample_rate
        )));
    }
    let filter = fit_wiener(left, right, spec)?;
    let prediction = apply_filter(&filter, left);
    metrics::snr(right, &prediction)
}

/// Which fit direction feeds the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScoreDirection {
    /// Fit left to right only.
    #[default]
    LeftToRight,
    /// Fit both directions and keep the pessimistic (minimum) score.
    MinBoth,
}

impl FromStr for ScoreDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left_to_right" => Ok(Self::LeftToRight),
            "min_both" => Ok(Self::MinBoth),
            other => Err(Error::InvalidArgument(format!(
                "unknown score direction {other:?}, expected left_to_right or min_both"
            ))),
        }
    }
}

impl fmt::Display for ScoreDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LeftToRight => f.write_str("left_to_right"),
            Self::MinBoth => f.write_str("min_both"),
        }
    }
}

/// A stereo pair held in memory, labelled for reporting.
#[derive(Debug, Clone)]
pub struct LabeledPair {
    pub id: String,
    pub left: AudioBuffer,
    pub right: AudioBuffer,
}

/// One line of a pair manifest on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestPair {
    pub id: String,
    #[serde(rename = "path_L")]
    pub path_l: PathBuf,
    #[serde(rename = "path_R")]
    pub path_r: PathBuf,
}

/// Score and verdict for one successfully processed pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemScore {
    pub id: String,
    pub sdr_db: f64,
    /// Right-to-left score, present only under [`ScoreDirection::MinBoth`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reverse_sdr_db: Option<f64>,
    pub keep: bool,
}

/// A pair that could not be scored, with the reason it failed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemFailure {
    pub id: String,
    pub error: String,
}

/// Full outcome of screening a batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    pub threshold_db: f64,
    pub direction: ScoreDirection,
    /// Scored pairs in ascending id order.
    pub items: Vec<ItemScore>,
    /// Pairs that errored out, in ascending id order.
    pub failures: Vec<ItemFailure>,
    /// Scores of all successful pairs, ascending.
    pub sorted_sdr_db: Vec<f64>,
    /// Empirical distribution over `sorted_sdr_db`; entry i is (i + 1) / n.
    pub cdf: Vec<f64>,
}

impl SelectionReport {
    /// Ids of the pairs that passed the threshold, in report order.
    pub fn kept_ids(&self) -> Vec<&str> {
        self.items
            .iter()
            .filter(|item| item.keep)
            .map(|item| item.id.as_str())
            .collect()
    }
}

/// Scores every pair and keeps the ones below the threshold.
///
/// A pair that fails to score (silent channel, unreadable file upstream)
/// is recorded under `failures` instead of aborting the batch. Output
/// ordering is by id regardless of input order, so reports are stable.
pub fn select(
    pairs: &[LabeledPair],
    threshold_db: f64,
    spec: &FilterSpec,
    direction: ScoreDirection,
) -> Result<SelectionReport> {
    if threshold_db.is_nan() {
        return Err(Error::InvalidArgument(
            "selection threshold must not be NaN".into(),
        ));
    }
    spec.validate()?;

    let mut items = Vec::new();
    let mut failures = Vec::new();
    for pair in pairs {
        match score_pair(pair, spec, direction) {
            Ok((sdr_db, reverse_sdr_db)) => items.push(ItemScore {
                id: pair.id.clone(),
                sdr_db,
                reverse_sdr_db,
                keep: sdr_db < threshold_db,
            }),
            Err(err) => failures.push(ItemFailure {
                id: pair.id.clone(),
                error: err.to_string(),
            }),
        }
    }
    items.sort_by(|a, b| a.id.cmp(&b.id));
    failures.sort_by(|a, b| a.id.cmp(&b.id));

    let mut sorted_sdr_db: Vec<f64> = items.iter().map(|item| item.sdr_db).collect();
    sorted_sdr_db.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    let n = sorted_sdr_db.len();
    let cdf: Vec<f64> = (0..n).map(|i| (i + 1) as f64 / n as f64).collect();

    Ok(SelectionReport {
        threshold_db,
        direction,
        items,
        failures,
        sorted_sdr_db,
        cdf,
    })
}

fn score_pair(
    pair: &LabeledPair,
    spec: &FilterSpec,
    direction: ScoreDirection,
) -> Result<(f64, Option<f64>)> {
    let forward = informativeness_sdr(&pair.left, &pair.right, spec)?;
    match direction {
        ScoreDirection::LeftToRight => Ok((forward, None)),
        ScoreDirection::MinBoth => {
            let backward = informativeness_sdr(&pair.right, &pair.left, spec)?;
            Ok((forward.min(backward), Some(backward)))
        }
    }
}

/// Reads a JSON manifest of stereo pairs and screens them from disk.
///
/// Relative audio paths are resolved against the manifest's directory.
/// A pair whose files cannot be read is logged as a failure like any
/// other per-item error.
pub fn select_from_manifest(
    manifest_path: &Path,
    threshold_db: f64,
    spec: &FilterSpec,
    direction: ScoreDirection,
) -> Result<SelectionReport> {
    let file = File::open(manifest_path)?;
    let entries: Vec<ManifestPair> = serde_json::from_reader(BufReader::new(file))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut pairs = Vec::new();
    let mut failures = Vec::new();
    for entry in &entries {
        match load_pair(base, entry) {
            Ok(pair) => pairs.push(pair),
            Err(err) => failures.push(ItemFailure {
                id: entry.id.clone(),
                error: err.to_string(),
            }),
        }
    }

    let mut report = select(&pairs, threshold_db, spec, direction)?;
    report.failures.extend(failures);
    report.failures.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(report)
}

fn load_pair(base: &Path, entry: &ManifestPair) -> Result<LabeledPair> {
    let resolve = |p: &Path| {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    Ok(LabeledPair {
        id: entry.id.clone(),
        left: read_wav(&resolve(&entry.path_l))?,
        right: read_wav(&resolve(&entry.path_r))?,
    })
}

/// Writes per-pair scores as CSV with columns id, sdr_db, keep.
pub fn write_selection_csv(report: &SelectionReport, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["id", "sdr_db", "keep"])?;
    for item in &report.items {
        writer.write_record([
            item.id.as_str(),
            &format!("{:.6}", item.sdr_db),
            if item.keep { "true" } else { "false" },
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the score distribution as CSV with columns sdr_db, cdf.
pub fn write_cdf_csv(report: &SelectionReport, path: &Path) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    writeln!(writer, "sdr_db,cdf")?;
    for (sdr, cdf) in report.sorted_sdr_db.iter().zip(&report.cdf) {
        writeln!(writer, "{sdr:.6},{cdf:.6}")?;
    }
    writer.flush()?;
    Ok(())
}
