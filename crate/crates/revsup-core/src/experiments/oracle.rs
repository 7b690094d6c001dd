//! Predictability ceilings for different levels of access to a scene.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acoustics::RenderedScene;
use crate::error::{Error, Result};
use crate::metrics;
use crate::wiener::{
    apply_filter, fit_independent, fit_wiener, reconstruct, EstimatePair, FilterSpec,
};

/// What the predictor is allowed to see when estimating the right channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// The left mixture alone, through a single filter.
    Mixture,
    /// Per-source reverberant images at the left mic, one filter each.
    ReverberantImages,
    /// The dry source signals, one filter each.
    DrySources,
    /// Direct-path-only signals at the left mic, one filter each.
    DirectPaths,
}

impl InputKind {
    pub const ALL: [InputKind; 4] = [
        InputKind::Mixture,
        InputKind::ReverberantImages,
        InputKind::DrySources,
        InputKind::DirectPaths,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InputKind::Mixture => "mixture",
            InputKind::ReverberantImages => "reverberant_images",
            InputKind::DrySources => "dry_sources",
            InputKind::DirectPaths => "direct_paths",
        }
    }
}

impl fmt::Display for InputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InputKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InputKind::ALL
            .into_iter()
            .find(|kind| kind.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown input kind {s:?}")))
    }
}

/// Prediction quality for one input kind across a scene batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleRow {
    pub input_kind: InputKind,
    pub mean_sdr_db: f64,
    /// Scene-by-scene scores, aligned across all rows of the report.
    pub per_scene_sdr_db: Vec<f64>,
}

/// One row per input kind, each row covering the same surviving scenes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub n_scenes: usize,
    pub rows: Vec<OracleRow>,
}

impl OracleReport {
    /// Row for one input kind; present for every kind in a valid report.
    pub fn row(&self, kind: InputKind) -> &OracleRow {
        self.rows
            .iter()
            .find(|row| row.input_kind == kind)
            .expect("reports carry all input kinds")
    }
}

/// Scores how well each input kind predicts the right-channel mixture.
///
/// Every kind is fit on the same filter budget and scored with the SNR-style
/// ratio against the true right mixture. A scene where any kind fails to
/// score is dropped from all rows, so the rows stay comparable.
pub fn run_oracle(scenes: &[RenderedScene], spec: &FilterSpec) -> Result<OracleReport> {
    spec.validate()?;
    if scenes.is_empty() {
        return Err(Error::InvalidArgument("no scenes to evaluate".into()));
    }

    let mut per_kind: [Vec<f64>; 4] = Default::default();
    for scene in scenes {
        let Ok(scores) = score_scene(scene, spec) else {
            continue;
        };
        for (column, score) in per_kind.iter_mut().zip(scores) {
            column.push(score);
        }
    }
    let n_scenes = per_kind[0].len();
    if n_scenes == 0 {
        return Err(Error::DegenerateInput(
            "every scene failed to score".into(),
        ));
    }

    let rows = InputKind::ALL
        .into_iter()
        .zip(per_kind)
        .map(|(input_kind, per_scene_sdr_db)| OracleRow {
            input_kind,
            mean_sdr_db: per_scene_sdr_db.iter().sum::<f64>() / n_scenes as f64,
            per_scene_sdr_db,
        })
        .collect();
    Ok(OracleReport { n_scenes, rows })
}

fn score_scene(scene: &RenderedScene, spec: &FilterSpec) -> Result<[f64; 4]> {
    if scene.dry.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "oracle scoring expects two sources, got {}",
            scene.dry.len()
        )));
    }
    let target = &scene.mixtures[1];

    let single = fit_wiener(&scene.mixtures[0], target, spec)?;
    let mixture = metrics::snr(target, &apply_filter(&single, &scene.mixtures[0]))?;

    let score_pair = |first: &crate::audio::AudioBuffer,
                      second: &crate::audio::AudioBuffer|
     -> Result<f64> {
        let pair = EstimatePair::new(first.clone(), second.clone())?;
        let filters = fit_independent(&pair, target, spec)?;
        metrics::snr(target, &reconstruct(&pair, &filters)?)
    };

    let images = score_pair(&scene.images[0][0], &scene.images[1][0])?;
    let dry = score_pair(&scene.dry[0], &scene.dry[1])?;
    let direct = score_pair(&scene.directs[0][0], &scene.directs[1][0])?;

    Ok([mixture, images, dry, direct])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::{render_scene, SceneSpec};
    use crate::audio::AudioBuffer;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn white(seed: u64, len: usize) -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioBuffer::new(
            (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
            8000,
        )
        .unwrap()
    }

    fn small_scene(seed: u64) -> RenderedScene {
        let spec = SceneSpec {
            room_dims: [6.0, 5.0, 3.0],
            source_positions: vec![[2.0, 2.0, 1.5], [4.0, 3.2, 1.4]],
            mic_positions: vec![[3.0, 2.5, 1.5], [3.16, 2.5, 1.5]],
            absorption: 0.4,
            max_image_order: 10,
            speed_of_sound: 343.0,
            sample_rate: 8000,
            rir_length: 512,
        };
        render_scene(&spec, &[white(seed, 4000), white(seed + 100, 4000)]).unwrap()
    }

    #[test]
    fn report_covers_all_kinds_with_aligned_columns() {
        let scenes = vec![small_scene(1), small_scene(2), small_scene(3)];
        let report = run_oracle(&scenes, &FilterSpec::default()).unwrap();
        assert_eq!(report.n_scenes, 3);
        assert_eq!(report.rows.len(), 4);
        for row in &report.rows {
            assert_eq!(row.per_scene_sdr_db.len(), 3);
            let mean = row.per_scene_sdr_db.iter().sum::<f64>() / 3.0;
            assert!(
                (row.mean_sdr_db - mean).abs() < 1e-9,
                "{} mean must equal the average of its column",
                row.input_kind
            );
        }
    }

    #[test]
    fn separated_access_beats_the_mixture_alone() {
        let scenes = vec![small_scene(11), small_scene(12)];
        let report = run_oracle(&scenes, &FilterSpec::default()).unwrap();
        let mixture = report.row(InputKind::Mixture).mean_sdr_db;
        let images = report.row(InputKind::ReverberantImages).mean_sdr_db;
        assert!(
            images > mixture,
            "per-source access should predict better: {images:.2} vs {mixture:.2} dB"
        );
    }

    #[test]
    fn a_scene_that_fails_is_dropped_from_every_row() {
        let mut broken = small_scene(21);
        for v in &mut broken.mixtures[0].samples {
            *v = 0.0;
        }

        let scenes = vec![small_scene(22), broken];
        let report = run_oracle(&scenes, &FilterSpec::default()).unwrap();
        assert_eq!(
            report.n_scenes, 1,
            "the zeroed scene must vanish from all rows"
        );
        for row in &report.rows {
            assert_eq!(row.per_scene_sdr_db.len(), 1);
        }
    }

    #[test]
    fn empty_batch_is_rejected() {
        assert!(run_oracle(&[], &FilterSpec::default()).is_err());
    }

    #[test]
    fn input_kind_names_round_trip() {
        for kind in InputKind::ALL {
            assert_eq!(kind.name().parse::<InputKind>().unwrap(), kind);
        }
        assert!("direct".parse::<InputKind>().is_err());
    }
}
