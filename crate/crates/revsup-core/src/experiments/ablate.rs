//! One-axis-at-a-time comparisons of the optimization recipe.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::acoustics::RenderedScene;
use crate::error::{Error, Result};
use crate::ras::{FilterMode, LossCriterion};
use crate::selection::informativeness_sdr;
use crate::wiener::FilterSpec;

use super::optimize::{make_init, optimize_ras, InitKind, OptimizeConfig};

/// Which ingredient of the recipe a row flips relative to the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationAxis {
    /// Joint filter fitting instead of independent fits.
    Filter,
    /// SNR loss instead of the scale-invariant one.
    Criterion,
    /// No informativeness screening instead of the baseline threshold.
    Threshold,
}

impl AblationAxis {
    pub const ALL: [AblationAxis; 3] = [
        AblationAxis::Filter,
        AblationAxis::Criterion,
        AblationAxis::Threshold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationAxis::Filter => "filter",
            AblationAxis::Criterion => "criterion",
            AblationAxis::Threshold => "threshold",
        }
    }
}

impl fmt::Display for AblationAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AblationAxis::ALL
            .into_iter()
            .find(|axis| axis.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown ablation axis {s:?}")))
    }
}

/// Baseline recipe plus the axes to flip against it.
#[derive(Debug, Clone, Serialize)]
pub struct AblationConfig {
    pub optimizer: OptimizeConfig,
    pub init: InitKind,
    /// Scenes whose channels predict each other above this are dropped
    /// before optimization, except on the threshold row.
    pub screen_threshold_db: f64,
    /// Filter budget for the screening fit, independent of the loss budget.
    pub screen_filter: FilterSpec,
    pub axes: Vec<AblationAxis>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizeConfig::default(),
            init: InitKind::Leaky,
            screen_threshold_db: 10.0,
            screen_filter: FilterSpec::default(),
            axes: AblationAxis::ALL.to_vec(),
        }
    }
}

/// Outcome of one configuration over its scene set.
#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    /// "baseline" or the flipped axis, e.g. "filter=joint".
    pub name: String,
    pub mode: FilterMode,
    pub criterion: LossCriterion,
    /// Screening threshold in effect; `None` means every scene was used.
    pub screen_threshold_db: Option<f64>,
    /// Scenes that survived screening and optimized without error.
    pub n_scenes: usize,
    pub mean_initial_si_sdr_db: f64,
    pub mean_final_si_sdr_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn row(&self, name: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|row| row.name == name)
    }
}

/// Runs the baseline recipe and each requested single-axis flip.
///
/// All rows except the threshold flip share the screened scene subset, so
/// differences between them isolate the flipped ingredient. Scenes whose
/// optimization fails are skipped row-locally and reflected in `n_scenes`.
pub fn run_ablation(
    scenes: &[RenderedScene],
    config: &AblationConfig,
) -> Result<AblationReport> {
    if scenes.is_empty() {
        return Err(Error::InvalidArgument("no scenes to ablate".into()));
    }
    config.screen_filter.validate()?;

    let kept: Vec<usize> = scenes
        .iter()
        .enumerate()
        .filter(|(_, scene)| {
            informativeness_sdr(&scene.mixtures[0], &scene.mixtures[1], &config.screen_filter)
                .map(|sdr| sdr < config.screen_threshold_db)
                .unwrap_or(false)
        })
        .map(|(idx, _)| idx)
        .collect();
    if kept.is_empty() {
        return Err(Error::DegenerateInput(
            "screening dropped every scene".into(),
        ));
    }

    let run_subset = |indices: &[usize], optimizer: &OptimizeConfig| -> Vec<(f64, f64)> {
        indices
            .iter()
            .filter_map(|&idx| run_scene(&scenes[idx], config.init, optimizer))
            .collect()
    };

    let mut rows = Vec::new();
    let baseline_scores = run_subset(&kept, &config.optimizer);
    rows.push(make_row(
        "baseline".into(),
        &config.optimizer,
        Some(config.screen_threshold_db),
        &baseline_scores,
    )?);

    for axis in &config.axes {
        let row = match axis {
            AblationAxis::Filter => {
                let optimizer = OptimizeConfig {
                    mode: flip_mode(config.optimizer.mode),
                    ..config.optimizer.clone()
                };
                let scores = run_subset(&kept, &optimizer);
                make_row(
                    format!("filter={}", optimizer.mode.name()),
                    &optimizer,
                    Some(config.screen_threshold_db),
                    &scores,
                )?
            }
            AblationAxis::Criterion => {
                let optimizer = OptimizeConfig {
                    criterion: flip_criterion(config.optimizer.criterion),
                    ..config.optimizer.clone()
                };
                let scores = run_subset(&kept, &optimizer);
                make_row(
                    format!("criterion={}", optimizer.criterion.name()),
                    &optimizer,
                    Some(config.screen_threshold_db),
                    &scores,
                )?
            }
            AblationAxis::Threshold => {
                let all: Vec<usize> = (0..scenes.len()).collect();
                let scores = run_subset(&all, &config.optimizer);
                make_row("threshold=none".into(), &config.optimizer, None, &scores)?
            }
        };
        rows.push(row);
    }

    Ok(AblationReport { rows })
}

fn run_scene(
    scene: &RenderedScene,
    init: InitKind,
    optimizer: &OptimizeConfig,
) -> Option<(f64, f64)> {
    let start = make_init(scene, init).ok()?;
    let references = [scene.images[0][0].clone(), scene.images[1][0].clone()];
    let (trace, _) = optimize_ras(&scene.mixtures[1], &start, &references, optimizer).ok()?;
    Some((trace.initial_mean_si_sdr_db(), trace.final_mean_si_sdr_db()))
}

fn make_row(
    name: String,
    optimizer: &OptimizeConfig,
    screen_threshold_db: Option<f64>,
    scores: &[(f64, f64)],
) -> Result<AblationRow> {
    if scores.is_empty() {
        return Err(Error::DegenerateInput(format!(
            "no scene finished for row {name}"
        )));
    }
    let n = scores.len() as f64;
    Ok(AblationRow {
        name,
        mode: optimizer.mode,
        criterion: optimizer.criterion,
        screen_threshold_db,
        n_scenes: scores.len(),
        mean_initial_si_sdr_db: scores.iter().map(|(init, _)| init).sum::<f64>() / n,
        mean_final_si_sdr_db: scores.iter().map(|(_, fin)| fin).sum::<f64>() / n,
    })
}

fn flip_mode(mode: FilterMode) -> FilterMode {
    match mode {
        FilterMode::Independent => FilterMode::Joint,
        FilterMode::Joint => FilterMode::Independent,
    }
}

fn flip_criterion(criterion: LossCriterion) -> LossCriterion {
    match criterion {
        LossCriterion::SiSdr => LossCriterion::Snr,
        LossCriterion::Snr => LossCriterion::SiSdr,
    }
}

#[cfg(test)]
mod tests;
