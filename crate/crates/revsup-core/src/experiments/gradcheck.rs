//! Finite-difference audit of the analytic loss gradients.

use serde::{Deserialize, Serialize};

use crate::acoustics::{simulate_scene, SceneSampler, SourceKind};
use crate::error::{Error, Result};
use crate::ras::{ras_loss, FilterMode, LossCriterion, RasOptions};
use crate::wiener::{EstimatePair, FilterSpec};

/// Central-difference step in waveform units.
pub const FD_STEP: f64 = 1e-5;
/// Largest acceptable relative L2 error between analytic and numeric.
pub const FD_TOLERANCE: f64 = 1e-4;

const SIGNAL_LEN: usize = 2000;
const N_PROBE_COORDS: usize = 96;

/// One audited mode and criterion combination on one sampled scene.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradCheckCase {
    pub mode: FilterMode,
    pub criterion: LossCriterion,
    pub seed: u64,
    pub relative_l2: f64,
}

/// Results over all combinations, with the worst case pulled out.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub fd_step: f64,
    pub tolerance: f64,
    pub probed_coords: usize,
    pub cases: Vec<GradCheckCase>,
    pub max_relative_l2: f64,
    pub passed: bool,
}

/// Audits every mode and criterion combination on seeded white-noise scenes.
///
/// Each case renders a small room excited by white sources, takes the true
/// left images as estimates and the right mixture as the target, and
/// compares the analytic gradient against central differences on an even
/// stride of waveform coordinates.
pub fn run_grad_check(base_seed: u64, seeds_per_combo: usize) -> Result<GradCheckReport> {
    if seeds_per_combo == 0 {
        return Err(Error::InvalidArgument(
            "need at least one seed per combination".into(),
        ));
    }

    let combos = [
        (FilterMode::Independent, LossCriterion::SiSdr),
        (FilterMode::Independent, LossCriterion::Snr),
        (FilterMode::Joint, LossCriterion::SiSdr),
        (FilterMode::Joint, LossCriterion::Snr),
    ];
    let mut cases = Vec::with_capacity(combos.len() * seeds_per_combo);
    for (mode, criterion) in combos {
        for offset in 0..seeds_per_combo {
            let seed = base_seed
                .wrapping_add(offset as u64)
                .wrapping_add(match (mode, criterion) {
                    (FilterMode::Independent, LossCriterion::SiSdr) => 0,
                    (FilterMode::Independent, LossCriterion::Snr) => 10_000,
                    (FilterMode::Joint, LossCriterion::SiSdr) => 20_000,
                    (FilterMode::Joint, LossCriterion::Snr) => 30_000,
                });
            let relative_l2 = check_one(mode, criterion, seed)?;
            cases.push(GradCheckCase {
                mode,
                criterion,
                seed,
                relative_l2,
            });
        }
    }

    let max_relative_l2 = cases
        .iter()
        .map(|case| case.relative_l2)
        .fold(0.0, f64::max);
    Ok(GradCheckReport {
        fd_step: FD_STEP,
        tolerance: FD_TOLERANCE,
        probed_coords: N_PROBE_COORDS,
        max_relative_l2,
        passed: max_relative_l2 <= FD_TOLERANCE,
        cases,
    })
}

fn check_one(mode: FilterMode, criterion: LossCriterion, seed: u64) -> Result<f64> {
    let mut config = SceneSampler::new(seed).sample();
    // Short responses keep the rendering cheap without changing what the
    // gradient has to get right.
    config.spec.rir_length = 512;
    config.spec.max_image_order = 12;
    let scene = simulate_scene(
        &config,
        &[SourceKind::White, SourceKind::White],
        SIGNAL_LEN,
    )?;

    let mixture = scene.mixtures[1].clone();
    let mut estimates =
        EstimatePair::new(scene.images[0][0].clone(), scene.images[1][0].clone())?;

    let options = RasOptions {
        mode,
        criterion,
        filter: FilterSpec::new(4, 28)?,
        with_grad: true,
        through_solve: true,
    };
    let report = ras_loss(&mixture, &estimates, &options)?;
    let analytic = report
        .gradients
        .ok_or_else(|| Error::Internal("gradient request returned none".into()))?;

    let probe_options = RasOptions {
        with_grad: false,
        ..options
    };
    let total = 2 * SIGNAL_LEN;
    let stride = (total / N_PROBE_COORDS).max(1);
    let mut diff_sq = 0.0;
    let mut analytic_sq = 0.0;
    fn channel(estimates: &mut EstimatePair, k: usize) -> &mut Vec<f64> {
        if k == 0 {
            &mut estimates.first.samples
        } else {
            &mut estimates.second.samples
        }
    }
    for coord in (0..total).step_by(stride) {
        let (k, i) = (coord / SIGNAL_LEN, coord % SIGNAL_LEN);
        channel(&mut estimates, k)[i] += FD_STEP;
        let plus = ras_loss(&mixture, &estimates, &probe_options)?.loss_db;
        channel(&mut estimates, k)[i] -= 2.0 * FD_STEP;
        let minus = ras_loss(&mixture, &estimates, &probe_options)?.loss_db;
        channel(&mut estimates, k)[i] += FD_STEP;

        let numeric = (plus - minus) / (2.0 * FD_STEP);
        diff_sq += (numeric - analytic[k][i]).powi(2);
        analytic_sq += analytic[k][i].powi(2);
    }
    if analytic_sq == 0.0 {
        return Err(Error::Internal(
            "probed gradient coordinates are all zero".into(),
        ));
    }
    Ok((diff_sq / analytic_sq).sqrt())
}
