//! Waveform-domain descent on the channel-prediction loss.
//!
//! The estimates themselves are the free variables: each step refits the
//! filters inside the loss, takes the analytic gradient with respect to the
//! waveforms, and walks downhill under a backtracking line search. An
//! optional anchor term pulls the estimates toward known reference signals.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::acoustics::RenderedScene;
use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::metrics;
use crate::ras::{ras_loss, FilterMode, LossCriterion, RasOptions};
use crate::wiener::{EstimatePair, FilterSpec};

/// Where the estimates start from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Each true image leaks a fraction of the other into its estimate.
    Leaky,
    /// Both estimates start as half the left mixture.
    MixtureHalf,
    /// The true reverberant images at the left mic.
    TrueImages,
}

impl FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "leaky" => Ok(Self::Leaky),
            "mixture-half" => Ok(Self::MixtureHalf),
            "true-images" => Ok(Self::TrueImages),
            other => Err(Error::InvalidArgument(format!(
                "unknown init {other:?}, expected leaky, mixture-half or true-images"
            ))),
        }
    }
}

impl fmt::Display for InitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Leaky => f.write_str("leaky"),
            Self::MixtureHalf => f.write_str("mixture-half"),
            Self::TrueImages => f.write_str("true-images"),
        }
    }
}

/// Fraction of the other source mixed in by [`InitKind::Leaky`].
pub const LEAK_FRACTION: f64 = 0.2;

/// Builds a starting estimate pair from a rendered scene.
pub fn make_init(scene: &RenderedScene, kind: InitKind) -> Result<EstimatePair> {
    if scene.images.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "initialization expects two sources, got {}",
            scene.images.len()
        )));
    }
    let x1 = &scene.images[0][0];
    let x2 = &scene.images[1][0];
    match kind {
        InitKind::Leaky => EstimatePair::new(
            mix(x1, 1.0 - LEAK_FRACTION, x2, LEAK_FRACTION),
            mix(x2, 1.0 - LEAK_FRACTION, x1, LEAK_FRACTION),
        ),
        InitKind::MixtureHalf => {
            let half = AudioBuffer {
                samples: scene.mixtures[0].samples.iter().map(|v| 0.5 * v).collect(),
                sample_rate: scene.mixtures[0].sample_rate,
            };
            EstimatePair::new(half.clone(), half)
        }
        InitKind::TrueImages => EstimatePair::new(x1.clone(), x2.clone()),
    }
}

fn mix(a: &AudioBuffer, wa: f64, b: &AudioBuffer, wb: f64) -> AudioBuffer {
    AudioBuffer {
        samples: a
            .samples
            .iter()
            .zip(&b.samples)
            .map(|(&x, &y)| wa * x + wb * y)
            .collect(),
        sample_rate: a.sample_rate,
    }
}

/// Settings for one optimization run.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizeConfig {
    pub mode: FilterMode,
    pub criterion: LossCriterion,
    pub filter: FilterSpec,
    /// Target relative displacement per step, as a fraction of the
    /// estimates' joint norm. Steps are taken along the normalized
    /// gradient, so this bounds how far one accepted step can move
    /// regardless of the loss's local steepness; the line search only
    /// shrinks it from here.
    pub step_size: f64,
    pub max_iters: usize,
    /// Weight of the anchor pull toward the reference signals; 0 disables it.
    pub anchor_weight: f64,
    pub through_solve: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            mode: FilterMode::Independent,
            criterion: LossCriterion::SiSdr,
            filter: FilterSpec::default(),
            step_size: 3e-4,
            max_iters: 200,
            anchor_weight: 0.0,
            through_solve: true,
        }
    }
}

/// One accepted step of a run.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// The objective being minimized, including any anchor term.
    pub loss_db: f64,
    /// Quality of the first estimate against its reference.
    pub si_sdr_1: f64,
    pub si_sdr_2: f64,
    /// Relative step that was accepted; 0 for the initial row.
    pub step_size: f64,
}

/// The full descent history of one run.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizationTrace {
    pub rows: Vec<TraceRow>,
    /// True when the line search ran out of halvings before `max_iters`.
    pub converged_early: bool,
}

impl OptimizationTrace {
    pub fn final_loss_db(&self) -> f64 {
        self.rows.last().expect("traces are never empty").loss_db
    }

    /// Average per-estimate quality at the last accepted step.
    pub fn final_mean_si_sdr_db(&self) -> f64 {
        let last = self.rows.last().expect("traces are never empty");
        0.5 * (last.si_sdr_1 + last.si_sdr_2)
    }

    pub fn initial_mean_si_sdr_db(&self) -> f64 {
        let first = self.rows.first().expect("traces are never empty");
        0.5 * (first.si_sdr_1 + first.si_sdr_2)
    }
}

const MAX_HALVINGS: u32 = 20;
const STEP_GROWTH: f64 = 2.0;
// Sufficient-decrease slope for the backtracking search. Accepting any
// decrease at all lets oversized steps wander along the loss's many flat
// directions (the refit filters absorb them); demanding a decrease
// proportional to the squared gradient norm keeps steps on curvature scale.
const ARMIJO_SLOPE: f64 = 1e-4;

/// Runs gradient descent on the estimates and records its trace.
///
/// `references` are the per-source signals the estimates are judged against
/// in the trace; with a positive anchor weight they also pull the iterates
/// through a pairwise scale-invariant penalty. The accepted loss is strictly
/// decreasing by construction; the run stops early once no halved step
/// improves it.
pub fn optimize_ras(
    mixture: &AudioBuffer,
    init: &EstimatePair,
    references: &[AudioBuffer; 2],
    config: &OptimizeConfig,
) -> Result<(OptimizationTrace, EstimatePair)> {
    if config.step_size <= 0.0 || !config.step_size.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive and finite, got {}",
            config.step_size
        )));
    }
    for (k, reference) in references.iter().enumerate() {
        if reference.len() != init.first.len() {
            return Err(Error::InvalidArgument(format!(
                "reference {} has {} samples, estimates have {}",
                k + 1,
                reference.len(),
                init.first.len()
            )));
        }
    }

    let grad_options = RasOptions {
        mode: config.mode,
        criterion: config.criterion,
        filter: config.filter.clone(),
        with_grad: true,
        through_solve: config.through_solve,
    };
    let probe_options = RasOptions {
        with_grad: false,
        ..grad_options.clone()
    };

    let mut estimates = init.clone();
    let (mut value, mut gradients) =
        objective(mixture, &estimates, references, config, &grad_options)?;
    let mut rows = vec![trace_row(0, value, &estimates, references, 0.0)];
    let mut step = config.step_size;
    let mut converged_early = false;

    for iteration in 1..=config.max_iters {
        let grads = gradients.as_ref().expect("gradient evaluations carry gradients");
        let grad_sq: f64 = grads.iter().flatten().map(|g| g * g).sum();
        if grad_sq == 0.0 {
            converged_early = true;
            break;
        }
        // Convert the relative step into waveform units so one accepted
        // step moves the estimates by at most `trial` of their own norm.
        let scale = (estimates.first.energy() + estimates.second.energy()).sqrt();
        let to_waveform = scale / grad_sq.sqrt();
        let mut accepted = None;
        let mut trial = step;
        for _ in 0..=MAX_HALVINGS {
            let stride = trial * to_waveform;
            let candidate = step_estimates(&estimates, grads, stride)?;
            match objective(mixture, &candidate, references, config, &probe_options) {
                Ok((candidate_value, _))
                    if candidate_value <= value - ARMIJO_SLOPE * stride * grad_sq =>
                {
                    accepted = Some((candidate, candidate_value, trial));
                    break;
                }
                // A probe that fails to evaluate is treated like a probe
                // that failed to improve: back off and try closer.
                Ok(_) | Err(_) => trial *= 0.5,
            }
        }

        let Some((candidate, candidate_value, accepted_step)) = accepted else {
            converged_early = true;
            break;
        };
        estimates = candidate;
        value = candidate_value;
        // Recover toward the configured step after backtracking, but never
        // beyond it: growing without bound re-enables the oversized moves
        // the Armijo test exists to prevent.
        step = (accepted_step * STEP_GROWTH).min(config.step_size);
        rows.push(trace_row(iteration, value, &estimates, references, accepted_step));

        if iteration < config.max_iters {
            let refreshed = objective(mixture, &estimates, references, config, &grad_options)?;
            value = refreshed.0;
            gradients = refreshed.1;
        }
    }

    Ok((
        OptimizationTrace {
            rows,
            converged_early,
        },
        estimates,
    ))
}

/// Total objective and, when requested, its gradient per estimate.
fn objective(
    mixture: &AudioBuffer,
    estimates: &EstimatePair,
    references: &[AudioBuffer; 2],
    config: &OptimizeConfig,
    options: &RasOptions,
) -> Result<(f64, Option<[Vec<f64>; 2]>)> {
    let report = ras_loss(mixture, estimates, options)?;
    let mut value = report.loss_db;
    let mut gradients = report.gradients;

    if config.anchor_weight > 0.0 {
        for (k, (reference, estimate)) in references
            .iter()
            .zip([&estimates.first, &estimates.second])
            .enumerate()
        {
            let (sdr, grad) =
                metrics::si_sdr_value_grad(&reference.samples, &estimate.samples)?;
            // The anchor is a negated average, so each estimate contributes
            // -weight/2 times its own scale-invariant score.
            value -= 0.5 * config.anchor_weight * sdr;
            if let Some(grads) = gradients.as_mut() {
                for (g, d) in grads[k].iter_mut().zip(grad) {
                    *g -= 0.5 * config.anchor_weight * d;
                }
            }
        }
    }
    Ok((value, gradients))
}

fn step_estimates(
    estimates: &EstimatePair,
    gradients: &[Vec<f64>; 2],
    step: f64,
) -> Result<EstimatePair> {
    let moved = |buf: &AudioBuffer, grad: &[f64]| AudioBuffer {
        samples: buf
            .samples
            .iter()
            .zip(grad)
            .map(|(&x, &g)| x - step * g)
            .collect(),
        sample_rate: buf.sample_rate,
    };
    EstimatePair::new(
        moved(&estimates.first, &gradients[0]),
        moved(&estimates.second, &gradients[1]),
    )
}

fn trace_row(
    iteration: usize,
    loss_db: f64,
    estimates: &EstimatePair,
    references: &[AudioBuffer; 2],
    step_size: f64,
) -> TraceRow {
    // A reference the estimate is exactly orthogonal to has no defined
    // score; the trace floors it instead of aborting the run.
    let score = |reference: &AudioBuffer, estimate: &AudioBuffer| {
        metrics::si_sdr(reference, estimate).unwrap_or(-120.0)
    };
    TraceRow {
        iteration,
        loss_db,
        si_sdr_1: score(&references[0], &estimates.first),
        si_sdr_2: score(&references[1], &estimates.second),
        step_size,
    }
}

/// Writes a trace as CSV with one row per accepted step.
pub fn write_trace_csv(trace: &OptimizationTrace, path: &Path) -> Result<()> {
    let mut writer = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(writer, "iteration,loss_db,si_sdr_1,si_sdr_2,step_size")?;
    for row in &trace.rows {
        writeln!(
            writer,
            "{},{:.9},{:.6},{:.6},{:.9}",
            row.iteration, row.loss_db, row.si_sdr_1, row.si_sdr_2, row.step_size
        )?;
    }
    writer.flush()?;
    Ok(())
}
