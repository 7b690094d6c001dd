//! The cross-channel prediction loss and its gradients.
//!
//! Given two separated estimates of the left channel, short Wiener filters
//! are fitted to predict the right-channel mixture from them; the loss is the
//! negated prediction quality in dB. Because the filters are refitted for
//! every input, the gradient with respect to the estimates has two parts: the
//! direct path through the filtered sum, and the indirect path through the
//! normal equations the filters solve. The indirect part needs one extra
//! solve against the already-assembled system per filter.

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::metrics::{si_sdr_slice, si_sdr_value_grad, snr_slice, snr_value_grad};
use crate::wiener::{
    apply_filter_slice, corr_taps, fit_wiener_slice, EstimatePair, FilterSpec, FirFilter,
    JointState,
};

/// Whether the two prediction filters are fitted separately or as one system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    Independent,
    Joint,
}

impl FilterMode {
    pub fn name(self) -> &'static str {
        match self {
            FilterMode::Independent => "independent",
            FilterMode::Joint => "joint",
        }
    }
}

impl std::str::FromStr for FilterMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(FilterMode::Independent),
            "joint" => Ok(FilterMode::Joint),
            _ => Err(Error::InvalidArgument(format!(
                "unknown filter mode '{s}', expected independent or joint"
            ))),
        }
    }
}

impl std::fmt::Display for FilterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How prediction quality is scored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossCriterion {
    SiSdr,
    Snr,
}

impl LossCriterion {
    pub fn name(self) -> &'static str {
        match self {
            LossCriterion::SiSdr => "si_sdr",
            LossCriterion::Snr => "snr",
        }
    }
}

impl std::str::FromStr for LossCriterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "si_sdr" => Ok(LossCriterion::SiSdr),
            "snr" => Ok(LossCriterion::Snr),
            _ => Err(Error::InvalidArgument(format!(
                "unknown criterion '{s}', expected si_sdr or snr"
            ))),
        }
    }
}

impl std::fmt::Display for LossCriterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings for one loss evaluation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RasOptions {
    pub mode: FilterMode,
    pub criterion: LossCriterion,
    pub filter: FilterSpec,
    /// Compute gradients with respect to both estimates.
    pub with_grad: bool,
    /// Propagate gradients through the filter fit. When false the filters are
    /// treated as constants, which is cheaper but biased.
    pub through_solve: bool,
}

impl Default for RasOptions {
    fn default() -> Self {
        Self {
            mode: FilterMode::Independent,
            criterion: LossCriterion::SiSdr,
            filter: FilterSpec::default(),
            with_grad: false,
            through_solve: true,
        }
    }
}

/// One loss evaluation: the score, the fitted filters, and optionally the
/// gradients with respect to the two estimates.
#[derive(Clone, Debug, Serialize)]
pub struct LossReport {
    /// Negated prediction quality in dB; lower is better separation.
    pub loss_db: f64,
    pub mode: FilterMode,
    pub criterion: LossCriterion,
    pub filters: [FirFilter; 2],
    pub grad_norm_1: Option<f64>,
    pub grad_norm_2: Option<f64>,
    /// Gradients of `loss_db`, one value per estimate sample.
    #[serde(skip)]
    pub gradients: Option<[Vec<f64>; 2]>,
}

fn criterion_value(criterion: LossCriterion, m: &[f64], pred: &[f64]) -> Result<f64> {
    match criterion {
        LossCriterion::SiSdr => si_sdr_slice(m, pred),
        LossCriterion::Snr => snr_slice(m, pred),
    }
}

fn criterion_value_grad(
    criterion: LossCriterion,
    m: &[f64],
    pred: &[f64],
) -> Result<(f64, Vec<f64>)> {
    match criterion {
        LossCriterion::SiSdr => si_sdr_value_grad(m, pred),
        LossCriterion::Snr => snr_value_grad(m, pred),
    }
}

/// The adjoint of applying `w` over the output window: filtering with the
/// tap-reversed filter.
fn adjoint_apply(w: &FirFilter, z: &[f64]) -> Vec<f64> {
    apply_filter_slice(&w.reversed(), z)
}

fn check_loss_inputs(mixture: &AudioBuffer, estimates: &EstimatePair) -> Result<()> {
    if mixture.len() != estimates.len() {
        return Err(Error::InvalidArgument(format!(
            "mixture length {} does not match estimate length {}",
            mixture.len(),
            estimates.len()
        )));
    }
    if mixture.sample_rate != estimates.first.sample_rate {
        return Err(Error::InvalidArgument(format!(
            "mixture sample rate {} does not match estimates {}",
            mixture.sample_rate, estimates.first.sample_rate
        )));
    }
    for (k, x) in [&estimates.first, &estimates.second].iter().enumerate() {
        if x.samples.iter().all(|&v| v == 0.0) {
            return Err(Error::DegenerateInput(format!(
                "estimate {} is identically zero, its prediction filter is undefined",
                k + 1
            )));
        }
    }
    Ok(())
}

/// Fits the prediction filters, scores the prediction of `mixture`, and
/// optionally differentiates the whole pipeline with respect to the
/// estimates.
pub fn ras_loss(
    mixture: &AudioBuffer,
    estimates: &EstimatePair,
    options: &RasOptions,
) -> Result<LossReport> {
    options.filter.validate()?;
    check_loss_inputs(mixture, estimates)?;
    let spec = &options.filter;
    let m = &mixture.samples;
    let x1 = &estimates.first.samples;
    let x2 = &estimates.second.samples;

    // Fit, keeping the factorized systems around for the gradient solves.
    let (w1, w2, state1, state2, joint) = match options.mode {
        FilterMode::Independent => {
            let (w1, s1) = fit_wiener_slice(x1, m, spec)?;
            let (w2, s2) = fit_wiener_slice(x2, m, spec)?;
            (w1, w2, Some(s1), Some(s2), None)
        }
        FilterMode::Joint => {
            let state = JointState::new(x1, x2, spec)?;
            let r1 = corr_taps(x1, m, spec.tau_nc, spec.tau_c);
            let r2 = corr_taps(x2, m, spec.tau_nc, spec.tau_c);
            let (c1, c2) = state.solve_pair(&r1, &r2);
            let w1 = FirFilter::new(spec.tau_nc, c1)?;
            let w2 = FirFilter::new(spec.tau_nc, c2)?;
            (w1, w2, None, None, Some(state))
        }
    };

    let y1 = apply_filter_slice(&w1, x1);
    let y2 = apply_filter_slice(&w2, x2);
    let pred: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();

    if !options.with_grad {
        let value = criterion_value(options.criterion, m, &pred)?;
        return Ok(LossReport {
            loss_db: -value,
            mode: options.mode,
            criterion: options.criterion,
            filters: [w1, w2],
            grad_norm_1: None,
            grad_norm_2: None,
            gradients: None,
        });
    }

    let (value, value_grad) = criterion_value_grad(options.criterion, m, &pred)?;
    // Gradients below are for the loss, the negated criterion.
    let g: Vec<f64> = value_grad.iter().map(|v| -v).collect();

    let mut grad1 = adjoint_apply(&w1, &g);
    let mut grad2 = adjoint_apply(&w2, &g);

    if options.through_solve {
        let u1 = corr_taps(x1, &g, spec.tau_nc, spec.tau_c);
        let u2 = corr_taps(x2, &g, spec.tau_nc, spec.tau_c);
        let delta = spec.diagonal_loading;
        let add_solve_terms = |grad: &mut Vec<f64>,
                                   v: &[f64],
                                   w: &FirFilter,
                                   x: &[f64],
                                   residual: &[f64],
                                   spread: &[f64]| {
            let vf = FirFilter {
                tau_nc: spec.tau_nc,
                coefficients: v.to_vec(),
            };
            let via_rhs = adjoint_apply(&vf, residual);
            let via_gram = adjoint_apply(w, spread);
            let vw: f64 = v.iter().zip(&w.coefficients).map(|(a, b)| a * b).sum();
            for t in 0..grad.len() {
                grad[t] += via_rhs[t] - via_gram[t] - 2.0 * delta * vw * x[t];
            }
        };
        match options.mode {
            FilterMode::Independent => {
                let v1 = state1.expect("independent mode keeps its states").solve(&u1)?;
                let v2 = state2.expect("independent mode keeps its states").solve(&u2)?;
                // Each filter was fitted alone, so its residual is against the
                // mixture directly.
                let e1: Vec<f64> = m.iter().zip(&y1).map(|(a, b)| a - b).collect();
                let e2: Vec<f64> = m.iter().zip(&y2).map(|(a, b)| a - b).collect();
                let s1 = apply_filter_slice(
                    &FirFilter {
                        tau_nc: spec.tau_nc,
                        coefficients: v1.clone(),
                    },
                    x1,
                );
                let s2 = apply_filter_slice(
                    &FirFilter {
                        tau_nc: spec.tau_nc,
                        coefficients: v2.clone(),
                    },
                    x2,
                );
                add_solve_terms(&mut grad1, &v1, &w1, x1, &e1, &s1);
                add_solve_terms(&mut grad2, &v2, &w2, x2, &e2, &s2);
            }
            FilterMode::Joint => {
                let (v1, v2) = joint
                    .expect("joint mode keeps its state")
                    .solve_pair(&u1, &u2);
                // One shared residual and one shared spread couple the two
                // gradients.
                let e: Vec<f64> = m.iter().zip(&pred).map(|(a, b)| a - b).collect();
                let sv1 = apply_filter_slice(
                    &FirFilter {
                        tau_nc: spec.tau_nc,
                        coefficients: v1.clone(),
                    },
                    x1,
                );
                let sv2 = apply_filter_slice(
                    &FirFilter {
                        tau_nc: spec.tau_nc,
                        coefficients: v2.clone(),
                    },
                    x2,
                );
                let spread: Vec<f64> = sv1.iter().zip(&sv2).map(|(a, b)| a + b).collect();
                add_solve_terms(&mut grad1, &v1, &w1, x1, &e, &spread);
                add_solve_terms(&mut grad2, &v2, &w2, x2, &e, &spread);
            }
        }
    }

    for grad in [&grad1, &grad2] {
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::Internal("gradient contains non-finite values".into()));
        }
    }
    let norm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(LossReport {
        loss_db: -value,
        mode: options.mode,
        criterion: options.criterion,
        filters: [w1, w2],
        grad_norm_1: Some(norm(&grad1)),
        grad_norm_2: Some(norm(&grad2)),
        gradients: Some([grad1, grad2]),
    })
}
