//! Reverberant two-channel separation driven by cross-channel prediction.
//!
//! The core idea: when two reverberant sources are separated correctly on one
//! microphone, short Wiener filters can predict the other microphone's mixture
//! from the separated signals. How well that prediction works is a training
//! signal that needs no dry references. This crate provides the pieces: audio
//! buffers and WAV I/O, non-causal Wiener fits with exact windowed least
//! squares, the prediction loss with analytic gradients, image-source room
//! simulation, scene sampling and rendering, pair selection by informativeness,
//! and the experiment drivers tying them together.

pub mod acoustics;
pub mod audio;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod ras;
pub mod selection;
pub mod wav;
pub mod wiener;

pub use acoustics::{SceneConfig, SceneSampler, SceneSpec, SourceKind};
pub use audio::AudioBuffer;
pub use error::{Error, Result};
pub use experiments::{
    optimize_ras, run_ablation, run_grad_check, run_oracle, AblationConfig, InitKind, InputKind,
    OptimizeConfig,
};
pub use metrics::{projection_sdr, si_sdr, snr};
pub use ras::{ras_loss, FilterMode, LossCriterion, LossReport, RasOptions};
pub use selection::{informativeness_sdr, select, LabeledPair, ScoreDirection, SelectionReport};
pub use wiener::{
    apply_filter, fit_independent, fit_joint, fit_wiener, reconstruct, EstimatePair, FilterSpec,
    FirFilter,
};
