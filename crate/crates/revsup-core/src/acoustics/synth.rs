//! Synthetic dry source material.
//!
//! Four generators with distinct spectral and temporal structure, all
//! deterministic in the seed and peak-normalized to 0.9: flat noise, pink
//! noise, an amplitude-modulated harmonic complex, and a speech-like signal
//! with a drifting pitch, formant resonances, and syllabic energy bursts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Peak amplitude every generated signal is scaled to.
const TARGET_PEAK: f64 = 0.9;

/// The kind of dry signal a source emits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    White,
    Pink,
    AmToneComplex,
    SpeechLike,
}

impl SourceKind {
    pub const ALL: [SourceKind; 4] = [
        SourceKind::White,
        SourceKind::Pink,
        SourceKind::AmToneComplex,
        SourceKind::SpeechLike,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SourceKind::White => "white",
            SourceKind::Pink => "pink",
            SourceKind::AmToneComplex => "am_tone_complex",
            SourceKind::SpeechLike => "speech_like",
        }
    }
}

impl std::str::FromStr for SourceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SourceKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown source kind '{s}', expected one of white, pink, am_tone_complex, speech_like"
                ))
            })
    }
}

impl std::fmt::Display for SourceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Generates `len` samples of the given kind, peak-normalized to 0.9.
pub fn synth_dry_source(
    kind: SourceKind,
    len: usize,
    sample_rate: u32,
    seed: u64,
) -> Result<AudioBuffer> {
    if len == 0 {
        return Err(Error::InvalidArgument("source length must be positive".into()));
    }
    if sample_rate == 0 {
        return Err(Error::InvalidArgument("sample rate must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = match kind {
        SourceKind::White => white(len, &mut rng),
        SourceKind::Pink => pink(len, &mut rng),
        SourceKind::AmToneComplex => am_tone_complex(len, sample_rate, &mut rng),
        SourceKind::SpeechLike => speech_like(len, sample_rate, &mut rng),
    };
    normalize_peak(&mut samples);
    AudioBuffer::new(samples, sample_rate)
}

fn normalize_peak(samples: &mut [f64]) {
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let scale = TARGET_PEAK / peak;
        for v in samples.iter_mut() {
            *v *= scale;
        }
    }
}

fn white(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Voss-McCartney pink noise: staggered sample-and-hold rows plus one fresh
/// white row per sample.
fn pink(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    const ROWS: usize = 16;
    let mut rows = [0.0f64; ROWS];
    for r in rows.iter_mut() {
        *r = StandardNormal.sample(rng);
    }
    let mut counter: u64 = 0;
    (0..len)
        .map(|_| {
            counter += 1;
            let row = (counter.trailing_zeros() as usize).min(ROWS - 1);
            rows[row] = StandardNormal.sample(rng);
            let held: f64 = rows.iter().sum();
            let fresh: f64 = StandardNormal.sample(rng);
            held + fresh
        })
        .collect()
}

fn am_tone_complex(len: usize, sample_rate: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let fs = sample_rate as f64;
    let f0 = rng.random_range(110.0..420.0);
    let n_partials = 5usize;
    let phases: Vec<f64> = (0..n_partials)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    let fm = rng.random_range(2.0..8.0);
    let fm_phase = rng.random_range(0.0..std::f64::consts::TAU);
    (0..len)
        .map(|t| {
            let time = t as f64 / fs;
            let env = 1.0 + 0.5 * (std::f64::consts::TAU * fm * time + fm_phase).sin();
            let tone: f64 = (0..n_partials)
                .map(|k| {
                    let freq = f0 * (k + 1) as f64;
                    (std::f64::consts::TAU * freq * time + phases[k]).sin() / (k + 1) as f64
                })
                .sum();
            env * tone
        })
        .collect()
}

/// Two-pole resonator applied in place.
fn resonate(samples: &mut [f64], center_hz: f64, bandwidth_hz: f64, fs: f64) {
    let r = (-std::f64::consts::PI * bandwidth_hz / fs).exp();
    let a1 = -2.0 * r * (std::f64::consts::TAU * center_hz / fs).cos();
    let a2 = r * r;
    // Unit gain at the resonance peak, roughly.
    let g = (1.0 - r) * (1.0 - a2).sqrt();
    let (mut y1, mut y2) = (0.0, 0.0);
    for v in samples.iter_mut() {
        let y = g * *v - a1 * y1 - a2 * y2;
        y2 = y1;
        y1 = y;
        *v = y;
    }
}

fn speech_like(len: usize, sample_rate: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let fs = sample_rate as f64;
    let f0 = rng.random_range(95.0..250.0);
    let vibrato_rate = rng.random_range(0.4..0.9);
    let vibrato_phase = rng.random_range(0.0..std::f64::consts::TAU);
    let n_partials = ((0.45 * fs / 2.0 / f0) as usize).clamp(3, 14);
    let partial_phases: Vec<f64> = (0..n_partials)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();

    // Harmonic buzz with a slowly wandering pitch plus an aspiration floor.
    let mut phase = 0.0f64;
    let mut voiced: Vec<f64> = (0..len)
        .map(|t| {
            let time = t as f64 / fs;
            let inst_f0 = f0
                * (1.0
                    + 0.08 * (std::f64::consts::TAU * vibrato_rate * time + vibrato_phase).sin());
            phase += std::f64::consts::TAU * inst_f0 / fs;
            let buzz: f64 = (0..n_partials)
                .map(|k| ((k + 1) as f64 * phase + partial_phases[k]).sin() / (k + 1) as f64)
                .sum();
            let hiss: f64 = StandardNormal.sample(rng);
            buzz + 0.25 * hiss
        })
        .collect();

    let f1 = rng.random_range(350.0..800.0);
    let f2 = rng.random_range(1000.0..2000.0);
    resonate(&mut voiced, f1, 120.0, fs);
    resonate(&mut voiced, f2, 180.0, fs);

    // Syllabic gating: energy arrives in bursts with a faint floor between.
    let syllable_rate = rng.random_range(2.5..4.5);
    let syllable_phase = rng.random_range(0.0..std::f64::consts::TAU);
    for (t, v) in voiced.iter_mut().enumerate() {
        let time = t as f64 / fs;
        let lobe = (std::f64::consts::TAU * syllable_rate * time + syllable_phase)
            .sin()
            .max(0.0)
            .powf(0.8);
        *v *= 0.03 + 0.97 * lobe;
    }
    voiced
}
