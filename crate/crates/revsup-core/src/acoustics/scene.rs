//! Scene geometry and the random scene sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A shoebox room with point sources and a microphone pair.
///
/// Positions are in metres from one floor corner; `absorption` is the uniform
/// wall energy absorption coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub room_dims: [f64; 3],
    #[serde(rename = "sources")]
    pub source_positions: Vec<[f64; 3]>,
    #[serde(rename = "mics")]
    pub mic_positions: Vec<[f64; 3]>,
    pub absorption: f64,
    pub max_image_order: u32,
    pub speed_of_sound: f64,
    pub sample_rate: u32,
    pub rir_length: usize,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        for (axis, &d) in self.room_dims.iter().enumerate() {
            if !d.is_finite() || d <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "room dimension {axis} must be positive and finite, got {d}"
                )));
            }
        }
        if self.source_positions.is_empty() {
            return Err(Error::InvalidArgument("scene needs at least one source".into()));
        }
        if self.mic_positions.is_empty() {
            return Err(Error::InvalidArgument("scene needs at least one mic".into()));
        }
        for (label, positions) in [
            ("source", &self.source_positions),
            ("mic", &self.mic_positions),
        ] {
            for (i, p) in positions.iter().enumerate() {
                for (axis, (&coord, &dim)) in p.iter().zip(&self.room_dims).enumerate() {
                    if !coord.is_finite() || coord <= 0.0 || coord >= dim {
                        return Err(Error::InvalidArgument(format!(
                            "{label} {i} lies outside the room on axis {axis}: {coord}"
                        )));
                    }
                }
            }
        }
        if !self.absorption.is_finite() || self.absorption <= 0.0 || self.absorption > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "absorption must be in (0, 1], got {}",
                self.absorption
            )));
        }
        if !self.speed_of_sound.is_finite() || self.speed_of_sound <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "speed of sound must be positive, got {}",
                self.speed_of_sound
            )));
        }
        if self.sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if self.rir_length == 0 {
            return Err(Error::InvalidArgument("rir_length must be positive".into()));
        }
        Ok(())
    }
}

/// A scene plus the seed that derives its dry source material.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    #[serde(flatten)]
    pub spec: SceneSpec,
    pub seed: u64,
}

/// Draws random two-source scenes with a closely spaced mic pair.
///
/// Rooms are 5 to 10 m on the floor axes and 2.6 to 4 m high. The mic pair
/// sits near the middle of the room with 15 to 17 cm spacing at a random
/// azimuth; sources land 0.5 to 2 m from the array centre. Reverberation
/// times of 0.15 to 0.4 s are converted to a wall absorption via Sabine's
/// formula.
///
/// Source pairs are rejection-sampled so the two sources are spatially
/// distinct as seen from the array: at least 30 degrees apart in azimuth,
/// at least 0.8 m apart, and with inter-mic delays differing by at least
/// two samples. Without the last constraint a pair near the same delay cone
/// looks like a single source to the mic pair, and one filter predicts the
/// whole mixture across channels. Each source also keeps its own inter-mic
/// delay at least one sample off the broadside plane, where it would arrive
/// identically at both mics and be cross-predictable for free.
pub struct SceneSampler {
    rng: ChaCha8Rng,
}

/// Minimum clearance between any sampled position and a wall, in metres.
const WALL_MARGIN: f64 = 0.2;

/// Minimum azimuth separation between the two sources, in radians.
const MIN_AZIMUTH_GAP: f64 = 30.0 * std::f64::consts::PI / 180.0;

/// Minimum distance between the two sources, in metres.
const MIN_SOURCE_DIST: f64 = 0.8;

/// Minimum difference between the sources' inter-mic delays, in samples.
const MIN_TDOA_GAP: f64 = 2.0;

/// Minimum inter-mic delay magnitude for each source on its own, in samples.
const MIN_ABS_TDOA: f64 = 1.0;

impl SceneSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self) -> SceneConfig {
        let rng = &mut self.rng;
        let room = [
            rng.random_range(5.0..10.0),
            rng.random_range(5.0..10.0),
            rng.random_range(2.6..4.0),
        ];

        let t60: f64 = rng.random_range(0.15..0.4);
        let volume = room[0] * room[1] * room[2];
        let surface = 2.0 * (room[0] * room[1] + room[0] * room[2] + room[1] * room[2]);
        let absorption = (0.161 * volume / (surface * t60)).clamp(0.01, 0.99);

        let center = [
            room[0] * rng.random_range(0.35..0.65),
            room[1] * rng.random_range(0.35..0.65),
            rng.random_range(1.2..1.9),
        ];
        let spacing = rng.random_range(0.15..0.17);
        let azimuth = rng.random_range(0.0..std::f64::consts::TAU);
        let half = [
            0.5 * spacing * azimuth.cos(),
            0.5 * spacing * azimuth.sin(),
            0.0,
        ];
        let mic_positions = vec![
            [center[0] + half[0], center[1] + half[1], center[2]],
            [center[0] - half[0], center[1] - half[1], center[2]],
        ];

        let tdoa = |p: &[f64; 3]| {
            let d = |m: &[f64; 3]| (0..3).map(|a| (p[a] - m[a]).powi(2)).sum::<f64>().sqrt();
            (d(&mic_positions[0]) - d(&mic_positions[1])) * 8000.0 / 343.0
        };
        let mut source_positions: Vec<[f64; 3]> = Vec::with_capacity(2);
        let mut source_azimuths: Vec<f64> = Vec::with_capacity(2);
        while source_positions.len() < 2 {
            let radius = rng.random_range(0.5..2.0);
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let p = [
                center[0] + radius * theta.cos(),
                center[1] + radius * theta.sin(),
                rng.random_range(1.2..1.9),
            ];
            let inside = (0..3).all(|a| p[a] > WALL_MARGIN && p[a] < room[a] - WALL_MARGIN);
            if !inside || tdoa(&p).abs() < MIN_ABS_TDOA {
                continue;
            }
            if let (Some(prev), Some(&prev_theta)) =
                (source_positions.first(), source_azimuths.first())
            {
                let mut gap = (theta - prev_theta).abs();
                if gap > std::f64::consts::PI {
                    gap = std::f64::consts::TAU - gap;
                }
                let dist = (0..3)
                    .map(|a| (p[a] - prev[a]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if gap < MIN_AZIMUTH_GAP
                    || dist < MIN_SOURCE_DIST
                    || (tdoa(&p) - tdoa(prev)).abs() < MIN_TDOA_GAP
                {
                    continue;
                }
            }
            source_positions.push(p);
            source_azimuths.push(theta);
        }

        SceneConfig {
            spec: SceneSpec {
                room_dims: room,
                source_positions,
                mic_positions,
                absorption,
                max_image_order: 24,
                speed_of_sound: 343.0,
                sample_rate: 8000,
                rir_length: 2048,
            },
            seed: rng.random(),
        }
    }
}
