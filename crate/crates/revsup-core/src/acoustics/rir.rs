//! Image-source room impulse responses for shoebox rooms.
//!
//! Each wall reflection mirrors the source; an image reached through n
//! reflections contributes an attenuated, fractionally delayed copy of the
//! impulse. Fractional delays use an 81-tap Hann-windowed sinc, so band
//! limitation is explicit and integer delays stay exact.

use crate::audio::AudioBuffer;
use crate::error::Result;

use super::scene::SceneSpec;

/// Half-width of the windowed-sinc fractional delay kernel, in samples.
const SINC_HALF_WIDTH: isize = 40;

/// One mirrored source position with its total reflection count.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Image {
    pub position: [f64; 3],
    pub reflections: u32,
}

/// Per-axis image coordinates within reach, as (coordinate, reflections).
///
/// Mirrors of a point s inside [0, l] lie at 2ml + s and 2ml - s; the number
/// of wall crossings on this axis is |2m| and |2m - 1| respectively.
fn axis_images(s: f64, l: f64, mic: f64, max_order: u32, reach: f64) -> Vec<(f64, u32)> {
    let mut out = Vec::new();
    let m_span = ((reach + l + s.abs()) / (2.0 * l)).ceil() as i64 + 1;
    for m in -m_span..=m_span {
        for q in [0i64, 1] {
            let n = (2 * m - q).unsigned_abs() as u32;
            if n > max_order {
                continue;
            }
            let sign = 1.0 - 2.0 * q as f64;
            let coord = 2.0 * m as f64 * l + sign * s;
            if (coord - mic).abs() <= reach {
                out.push((coord, n));
            }
        }
    }
    out
}

/// All images of `source` with at most `max_order` reflections that can land
/// a contribution within `reach` metres of `mic`.
pub(crate) fn enumerate_images(
    room: [f64; 3],
    source: [f64; 3],
    mic: [f64; 3],
    max_order: u32,
    reach: f64,
) -> Vec<Image> {
    let per_axis: Vec<Vec<(f64, u32)>> = (0..3)
        .map(|a| axis_images(source[a], room[a], mic[a], max_order, reach))
        .collect();
    let mut out = Vec::new();
    for &(x, nx) in &per_axis[0] {
        for &(y, ny) in &per_axis[1] {
            let nxy = nx + ny;
            if nxy > max_order {
                continue;
            }
            let dxy2 = (x - mic[0]).powi(2) + (y - mic[1]).powi(2);
            if dxy2 > reach * reach {
                continue;
            }
            for &(z, nz) in &per_axis[2] {
                let n = nxy + nz;
                if n > max_order {
                    continue;
                }
                let d2 = dxy2 + (z - mic[2]).powi(2);
                if d2 > reach * reach {
                    continue;
                }
                out.push(Image {
                    position: [x, y, z],
                    reflections: n,
                });
            }
        }
    }
    out
}

/// Adds `gain` times a sinc kernel delayed by `delay` samples into `h`.
fn add_fractional_impulse(h: &mut [f64], delay: f64, gain: f64) {
    let lo = (delay.ceil() as isize - SINC_HALF_WIDTH).max(0);
    let hi = (delay.floor() as isize + SINC_HALF_WIDTH).min(h.len() as isize - 1);
    if lo > hi {
        return;
    }
    // sin(pi (u + k)) alternates sign with k, so one evaluation serves the
    // whole kernel.
    let u0 = lo as f64 - delay;
    let mut sin_pi_u = (std::f64::consts::PI * u0).sin();
    for j in lo..=hi {
        let u = j as f64 - delay;
        let sinc = if u.abs() < 1e-9 {
            1.0
        } else {
            sin_pi_u / (std::f64::consts::PI * u)
        };
        let window = 0.5
            * (1.0
                + (std::f64::consts::PI * u / (SINC_HALF_WIDTH as f64 + 1.0)).cos());
        h[j as usize] += gain * sinc * window;
        sin_pi_u = -sin_pi_u;
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

fn check_indices(spec: &SceneSpec, source: usize, mic: usize) -> Result<()> {
    spec.validate()?;
    if source >= spec.source_positions.len() {
        return Err(crate::error::Error::InvalidArgument(format!(
            "source index {source} out of range for {} sources",
            spec.source_positions.len()
        )));
    }
    if mic >= spec.mic_positions.len() {
        return Err(crate::error::Error::InvalidArgument(format!(
            "mic index {mic} out of range for {} mics",
            spec.mic_positions.len()
        )));
    }
    Ok(())
}

fn build_rir(spec: &SceneSpec, source: usize, mic: usize, max_order: u32) -> AudioBuffer {
    let fs = spec.sample_rate as f64;
    let src = spec.source_positions[source];
    let mic_pos = spec.mic_positions[mic];
    // Images beyond this distance cannot touch any tap of the response.
    let reach =
        (spec.rir_length as f64 + SINC_HALF_WIDTH as f64) * spec.speed_of_sound / fs;
    let beta = (1.0 - spec.absorption).sqrt();
    let mut h = vec![0.0; spec.rir_length];
    for image in enumerate_images(spec.room_dims, src, mic_pos, max_order, reach) {
        let d = distance(image.position, mic_pos);
        let delay = d * fs / spec.speed_of_sound;
        let gain = beta.powi(image.reflections as i32)
            / (4.0 * std::f64::consts::PI * d.max(1e-3));
        add_fractional_impulse(&mut h, delay, gain);
    }
    AudioBuffer {
        samples: h,
        sample_rate: spec.sample_rate,
    }
}

/// Room impulse response from one source to one mic, `rir_length` samples.
pub fn simulate_rir(spec: &SceneSpec, source: usize, mic: usize) -> Result<AudioBuffer> {
    check_indices(spec, source, mic)?;
    Ok(build_rir(spec, source, mic, spec.max_image_order))
}

/// The direct path alone: the zero-reflection image of `simulate_rir`.
pub fn simulate_direct_path(spec: &SceneSpec, source: usize, mic: usize) -> Result<AudioBuffer> {
    check_indices(spec, source, mic)?;
    Ok(build_rir(spec, source, mic, 0))
}

/// Propagation delay of the direct path, in (fractional) samples.
pub fn direct_delay_samples(spec: &SceneSpec, source: usize, mic: usize) -> Result<f64> {
    check_indices(spec, source, mic)?;
    let d = distance(spec.source_positions[source], spec.mic_positions[mic]);
    Ok(d * spec.sample_rate as f64 / spec.speed_of_sound)
}
