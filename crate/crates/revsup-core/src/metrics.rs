//! Signal fidelity metrics in decibels.
//!
//! All ratios share a relative distortion floor of 1e-12, so a perfect match
//! reports 120 dB instead of infinity. SI-SDR first rescales the reference to
//! best match the estimate; SNR compares as-is; projection SDR measures how
//! much of an estimate a short filter applied to the reference can explain.

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::wiener::{apply_filter, fit_wiener, FilterSpec};

/// Relative floor added to every distortion energy.
const DISTORTION_FLOOR: f64 = 1e-12;

const DB_PER_LN: f64 = 10.0 / std::f64::consts::LN_10;

fn check_pair(reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<()> {
    if reference.len() != estimate.len() {
        return Err(Error::InvalidArgument(format!(
            "reference length {} does not match estimate length {}",
            reference.len(),
            estimate.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::InvalidArgument("signals must be non-empty".into()));
    }
    if reference.sample_rate != estimate.sample_rate {
        return Err(Error::InvalidArgument(format!(
            "reference sample rate {} does not match estimate {}",
            reference.sample_rate, estimate.sample_rate
        )));
    }
    Ok(())
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scale-invariant signal-to-distortion ratio in dB.
///
/// The reference is rescaled by its least-squares projection coefficient
/// before comparing, so the result ignores the estimate's overall gain.
pub fn si_sdr(reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<f64> {
    check_pair(reference, estimate)?;
    si_sdr_slice(&reference.samples, &estimate.samples)
}

pub(crate) fn si_sdr_slice(x: &[f64], y: &[f64]) -> Result<f64> {
    si_sdr_parts(x, y).map(|(value, ..)| value)
}

/// Shared core returning (value, alpha, signal energy, distortion energy).
fn si_sdr_parts(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let ex = energy(x);
    if ex == 0.0 {
        return Err(Error::InvalidArgument(
            "reference signal has zero energy".into(),
        ));
    }
    let alpha = dot(x, y) / ex;
    if alpha == 0.0 {
        return Err(Error::Domain(
            "estimate is orthogonal to the reference, scale-invariant ratio undefined".into(),
        ));
    }
    let s = alpha * alpha * ex;
    let d_raw: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let e = alpha * xi - yi;
            e * e
        })
        .sum();
    let d = d_raw + DISTORTION_FLOOR * s;
    Ok((DB_PER_LN * (s / d).ln(), alpha, s, d))
}

/// SI-SDR value with its gradient with respect to the estimate.
pub(crate) fn si_sdr_value_grad(x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (value, alpha, s, d) = si_sdr_parts(x, y)?;
    // d(value)/dy = c * (dS/dy / S - dD/dy / D) with dS/dy = 2 alpha x and,
    // since the residual is orthogonal to x, dD/dy = -2 e + 2 eps alpha x.
    let grad = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let e = alpha * xi - yi;
            let ds = 2.0 * alpha * xi;
            let dd = -2.0 * e + DISTORTION_FLOOR * ds;
            DB_PER_LN * (ds / s - dd / d)
        })
        .collect();
    Ok((value, grad))
}

/// Signal-to-noise ratio in dB, comparing the estimate to the reference as-is.
pub fn snr(reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<f64> {
    check_pair(reference, estimate)?;
    snr_slice(&reference.samples, &estimate.samples)
}

pub(crate) fn snr_slice(x: &[f64], y: &[f64]) -> Result<f64> {
    snr_parts(x, y).map(|(value, ..)| value)
}

fn snr_parts(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let ex = energy(x);
    if ex == 0.0 {
        return Err(Error::InvalidArgument(
            "reference signal has zero energy".into(),
        ));
    }
    let d_raw: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let e = xi - yi;
            e * e
        })
        .sum();
    let d = d_raw + DISTORTION_FLOOR * ex;
    Ok((DB_PER_LN * (ex / d).ln(), ex, d))
}

/// SNR value with its gradient with respect to the estimate.
pub(crate) fn snr_value_grad(x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (value, _ex, d) = snr_parts(x, y)?;
    // Only the distortion depends on y: d(value)/dy = c * 2 (x - y) / D.
    let grad = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| DB_PER_LN * 2.0 * (xi - yi) / d)
        .collect();
    Ok((value, grad))
}

/// SDR of the estimate against its best short-filter prediction from the
/// reference, in dB.
///
/// A filter fitted to map the reference onto the estimate defines the
/// explainable part; the ratio compares that part to what it misses. High
/// values mean the estimate is essentially a filtered copy of the reference.
pub fn projection_sdr(
    reference: &AudioBuffer,
    estimate: &AudioBuffer,
    spec: &FilterSpec,
) -> Result<f64> {
    check_pair(reference, estimate)?;
    let f = fit_wiener(reference, estimate, spec)?;
    let proj = apply_filter(&f, reference);
    if energy(&proj.samples) == 0.0 {
        return Err(Error::Domain(
            "estimate has no component predictable from the reference".into(),
        ));
    }
    snr_slice(&proj.samples, &estimate.samples)
}
