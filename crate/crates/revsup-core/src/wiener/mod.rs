//! Non-causal FIR Wiener filters.
//!
//! A filter spans taps tau in [-tau_nc, tau_c - 1]; negative taps let the
//! output look ahead in the input. Fits minimize the squared error over the
//! output window [0, T-1] with the input zero-padded outside it, plus a
//! relative diagonal loading, so a realizable target is recovered exactly up
//! to loading. Filters can be estimated per source against the same target
//! (independent) or jointly via the stacked block normal equations.

mod solve;

pub use solve::solve_symmetric_toeplitz;
pub(crate) use solve::{corr_taps, cross_corr, CholeskyFactor, NormalState};

use serde::{Deserialize, Serialize};

use crate::audio::{convolve, AudioBuffer};
use crate::error::{Error, Result};

/// Tap layout and loading for a Wiener fit.
///
/// `diagonal_loading` is relative: the loaded normal matrix is
/// `M + loading * M[0,0] * I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Non-causal taps (tau < 0).
    pub tau_nc: usize,
    /// Causal taps (tau >= 0), at least 1.
    pub tau_c: usize,
    pub diagonal_loading: f64,
}

impl Default for FilterSpec {
    /// 512 coefficients split 100 non-causal / 412 causal, loading 1e-8.
    fn default() -> Self {
        Self {
            tau_nc: 100,
            tau_c: 412,
            diagonal_loading: 1e-8,
        }
    }
}

impl FilterSpec {
    pub fn new(tau_nc: usize, tau_c: usize) -> Result<Self> {
        let spec = Self {
            tau_nc,
            tau_c,
            diagonal_loading: 1e-8,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n_taps(&self) -> usize {
        self.tau_nc + self.tau_c
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_c < 1 {
            return Err(Error::InvalidArgument(
                "filter needs at least one causal tap (tau_c >= 1)".into(),
            ));
        }
        if !self.diagonal_loading.is_finite() || self.diagonal_loading < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "diagonal_loading must be finite and non-negative, got {}",
                self.diagonal_loading
            )));
        }
        Ok(())
    }
}

/// A fitted filter: `coefficients[i]` is the tap at `tau = i - tau_nc`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FirFilterRepr", into = "FirFilterRepr")]
pub struct FirFilter {
    pub tau_nc: usize,
    pub coefficients: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FirFilterRepr {
    tau_nc: usize,
    tau_c: usize,
    coefficients: Vec<f64>,
}

impl TryFrom<FirFilterRepr> for FirFilter {
    type Error = String;
    fn try_from(r: FirFilterRepr) -> std::result::Result<Self, String> {
        if r.tau_nc + r.tau_c != r.coefficients.len() {
            return Err(format!(
                "tau_nc {} + tau_c {} does not match {} coefficients",
                r.tau_nc,
                r.tau_c,
                r.coefficients.len()
            ));
        }
        Ok(FirFilter {
            tau_nc: r.tau_nc,
            coefficients: r.coefficients,
        })
    }
}

impl From<FirFilter> for FirFilterRepr {
    fn from(f: FirFilter) -> Self {
        FirFilterRepr {
            tau_nc: f.tau_nc,
            tau_c: f.tau_c(),
            coefficients: f.coefficients,
        }
    }
}

impl FirFilter {
    pub fn new(tau_nc: usize, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() <= tau_nc {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients cannot hold tau_nc {} plus at least one causal tap",
                coefficients.len(),
                tau_nc
            )));
        }
        Ok(Self {
            tau_nc,
            coefficients,
        })
    }

    pub fn tau_c(&self) -> usize {
        self.coefficients.len() - self.tau_nc
    }

    pub fn zero(spec: &FilterSpec) -> Self {
        Self {
            tau_nc: spec.tau_nc,
            coefficients: vec![0.0; spec.n_taps()],
        }
    }

    pub fn l2_norm(&self) -> f64 {
        solve::norm(&self.coefficients)
    }

    /// Filter with taps w'(tau) = w(-tau); applying it is the adjoint of
    /// applying `self` over the same output window.
    pub(crate) fn reversed(&self) -> Self {
        Self {
            tau_nc: self.tau_c() - 1,
            coefficients: self.coefficients.iter().rev().copied().collect(),
        }
    }
}

/// The two separated left-channel estimates a loss consumes.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatePair {
    pub first: AudioBuffer,
    pub second: AudioBuffer,
}

impl EstimatePair {
    pub fn new(first: AudioBuffer, second: AudioBuffer) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::InvalidArgument(format!(
                "estimates must have equal length, got {} and {}",
                first.len(),
                second.len()
            )));
        }
        if first.sample_rate != second.sample_rate {
            return Err(Error::InvalidArgument(format!(
                "estimates must share a sample rate, got {} and {}",
                first.sample_rate, second.sample_rate
            )));
        }
        if first.is_empty() {
            return Err(Error::InvalidArgument("estimates must be non-empty".into()));
        }
        Ok(Self { first, second })
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }
}

/// y(t) = sum_tau w(tau) x(t - tau) over t in [0, len(x) - 1], zero-padded.
/// Negative taps reach forward in time.
pub fn apply_filter(filter: &FirFilter, x: &AudioBuffer) -> AudioBuffer {
    AudioBuffer {
        samples: apply_filter_slice(filter, &x.samples),
        sample_rate: x.sample_rate,
    }
}

pub(crate) fn apply_filter_slice(filter: &FirFilter, x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    // Full convolution then a shift by tau_nc keeps one code path for the
    // direct and FFT variants.
    let full = convolve(x, &filter.coefficients).expect("non-empty by construction");
    full[filter.tau_nc..filter.tau_nc + x.len()].to_vec()
}

fn is_all_zero(x: &[f64]) -> bool {
    x.iter().all(|&v| v == 0.0)
}

fn check_fit_inputs(input: &AudioBuffer, target: &AudioBuffer, spec: &FilterSpec) -> Result<()> {
    spec.validate()?;
    if input.len() != target.len() {
        return Err(Error::InvalidArgument(format!(
            "input length {} does not match target length {}",
            input.len(),
            target.len()
        )));
    }
    if input.is_empty() {
        return Err(Error::InvalidArgument("fit inputs must be non-empty".into()));
    }
    if input.sample_rate != target.sample_rate {
        return Err(Error::InvalidArgument(format!(
            "input sample rate {} does not match target {}",
            input.sample_rate, target.sample_rate
        )));
    }
    Ok(())
}

/// Least-squares fit of `w * input` to `target` over the output window, with
/// relative diagonal loading.
pub fn fit_wiener(input: &AudioBuffer, target: &AudioBuffer, spec: &FilterSpec) -> Result<FirFilter> {
    check_fit_inputs(input, target, spec)?;
    fit_wiener_slice(&input.samples, &target.samples, spec).map(|(f, _)| f)
}

pub(crate) fn fit_wiener_slice(
    x: &[f64],
    target: &[f64],
    spec: &FilterSpec,
) -> Result<(FirFilter, NormalState)> {
    if is_all_zero(x) {
        return Err(Error::DegenerateInput(
            "fit input signal is identically zero".into(),
        ));
    }
    let state = NormalState::new(x, spec.tau_nc, spec.tau_c, spec.diagonal_loading);
    let r = corr_taps(x, target, spec.tau_nc, spec.tau_c);
    let w = state.solve(&r)?;
    Ok((
        FirFilter {
            tau_nc: spec.tau_nc,
            coefficients: w,
        },
        state,
    ))
}

/// Per-source fits of each estimate against the same target. An all-zero
/// estimate maps to the zero filter; it is an error only if both are zero.
pub fn fit_independent(
    estimates: &EstimatePair,
    target: &AudioBuffer,
    spec: &FilterSpec,
) -> Result<[FirFilter; 2]> {
    check_fit_inputs(&estimates.first, target, spec)?;
    let z1 = is_all_zero(&estimates.first.samples);
    let z2 = is_all_zero(&estimates.second.samples);
    if z1 && z2 {
        return Err(Error::DegenerateInput(
            "both estimates are identically zero".into(),
        ));
    }
    let fit = |x: &AudioBuffer, zero: bool| -> Result<FirFilter> {
        if zero {
            Ok(FirFilter::zero(spec))
        } else {
            fit_wiener_slice(&x.samples, &target.samples, spec).map(|(f, _)| f)
        }
    };
    Ok([fit(&estimates.first, z1)?, fit(&estimates.second, z2)?])
}

/// Joint fit: both filters minimize one reconstruction error through the
/// stacked 2x2-block normal equations, each diagonal block loaded relative to
/// its own estimate energy.
pub fn fit_joint(
    estimates: &EstimatePair,
    target: &AudioBuffer,
    spec: &FilterSpec,
) -> Result<[FirFilter; 2]> {
    check_fit_inputs(&estimates.first, target, spec)?;
    let z1 = is_all_zero(&estimates.first.samples);
    let z2 = is_all_zero(&estimates.second.samples);
    if z1 && z2 {
        return Err(Error::DegenerateInput(
            "both estimates are identically zero".into(),
        ));
    }
    // A zero estimate contributes nothing; the joint problem degenerates to a
    // single fit and the zero filter.
    if z1 || z2 {
        let live = if z1 { &estimates.second } else { &estimates.first };
        let (f, _) = fit_wiener_slice(&live.samples, &target.samples, spec)?;
        return Ok(if z1 {
            [FirFilter::zero(spec), f]
        } else {
            [f, FirFilter::zero(spec)]
        });
    }
    let state = JointState::new(
        &estimates.first.samples,
        &estimates.second.samples,
        spec,
    )?;
    let r1 = corr_taps(&estimates.first.samples, &target.samples, spec.tau_nc, spec.tau_c);
    let r2 = corr_taps(&estimates.second.samples, &target.samples, spec.tau_nc, spec.tau_c);
    let (w1, w2) = state.solve_pair(&r1, &r2);
    Ok([
        FirFilter {
            tau_nc: spec.tau_nc,
            coefficients: w1,
        },
        FirFilter {
            tau_nc: spec.tau_nc,
            coefficients: w2,
        },
    ])
}

/// Factored joint normal equations, reusable for adjoint solves.
pub(crate) struct JointState {
    factor: CholeskyFactor,
    n: usize,
}

impl JointState {
    pub(crate) fn new(x1: &[f64], x2: &[f64], spec: &FilterSpec) -> Result<Self> {
        let (tau_nc, tau_c) = (spec.tau_nc, spec.tau_c);
        let n = spec.n_taps();
        let rho11 = solve::autocorr(x1, n - 1);
        let rho22 = solve::autocorr(x2, n - 1);
        let rho12 = cross_corr(x1, x2, n - 1);
        let c11 = solve::boundary_correction(x1, x1, tau_nc, tau_c);
        let c22 = solve::boundary_correction(x2, x2, tau_nc, tau_c);
        let c12 = solve::boundary_correction(x1, x2, tau_nc, tau_c);
        let lam1 = spec.diagonal_loading * rho11[0];
        let lam2 = spec.diagonal_loading * rho22[0];

        let m = 2 * n;
        let mut a = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                let lag = i.abs_diff(j);
                a[i * m + j] = rho11[lag] - c11[i * n + j];
                a[(n + i) * m + (n + j)] = rho22[lag] - c22[i * n + j];
                let d = i as isize - j as isize;
                let m12 = rho12[(n as isize - 1 + d) as usize] - c12[i * n + j];
                a[i * m + (n + j)] = m12;
                a[(n + j) * m + i] = m12;
            }
            a[i * m + i] += lam1;
            a[(n + i) * m + (n + i)] += lam2;
        }
        let factor = CholeskyFactor::new(&a, m)?;
        Ok(Self { factor, n })
    }

    pub(crate) fn solve_pair(&self, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut rhs = Vec::with_capacity(2 * self.n);
        rhs.extend_from_slice(r1);
        rhs.extend_from_slice(r2);
        let w = self.factor.solve(&rhs);
        (w[..self.n].to_vec(), w[self.n..].to_vec())
    }
}

/// m_hat = w_1 * x_1 + w_2 * x_2 over the estimates' window.
pub fn reconstruct(estimates: &EstimatePair, filters: &[FirFilter; 2]) -> Result<AudioBuffer> {
    for f in filters {
        if f.coefficients.is_empty() {
            return Err(Error::InvalidArgument("empty filter".into()));
        }
    }
    let y1 = apply_filter_slice(&filters[0], &estimates.first.samples);
    let y2 = apply_filter_slice(&filters[1], &estimates.second.samples);
    let samples = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
    Ok(AudioBuffer {
        samples,
        sample_rate: estimates.first.sample_rate,
    })
}
