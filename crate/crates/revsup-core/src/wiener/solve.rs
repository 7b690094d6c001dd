//! Linear-algebra internals for the Wiener fits.
//!
//! The least-squares normal matrix over the output window is a symmetric
//! Toeplitz matrix minus a small boundary correction (the input is zero-padded
//! outside the window, so only taps of equal sign couple across an edge).
//! The default solve runs Levinson-Durbin on the Toeplitz part and iteratively
//! refines against the corrected matrix; a dense Cholesky covers the cases
//! where refinement cannot contract (near-singular spectra).

use crate::error::{Error, Result};

/// Solves `T x = b` for a symmetric positive definite Toeplitz matrix given by
/// its first column. Generalized Levinson-Durbin recursion, O(n^2).
pub fn solve_symmetric_toeplitz(col: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = col.len();
    if n == 0 || rhs.len() != n {
        return Err(Error::InvalidArgument(format!(
            "toeplitz solve needs matching sizes, got col {} rhs {}",
            n,
            rhs.len()
        )));
    }
    let t0 = col[0];
    if t0 <= 0.0 || !t0.is_finite() {
        return Err(Error::Internal(format!(
            "toeplitz matrix is not positive definite: leading entry {t0}"
        )));
    }
    // Normalize to a unit diagonal; the solution is unaffected.
    let r: Vec<f64> = col.iter().map(|&c| c / t0).collect();
    let b: Vec<f64> = rhs.iter().map(|&v| v / t0).collect();

    let mut x = vec![0.0; n];
    x[0] = b[0];
    if n == 1 {
        return Ok(x);
    }
    // y solves the order-k Yule-Walker system; beta tracks the prediction
    // error and must stay positive for a positive definite matrix.
    let mut y = vec![0.0; n];
    y[0] = -r[1];
    let mut alpha = -r[1];
    let mut beta = 1.0;
    let mut scratch = vec![0.0; n];

    for k in 1..n {
        beta *= 1.0 - alpha * alpha;
        if beta <= 0.0 || !beta.is_finite() {
            return Err(Error::Internal(format!(
                "levinson breakdown at order {k}: prediction error {beta}"
            )));
        }
        let mut dot = 0.0;
        for i in 0..k {
            dot += r[k - i] * x[i];
        }
        let mu = (b[k] - dot) / beta;
        for i in 0..k {
            scratch[i] = x[i] + mu * y[k - 1 - i];
        }
        x[..k].copy_from_slice(&scratch[..k]);
        x[k] = mu;

        if k < n - 1 {
            let mut dot = 0.0;
            for i in 0..k {
                dot += r[k - i] * y[i];
            }
            alpha = -(r[k + 1] + dot) / beta;
            for i in 0..k {
                scratch[i] = y[i] + alpha * y[k - 1 - i];
            }
            y[..k].copy_from_slice(&scratch[..k]);
            y[k] = alpha;
        }
    }
    Ok(x)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix,
/// row-major. The factor is retained so gradient passes can re-solve with the
/// same matrix cheaply.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    l: Vec<f64>,
    n: usize,
}

impl CholeskyFactor {
    pub fn new(a: &[f64], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n, "matrix storage mismatch");
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Internal(format!(
                            "cholesky breakdown at pivot {i}: {s}"
                        )));
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Self { l, n })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "rhs length mismatch");
        let n = self.n;
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        y
    }
}

/// Autocorrelation of the zero-padded signal at lags 0..=max_lag.
pub fn autocorr(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|l| {
            if l >= x.len() {
                0.0
            } else {
                dot(&x[..x.len() - l], &x[l..])
            }
        })
        .collect()
}

/// Cross-correlation rho_ab(d) = sum_t a(t) b(t+d) of two equal-length
/// zero-padded signals, for d in -(max_lag)..=max_lag. Index `max_lag + d`.
pub fn cross_corr(a: &[f64], b: &[f64], max_lag: usize) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "cross_corr expects equal lengths");
    let t = a.len();
    let mut out = vec![0.0; 2 * max_lag + 1];
    for d in 0..=max_lag {
        if d < t {
            out[max_lag + d] = dot(&a[..t - d], &b[d..]);
            out[max_lag - d] = dot(&a[d..], &b[..t - d]);
        }
    }
    out
}

/// Correlation of a length-T signal against tap shifts of another over the
/// output window: r_i = sum_{t=0}^{T-1} x(t - tau_i) z(t) with tau_i = i - tau_nc.
/// This is both the normal-equation right-hand side and the adjoint of
/// filtering in the coefficient direction.
pub fn corr_taps(x: &[f64], z: &[f64], tau_nc: usize, tau_c: usize) -> Vec<f64> {
    assert_eq!(x.len(), z.len(), "corr_taps expects equal lengths");
    let t = x.len();
    let n = tau_nc + tau_c;
    let mut r = vec![0.0; n];
    for (i, ri) in r.iter_mut().enumerate() {
        let tau = i as isize - tau_nc as isize;
        if tau >= 0 {
            let tau = tau as usize;
            if tau < t {
                *ri = dot(&z[tau..], &x[..t - tau]);
            }
        } else {
            let a = (-tau) as usize;
            if a < t {
                *ri = dot(&z[..t - a], &x[a..]);
            }
        }
    }
    r
}

/// Boundary correction C with C_ij = sum over t outside [0, T-1] of
/// xa(t - tau_i) xb(t - tau_j): the part the full-range correlations
/// over-count relative to the output-window least squares. Only taps of equal
/// sign couple, and every diagonal of each block is a running partial
/// correlation of the signal heads/tails, so assembly is O(n^2).
pub fn boundary_correction(xa: &[f64], xb: &[f64], tau_nc: usize, tau_c: usize) -> Vec<f64> {
    assert_eq!(xa.len(), xb.len(), "boundary_correction expects equal lengths");
    let t = xa.len();
    let n = tau_nc + tau_c;
    let mut c = vec![0.0; n * n];

    // Negative-tap block: tau_i = -a, tau_j = -b with a, b >= 1.
    // C = sum_{v=0}^{min-1} xa(v + d) xb(v) on the diagonal d = b_col ... see
    // derivation: for a = b + d (d >= 0), C(a, b) = sum_{v<b} xa(v+d) xb(v).
    for d in 0..tau_nc {
        // d >= 0: row tap deeper (a = b + d).
        let mut acc = 0.0;
        for b in 1..=tau_nc.saturating_sub(d) {
            let v = b - 1;
            if v + d < t {
                acc += xa[v + d] * xb[v];
            }
            let a = b + d;
            let i = tau_nc - a; // tau_i = i - tau_nc = -a
            let j = tau_nc - b;
            c[i * n + j] = acc;
        }
        if d > 0 {
            // d < 0 case by symmetry of roles: b = a + d.
            let mut acc = 0.0;
            for a in 1..=tau_nc.saturating_sub(d) {
                let v = a - 1;
                if v + d < t {
                    acc += xa[v] * xb[v + d];
                }
                let b = a + d;
                let i = tau_nc - a;
                let j = tau_nc - b;
                c[i * n + j] = acc;
            }
        }
    }

    // Positive-tap block: tau_i = p, tau_j = q with p, q >= 1.
    // For p = q + d (d >= 0), C(p, q) = sum_{u<q} xa(T-1-u-d) xb(T-1-u).
    let qmax = tau_c.saturating_sub(1);
    for d in 0..tau_c {
        let mut acc = 0.0;
        for q in 1..=qmax.saturating_sub(d) {
            let u = q - 1;
            if u + d < t {
                acc += xa[t - 1 - u - d] * xb[t - 1 - u];
            }
            let p = q + d;
            let i = tau_nc + p;
            let j = tau_nc + q;
            c[i * n + j] = acc;
        }
        if d > 0 {
            let mut acc = 0.0;
            for p in 1..=qmax.saturating_sub(d) {
                let u = p - 1;
                if u + d < t {
                    acc += xa[t - 1 - u] * xb[t - 1 - u - d];
                }
                let q = p + d;
                let i = tau_nc + p;
                let j = tau_nc + q;
                c[i * n + j] = acc;
            }
        }
    }
    c
}

/// Normal-equation state for one input signal: Toeplitz column, boundary
/// correction and loading. `solve` is reusable for any right-hand side, which
/// the gradient pass exploits (the adjoint of a symmetric solve is a solve
/// with the same matrix).
#[derive(Clone, Debug)]
pub struct NormalState {
    pub col: Vec<f64>,
    pub corr: Vec<f64>,
    pub lambda: f64,
    pub n: usize,
}

const REFINE_TOL: f64 = 1e-14;
const REFINE_MAX_ITERS: usize = 40;

impl NormalState {
    pub fn new(x: &[f64], tau_nc: usize, tau_c: usize, loading: f64) -> Self {
        let n = tau_nc + tau_c;
        let col = autocorr(x, n - 1);
        let corr = boundary_correction(x, x, tau_nc, tau_c);
        let lambda = loading * col[0];
        Self {
            col,
            corr,
            lambda,
            n,
        }
    }

    /// (M + lambda I) v for the corrected matrix M = Toeplitz(col) - C.
    fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = self.lambda * v[i];
            for (j, &vj) in v.iter().enumerate() {
                let lag = i.abs_diff(j);
                s += (self.col[lag] - self.corr[i * n + j]) * vj;
            }
            out[i] = s;
        }
        out
    }

    fn dense_matrix(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = self.col[i.abs_diff(j)] - self.corr[i * n + j];
            }
            a[i * n + i] += self.lambda;
        }
        a
    }

    /// Levinson on the Toeplitz part, refined against the corrected matrix.
    /// Falls back to dense Cholesky when refinement cannot contract.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut pcol = self.col.clone();
        pcol[0] += self.lambda;
        let rhs_norm = norm(rhs).max(f64::MIN_POSITIVE);

        if let Ok(mut w) = solve_symmetric_toeplitz(&pcol, rhs) {
            let mut prev = f64::INFINITY;
            for _ in 0..REFINE_MAX_ITERS {
                let av = self.matvec(&w);
                let resid: Vec<f64> = rhs.iter().zip(&av).map(|(b, a)| b - a).collect();
                let rn = norm(&resid);
                if rn <= REFINE_TOL * rhs_norm {
                    return Ok(w);
                }
                if !rn.is_finite() || rn >= 0.5 * prev {
                    break; // not contracting; the correction is not small here
                }
                prev = rn;
                match solve_symmetric_toeplitz(&pcol, &resid) {
                    Ok(dw) => {
                        for (wi, di) in w.iter_mut().zip(&dw) {
                            *wi += di;
                        }
                    }
                    Err(_) => break,
                }
            }
        }
        let factor = CholeskyFactor::new(&self.dense_matrix(), self.n)?;
        Ok(factor.solve(rhs))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
