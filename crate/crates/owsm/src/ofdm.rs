//! Real-valued DCO-OFDM framing shared by both transmit schemes.
//!
//! Covers the Hermitian spectral extension, the inverse/forward DFT pair (the
//! inverse transform carries the 1/N factor, the forward carries none), DC
//! biasing with double-sided clipping, and the closed-form statistics of the
//! biased-and-clipped signal.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Absolute tolerance on the Hermitian-symmetry invariants of a frame.
const SYMMETRY_TOL: f64 = 1e-12;
/// Largest imaginary residual tolerated when discarding the imaginary part
/// after the inverse transform.
const IMAG_TOL: f64 = 1e-9;

/// One OFDM symbol in the frequency domain, length N, Hermitian-symmetric
/// with null DC and Nyquist bins so its inverse transform is real.
#[derive(Debug, Clone)]
pub struct FrequencyFrame {
    s: Vec<Complex64>,
}

impl FrequencyFrame {
    /// Validates the spectral invariants: s(0) = s(N/2) = 0 and
    /// s(k) = conj(s(N-k)).
    pub fn new(s: Vec<Complex64>) -> Result<Self> {
        let n = s.len();
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::Dimension {
                context: "FrequencyFrame",
                expected: "even length >= 4".into(),
                got: n.to_string(),
            });
        }
        let scale = 1.0 + s.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let tol = SYMMETRY_TOL * scale;
        let mut residual: f64 = s[0].norm().max(s[n / 2].norm());
        for k in 1..n / 2 {
            residual = residual.max((s[k] - s[n - k].conj()).norm());
        }
        if residual > tol {
            return Err(Error::SymmetryViolated {
                residual,
                tolerance: tol,
            });
        }
        Ok(Self { s })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.s
    }
}

/// Places `q` on bins 1..N/2 and its reversed conjugate on bins N/2+1..N,
/// with zeros at DC and Nyquist.
pub fn hermitian_extend(q: &[Complex64], n_fft: usize) -> Result<FrequencyFrame> {
    let expected = n_fft / 2 - 1;
    if q.len() != expected {
        return Err(Error::Dimension {
            context: "hermitian_extend",
            expected: format!("{expected} data subcarriers"),
            got: q.len().to_string(),
        });
    }
    let mut s = vec![Complex64::new(0.0, 0.0); n_fft];
    for (k, &v) in q.iter().enumerate() {
        s[k + 1] = v;
        s[n_fft - 1 - k] = v.conj();
    }
    Ok(FrequencyFrame { s })
}

/// Forward/inverse N-point DFT pair with fixed scaling convention.
#[derive(Clone)]
pub struct Dft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft").field("n", &self.n).finish()
    }
}

impl Dft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Inverse transform of a Hermitian frame: x(n) = (1/N) sum_k s(k) e^{j2pi kn/N}.
    ///
    /// The imaginary part is discarded after checking it is a pure rounding
    /// residual.
    pub fn ifft_real(&self, frame: &FrequencyFrame) -> Result<Vec<f64>> {
        assert_eq!(frame.len(), self.n, "frame length does not match plan");
        let mut buf = frame.s.clone();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        let worst_im = buf.iter().map(|v| (v.im * scale).abs()).fold(0.0, f64::max);
        if worst_im > IMAG_TOL {
            return Err(Error::SymmetryViolated {
                residual: worst_im,
                tolerance: IMAG_TOL,
            });
        }
        Ok(buf.iter().map(|v| v.re * scale).collect())
    }

    /// Forward transform of a real vector, no 1/N factor.
    pub fn fft(&self, x: &[f64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n, "input length does not match plan");
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }
}

/// Standard deviation of the pre-clip time samples for a frame whose N-2 data
/// bins carry unit-average-power symbols split across `n_streams` parallel
/// streams: sigma^2 = (N-2)/(N^2 * n_streams).
pub fn preclip_sigma(n_fft: usize, n_streams: usize) -> f64 {
    ((n_fft as f64 - 2.0) / (n_fft as f64 * n_fft as f64 * n_streams as f64)).sqrt()
}

/// DC bias B = r*sigma with r = sqrt(10^(bias_db/10) - 1).
pub fn dc_bias_from_db(bias_db: f64, sigma: f64) -> Result<f64> {
    if bias_db < 0.0 {
        return Err(Error::Parameter {
            name: "bias_db",
            reason: format!("{bias_db} is negative"),
        });
    }
    let r = (10f64.powf(bias_db / 10.0) - 1.0).sqrt();
    Ok(r * sigma)
}

/// Clips a single value to [lo, hi].
#[inline]
pub fn clip_value(v: f64, lo: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

/// Element-wise (x + bias) clipped to [lo, hi].
pub fn bias_and_clip(x: &[f64], bias: f64, lo: f64, hi: f64) -> Vec<f64> {
    debug_assert!(lo < hi);
    x.iter().map(|&v| clip_value(v + bias, lo, hi)).collect()
}

/// Gaussian tail probability Q(x) = P(Z > x) for Z ~ N(0,1).
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Point masses accumulated at the clip edges: (mass at lo, mass at hi).
pub fn clip_atoms(sigma: f64, bias: f64, lo: f64, hi: f64) -> (f64, f64) {
    let lower = q_function((bias - lo) / sigma);
    let upper = if hi.is_infinite() {
        0.0
    } else {
        q_function((hi - bias) / sigma)
    };
    (lower, upper)
}

/// Distribution of a biased, clipped Gaussian sample: truncated normal
/// density strictly inside (lo, hi), point masses at the edges, zero outside.
pub fn clipped_pdf(v: f64, sigma: f64, bias: f64, lo: f64, hi: f64) -> f64 {
    let (at_lo, at_hi) = clip_atoms(sigma, bias, lo, hi);
    if v == lo {
        return at_lo;
    }
    if v == hi {
        return at_hi;
    }
    if v < lo || v > hi {
        return 0.0;
    }
    let z = (v - bias) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Second moment E{x_clipped^2} of a N(bias, sigma^2) sample clipped to
/// [lo, hi], in closed form. For an infinite upper clip the U-terms vanish.
pub fn clipped_signal_power(sigma: f64, bias: f64, lo: f64, hi: f64) -> f64 {
    let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let gauss = |v: f64| (-0.5 * v * v).exp();
    let zl = (lo - bias) / sigma;
    let mut power = sigma * inv_sqrt_2pi * (lo + bias) * gauss(zl)
        + (bias * bias - lo * lo + sigma * sigma) * q_function(zl)
        + lo * lo;
    if hi.is_finite() {
        let zu = (hi - bias) / sigma;
        power += -sigma * inv_sqrt_2pi * (hi + bias) * gauss(zu)
            + (hi * hi - bias * bias - sigma * sigma) * q_function(zu);
    }
    power
}

/// Prepends a copy of the last `n_cp` samples.
pub fn add_cp(x: &[f64], n_cp: usize) -> Result<Vec<f64>> {
    if n_cp >= x.len() {
        return Err(Error::Parameter {
            name: "n_cp",
            reason: format!(
                "{} must be smaller than the symbol length {}",
                n_cp,
                x.len()
            ),
        });
    }
    let mut out = Vec::with_capacity(x.len() + n_cp);
    out.extend_from_slice(&x[x.len() - n_cp..]);
    out.extend_from_slice(x);
    Ok(out)
}

/// Strips the `n_cp`-sample prefix; the exact left inverse of [`add_cp`].
pub fn remove_cp(y: &[f64], n_cp: usize) -> Result<Vec<f64>> {
    if n_cp >= y.len() {
        return Err(Error::Parameter {
            name: "n_cp",
            reason: format!("{} leaves no samples of {}", n_cp, y.len()),
        });
    }
    Ok(y[n_cp..].to_vec())
}

/// One modulated OFDM symbol: bipolar samples plus their biased, clipped
/// counterpart and the statistics the receiver priors are built from.
#[derive(Debug, Clone)]
pub struct TimeFrame {
    /// Pre-bias bipolar samples.
    pub x: Vec<f64>,
    /// Samples after biasing and clipping, all within [lo, hi].
    pub x_clipped: Vec<f64>,
    /// Analytic pre-clip standard deviation.
    pub sigma: f64,
    /// Applied DC bias B.
    pub bias: f64,
}

impl TimeFrame {
    /// Inverse-transforms `frame` and applies bias and clipping.
    pub fn modulate(
        frame: &FrequencyFrame,
        dft: &Dft,
        sigma: f64,
        bias: f64,
        lo: f64,
        hi: f64,
    ) -> Result<Self> {
        let x = dft.ifft_real(frame)?;
        let x_clipped = bias_and_clip(&x, bias, lo, hi);
        Ok(Self {
            x,
            x_clipped,
            sigma,
            bias,
        })
    }
}
