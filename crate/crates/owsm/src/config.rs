//! Simulation configuration.

use crate::error::{Error, Result};

/// All knobs of one simulation run.
///
/// Defaults follow the measured operating point: 256 subcarriers, 10 dB DC
/// bias, zero lower clip, no upper clip, no cyclic prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// FFT size N (even, at least 8).
    pub n_fft: usize,
    /// Cyclic prefix length.
    pub n_cp: usize,
    /// Constellation order M.
    pub m_order: usize,
    /// Number of LEDs, a power of two.
    pub n_tx: usize,
    /// Number of photodiodes.
    pub n_rx: usize,
    /// DC bias level in dB.
    pub bias_db: f64,
    /// Lower clip level L (electrical amplitude).
    pub clip_low: f64,
    /// Upper clip level U; may be +infinity.
    pub clip_high: f64,
    /// SNR sweep grid in dB, strictly increasing.
    pub snr_grid_db: Vec<f64>,
    /// Master seed; the full simulation output is a pure function of this
    /// config including the seed.
    pub master_seed: u64,
    /// Frame cap per operating point.
    pub max_frames: u64,
    /// Early-stop threshold on accumulated bit errors per point.
    pub target_bit_errors: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_fft: 256,
            n_cp: 0,
            m_order: 16,
            n_tx: 4,
            n_rx: 4,
            bias_db: 10.0,
            clip_low: 0.0,
            clip_high: f64::INFINITY,
            snr_grid_db: Vec::new(),
            master_seed: 1,
            max_frames: 10_000,
            target_bit_errors: 100,
        }
    }
}

impl SimConfig {
    /// Checks every structural invariant, reporting the offending field.
    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, reason: String) -> Error {
            Error::Parameter { name, reason }
        }
        if self.n_fft < 8 || !self.n_fft.is_multiple_of(2) {
            return Err(bad("n_fft", format!("{} is not even and >= 8", self.n_fft)));
        }
        if self.n_cp >= self.n_fft {
            return Err(bad(
                "n_cp",
                format!("{} must be smaller than n_fft = {}", self.n_cp, self.n_fft),
            ));
        }
        if !self.m_order.is_power_of_two() || self.m_order < 2 {
            return Err(bad(
                "m_order",
                format!("{} is not a power of two", self.m_order),
            ));
        }
        if !self.n_tx.is_power_of_two() {
            return Err(bad("n_tx", format!("{} is not a power of two", self.n_tx)));
        }
        if self.n_rx == 0 {
            return Err(bad("n_rx", "must be positive".into()));
        }
        if self.bias_db < 0.0 || !self.bias_db.is_finite() {
            return Err(bad("bias_db", format!("{} is negative", self.bias_db)));
        }
        if !self.clip_low.is_finite() {
            return Err(bad("clip_low", "must be finite".into()));
        }
        if self.clip_low.is_nan() || self.clip_high.is_nan() || self.clip_low >= self.clip_high {
            return Err(bad(
                "clip_high",
                format!(
                    "requires clip_low < clip_high, got [{}, {}]",
                    self.clip_low, self.clip_high
                ),
            ));
        }
        if !self.snr_grid_db.windows(2).all(|w| w[0] < w[1]) {
            return Err(bad("snr_db", "grid must be strictly increasing".into()));
        }
        if self.max_frames == 0 {
            return Err(bad("max_frames", "must be positive".into()));
        }
        if self.target_bit_errors == 0 {
            return Err(bad("target_errors", "must be positive".into()));
        }
        Ok(())
    }

    /// Bits per constellation symbol, log2(M).
    pub fn k_c(&self) -> usize {
        self.m_order.trailing_zeros() as usize
    }

    /// Bits per spatial symbol, log2(N_t).
    pub fn k_s(&self) -> usize {
        self.n_tx.trailing_zeros() as usize
    }

    /// Number of data-bearing subcarriers, N/2 - 1.
    pub fn data_subcarriers(&self) -> usize {
        self.n_fft / 2 - 1
    }
}
