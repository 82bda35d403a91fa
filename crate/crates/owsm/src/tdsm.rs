//! Time-domain spatial modulation transceiver.
//!
//! A single OFDM stream carries the constellation bits; every time-domain
//! sample is routed to the LED selected by that sample's spatial bits, so at
//! most one LED emits per instant. Reception offers two per-sample detectors:
//! the joint MAP estimator of (sample value, LED index) built on the clipped
//! Gaussian prior, and the suboptimal ZF rule (invert the channel, take the
//! largest entry).

use crate::bits::{bits_to_index, push_index_bits, BitBuffer};
use crate::channel::{ChannelMatrix, NoiseSpec};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::fdsm::ZfEqualizer;
use crate::ofdm::{
    clip_value, clipped_signal_power, dc_bias_from_db, hermitian_extend, preclip_sigma, Dft,
    TimeFrame,
};
use crate::qam::QamConstellation;
use crate::rng::RandomStream;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Which per-sample detector the TD-SM receiver runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdDetector {
    Map,
    Zf,
}

/// One encoded TD-SM frame.
#[derive(Debug, Clone)]
pub struct TdsmFrame {
    /// (N/2-1) constellation-bearing subcarriers.
    pub q: Vec<Complex64>,
    /// The payload bits the frame encodes: (N/2-1) k_c constellation bits
    /// followed by N k_s spatial bits.
    pub payload_bits: BitBuffer,
    /// Biased, clipped OFDM samples, length N.
    pub x_clipped: Vec<f64>,
    /// Active LED per time sample, length N.
    pub led_schedule: Vec<usize>,
    /// N x N_t transmit matrix; row t holds x_clipped[t] in the scheduled
    /// column, zeros elsewhere.
    pub tx_matrix: DMatrix<f64>,
}

/// Spectral efficiency in bpcu from raw frame parameters:
/// k_c/2 * (N-2)/N * N/(N+N_cp) + k_s.
pub fn spectral_efficiency_raw(k_c: usize, k_s: usize, n_fft: usize, n_cp: usize) -> f64 {
    let g_f = (n_fft as f64 - 2.0) / n_fft as f64;
    let g_t = n_fft as f64 / (n_fft + n_cp) as f64;
    0.5 * k_c as f64 * g_f * g_t + k_s as f64
}

/// Spectral efficiency of the configured TD-SM link.
pub fn spectral_efficiency(cfg: &SimConfig) -> f64 {
    spectral_efficiency_raw(cfg.k_c(), cfg.k_s(), cfg.n_fft, cfg.n_cp)
}

/// MAP estimate of the transmitted sample conditioned on LED `i`:
/// the minimizer of sigma^2 ||y - h_i x||^2 + sigma_n^2 (x - bias)^2 clipped
/// to [lo, hi].
pub fn map_estimate_sample(
    y: &[f64],
    h_col: &[f64],
    sigma: f64,
    sigma_n: f64,
    bias: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let dot: f64 = y.iter().zip(h_col).map(|(a, b)| a * b).sum();
    let norm_sq: f64 = h_col.iter().map(|v| v * v).sum();
    let denom = sigma * sigma * norm_sq + sigma_n * sigma_n;
    if denom == 0.0 {
        return Err(Error::DegenerateColumn { index: 0 });
    }
    let raw = (sigma * sigma * dot + bias * sigma_n * sigma_n) / denom;
    Ok(clip_value(raw, lo, hi))
}

/// Per-sample joint MAP detector with per-channel precomputation.
#[derive(Debug, Clone)]
pub struct MapDetector {
    columns: Vec<Vec<f64>>,
    norms_sq: Vec<f64>,
    sigma: f64,
    sigma_n: f64,
    bias: f64,
    lo: f64,
    hi: f64,
}

impl MapDetector {
    pub fn new(
        h: &ChannelMatrix,
        sigma: f64,
        sigma_n: f64,
        bias: f64,
        lo: f64,
        hi: f64,
    ) -> Result<Self> {
        let m = h.matrix();
        let columns: Vec<Vec<f64>> = (0..m.ncols())
            .map(|i| m.column(i).iter().cloned().collect())
            .collect();
        let norms_sq: Vec<f64> = columns
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum())
            .collect();
        if sigma_n == 0.0 {
            if let Some(idx) = norms_sq.iter().position(|&n| n == 0.0) {
                return Err(Error::DegenerateColumn { index: idx });
            }
        }
        Ok(Self {
            columns,
            norms_sq,
            sigma,
            sigma_n,
            bias,
            lo,
            hi,
        })
    }

    /// Estimates (LED index, sample value) for one received column.
    ///
    /// Each candidate index gets its conditional MAP sample estimate; the
    /// index minimizing ||y - h_i x^i||^2 + (sigma_n^2 x^i / sigma^2)(x^i - 2 bias)
    /// wins, ties to the lowest index.
    pub fn detect(&self, y: &[f64]) -> (usize, f64) {
        let s2 = self.sigma * self.sigma;
        let n2 = self.sigma_n * self.sigma_n;
        let y_norm_sq: f64 = y.iter().map(|v| v * v).sum();
        let mut best_idx = 0usize;
        let mut best_metric = f64::INFINITY;
        let mut best_x = self.lo;
        for (i, col) in self.columns.iter().enumerate() {
            let dot: f64 = y.iter().zip(col).map(|(a, b)| a * b).sum();
            let x = clip_value(
                (s2 * dot + self.bias * n2) / (s2 * self.norms_sq[i] + n2),
                self.lo,
                self.hi,
            );
            // ||y - h_i x||^2 expanded around the precomputed norms.
            let residual = y_norm_sq - 2.0 * x * dot + x * x * self.norms_sq[i];
            let metric = residual + (n2 * x / s2) * (x - 2.0 * self.bias);
            if metric < best_metric {
                best_metric = metric;
                best_idx = i;
                best_x = x;
            }
        }
        (best_idx, best_x)
    }
}

/// Suboptimal ZF rule: invert the channel, pick the largest entry, clip it.
pub fn zf_detect_td(y: &[f64], equalizer: &ZfEqualizer, lo: f64, hi: f64) -> (usize, f64) {
    let z = equalizer.equalize_column(y);
    let mut best = 0usize;
    for (i, &v) in z.iter().enumerate() {
        if v > z[best] {
            best = i;
        }
    }
    (best, clip_value(z[best], lo, hi))
}

/// Receiver state prepared once per (channel, noise level, detector) and
/// reused across frames.
#[derive(Debug, Clone)]
pub enum TdReceiver {
    Map(MapDetector),
    Zf {
        equalizer: ZfEqualizer,
        lo: f64,
        hi: f64,
    },
}

impl TdReceiver {
    fn detect(&self, y: &[f64]) -> (usize, f64) {
        match self {
            TdReceiver::Map(det) => det.detect(y),
            TdReceiver::Zf { equalizer, lo, hi } => zf_detect_td(y, equalizer, *lo, *hi),
        }
    }
}

/// TD-SM modulator/demodulator bound to one configuration.
#[derive(Debug, Clone)]
pub struct TdsmModem {
    cfg: SimConfig,
    constellation: QamConstellation,
    dft: Dft,
    sigma: f64,
    bias: f64,
}

impl TdsmModem {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let constellation = QamConstellation::build(cfg.m_order)?;
        let sigma = preclip_sigma(cfg.n_fft, 1);
        let bias = dc_bias_from_db(cfg.bias_db, sigma)?;
        Ok(Self {
            cfg: cfg.clone(),
            constellation,
            dft: Dft::new(cfg.n_fft),
            sigma,
            bias,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn constellation(&self) -> &QamConstellation {
        &self.constellation
    }

    /// Analytic pre-clip standard deviation of the single OFDM stream.
    pub fn preclip_sigma(&self) -> f64 {
        self.sigma
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Payload bits per frame: (N/2-1) k_c + N k_s.
    pub fn payload_bits(&self) -> usize {
        self.cfg.data_subcarriers() * self.cfg.k_c() + self.cfg.n_fft * self.cfg.k_s()
    }

    /// Second moment of the shared OFDM stream after bias and clip, which is
    /// also the total electrical transmit power of the scheme.
    pub fn total_tx_power(&self) -> f64 {
        clipped_signal_power(self.sigma, self.bias, self.cfg.clip_low, self.cfg.clip_high)
    }

    /// Average transmitted electrical power per LED, total / N_t.
    pub fn per_led_power(&self) -> f64 {
        self.total_tx_power() / self.cfg.n_tx as f64
    }

    /// Encodes a payload: constellation bits modulate the OFDM stream,
    /// spatial bits route each time sample to an LED.
    pub fn encode(&self, bits: &BitBuffer) -> Result<TdsmFrame> {
        let rows = self.cfg.data_subcarriers();
        let n = self.cfg.n_fft;
        let k_c = self.cfg.k_c();
        let k_s = self.cfg.k_s();
        let expected = rows * k_c + n * k_s;
        if bits.len() != expected {
            return Err(Error::BitLength {
                expected,
                got: bits.len(),
            });
        }
        let (bit_slice, spatial_slice) = bits.as_slice().split_at(rows * k_c);
        let q: Vec<Complex64> = bit_slice
            .chunks(k_c)
            .map(|chunk| self.constellation.map_bits(chunk))
            .collect::<Result<_>>()?;
        let frame = hermitian_extend(&q, n)?;
        let time = TimeFrame::modulate(
            &frame,
            &self.dft,
            self.sigma,
            self.bias,
            self.cfg.clip_low,
            self.cfg.clip_high,
        )?;
        let led_schedule: Vec<usize> = if k_s == 0 {
            vec![0; n]
        } else {
            spatial_slice.chunks(k_s).map(bits_to_index).collect()
        };
        let mut tx = DMatrix::zeros(n, self.cfg.n_tx);
        for (t, (&led, &v)) in led_schedule.iter().zip(&time.x_clipped).enumerate() {
            tx[(t, led)] = v;
        }
        Ok(TdsmFrame {
            q,
            payload_bits: bits.clone(),
            x_clipped: time.x_clipped,
            led_schedule,
            tx_matrix: tx,
        })
    }

    /// Propagates a frame column by column: Y(:,t) = h_{i(t)} x(t) + noise.
    pub fn transmit(
        &self,
        frame: &TdsmFrame,
        h: &ChannelMatrix,
        noise: NoiseSpec,
        stream: &mut RandomStream,
    ) -> Result<DMatrix<f64>> {
        if h.n_tx() != self.cfg.n_tx {
            return Err(Error::Dimension {
                context: "tdsm transmit",
                expected: format!("{} channel columns", self.cfg.n_tx),
                got: h.n_tx().to_string(),
            });
        }
        let m = h.matrix();
        let n_rx = m.nrows();
        let n = self.cfg.n_fft;
        let mut y = DMatrix::zeros(n_rx, n);
        for t in 0..n {
            let led = frame.led_schedule[t];
            let x = frame.x_clipped[t];
            for j in 0..n_rx {
                y[(j, t)] = m[(j, led)] * x;
            }
        }
        crate::channel::add_awgn(&mut y, noise, stream);
        Ok(y)
    }

    /// Builds the per-point receiver for the chosen detector.
    pub fn receiver(
        &self,
        h: &ChannelMatrix,
        sigma_n: f64,
        detector: TdDetector,
    ) -> Result<TdReceiver> {
        let lo = self.cfg.clip_low;
        let hi = self.cfg.clip_high;
        match detector {
            TdDetector::Map => Ok(TdReceiver::Map(MapDetector::new(
                h, self.sigma, sigma_n, self.bias, lo, hi,
            )?)),
            TdDetector::Zf => {
                if h.n_rx() != h.n_tx() {
                    return Err(Error::Dimension {
                        context: "tdsm zf detect",
                        expected: "square channel".into(),
                        got: format!("{}x{}", h.n_rx(), h.n_tx()),
                    });
                }
                Ok(TdReceiver::Zf {
                    equalizer: ZfEqualizer::new(h)?,
                    lo,
                    hi,
                })
            }
        }
    }

    /// Per-sample detection over the whole frame with a prepared receiver.
    pub fn detect_frame_prepared(
        &self,
        y: &DMatrix<f64>,
        receiver: &TdReceiver,
    ) -> Result<(Vec<usize>, Vec<f64>)> {
        let n = self.cfg.n_fft;
        if y.ncols() != n {
            return Err(Error::Dimension {
                context: "tdsm detect",
                expected: format!("{n} columns"),
                got: y.ncols().to_string(),
            });
        }
        let mut indices = Vec::with_capacity(n);
        let mut samples = Vec::with_capacity(n);
        let mut column = vec![0.0; y.nrows()];
        for t in 0..n {
            for (j, v) in column.iter_mut().enumerate() {
                *v = y[(j, t)];
            }
            let (idx, x) = receiver.detect(&column);
            indices.push(idx);
            samples.push(x);
        }
        Ok((indices, samples))
    }

    /// Per-sample detection over the whole frame. Returns the index and
    /// sample-value estimate vectors.
    pub fn detect_frame(
        &self,
        y: &DMatrix<f64>,
        h: &ChannelMatrix,
        sigma_n: f64,
        detector: TdDetector,
    ) -> Result<(Vec<usize>, Vec<f64>)> {
        if y.nrows() != h.n_rx() {
            return Err(Error::Dimension {
                context: "tdsm detect",
                expected: format!("{} receive rows", h.n_rx()),
                got: y.nrows().to_string(),
            });
        }
        let receiver = self.receiver(h, sigma_n, detector)?;
        self.detect_frame_prepared(y, &receiver)
    }

    /// Rebuilds the payload from detected indices and sample estimates:
    /// spatial bits from the index vector, constellation bits by de-biasing,
    /// transforming and slicing the sample vector.
    pub fn demap(&self, indices: &[usize], samples: &[f64]) -> Result<BitBuffer> {
        let n = self.cfg.n_fft;
        if indices.len() != n || samples.len() != n {
            return Err(Error::Dimension {
                context: "tdsm demap",
                expected: format!("{n} samples"),
                got: format!("{}/{}", indices.len(), samples.len()),
            });
        }
        let debiased: Vec<f64> = samples.iter().map(|&v| v - self.bias).collect();
        let spectrum = self.dft.fft(&debiased);
        let k_c = self.cfg.k_c();
        let k_s = self.cfg.k_s();
        let rows = self.cfg.data_subcarriers();
        let mut bits = Vec::with_capacity(self.payload_bits());
        for &z in &spectrum[1..=rows] {
            let label = self.constellation.slice(z);
            push_index_bits(&mut bits, label, k_c);
        }
        for &idx in indices {
            push_index_bits(&mut bits, idx, k_s);
        }
        BitBuffer::from_bits(bits)
    }

    /// Full receive chain for the chosen detector.
    pub fn decode(
        &self,
        y: &DMatrix<f64>,
        h: &ChannelMatrix,
        sigma_n: f64,
        detector: TdDetector,
    ) -> Result<BitBuffer> {
        let (indices, samples) = self.detect_frame(y, h, sigma_n, detector)?;
        self.demap(&indices, &samples)
    }

    /// Full receive chain with a prepared receiver.
    pub fn decode_prepared(&self, y: &DMatrix<f64>, receiver: &TdReceiver) -> Result<BitBuffer> {
        let (indices, samples) = self.detect_frame_prepared(y, receiver)?;
        self.demap(&indices, &samples)
    }
}
