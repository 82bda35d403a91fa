//! Monte Carlo BER engine.
//!
//! Simulates frames at each (scheme, SNR) operating point until the target
//! number of bit errors accumulates or the frame budget runs out. Every frame
//! draws from its own random stream, pre-assigned from
//! (master_seed, scheme, SNR index, frame index), and frames are processed in
//! fixed-size batches whose counts are reduced by plain integer sums, so the
//! output is identical for any worker count.

pub mod config_file;
pub mod report;
pub mod selftest;

pub use config_file::{parse_config, parse_config_str, ChannelSpec, FileConfig, ParsedConfig};
pub use report::{BerRecord, SweepReport};

use crate::bits::BitBuffer;
use crate::channel::{condition_number, noise_sigma_for_snr, ChannelMatrix, NoiseSpec};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::fdsm::{FdsmModem, ZfEqualizer};
use crate::rng::RandomStream;
use crate::tdsm::{TdDetector, TdReceiver, TdsmModem};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Frames simulated between stopping-rule checks. Fixed so that the set of
/// simulated frames never depends on the worker count.
const BATCH_FRAMES: u64 = 64;

/// The three transmit/detect combinations under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Fdsm,
    TdsmMap,
    TdsmZf,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Fdsm, Scheme::TdsmMap, Scheme::TdsmZf];

    /// Stable small integer used in the stream-id partition.
    pub fn index(self) -> u64 {
        match self {
            Scheme::Fdsm => 0,
            Scheme::TdsmMap => 1,
            Scheme::TdsmZf => 2,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Fdsm => write!(f, "fdsm"),
            Scheme::TdsmMap => write!(f, "tdsm-map"),
            Scheme::TdsmZf => write!(f, "tdsm-zf"),
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fdsm" => Ok(Scheme::Fdsm),
            "tdsm-map" => Ok(Scheme::TdsmMap),
            "tdsm-zf" => Ok(Scheme::TdsmZf),
            other => Err(Error::Config(format!(
                "unknown scheme `{other}` (expected fdsm, tdsm-map or tdsm-zf)"
            ))),
        }
    }
}

/// Stream-id base for one operating point: frame indices occupy the low 32
/// bits, the SNR index the next 16, the scheme the bits above that.
pub fn point_stream_base(scheme: Scheme, snr_index: usize) -> u64 {
    (scheme.index() << 48) | ((snr_index as u64) << 32)
}

/// A modem prepared for one scheme.
enum SchemeModem {
    Fdsm(FdsmModem),
    Tdsm(TdsmModem, TdDetector),
}

impl SchemeModem {
    fn new(cfg: &SimConfig, scheme: Scheme) -> Result<Self> {
        Ok(match scheme {
            Scheme::Fdsm => SchemeModem::Fdsm(FdsmModem::new(cfg)?),
            Scheme::TdsmMap => SchemeModem::Tdsm(TdsmModem::new(cfg)?, TdDetector::Map),
            Scheme::TdsmZf => SchemeModem::Tdsm(TdsmModem::new(cfg)?, TdDetector::Zf),
        })
    }

    fn payload_bits(&self) -> usize {
        match self {
            SchemeModem::Fdsm(m) => m.payload_bits(),
            SchemeModem::Tdsm(m, _) => m.payload_bits(),
        }
    }

    fn total_tx_power(&self) -> f64 {
        match self {
            SchemeModem::Fdsm(m) => m.total_tx_power(),
            SchemeModem::Tdsm(m, _) => m.total_tx_power(),
        }
    }
}

/// Receiver state shared by the frames of one operating point.
enum PointReceiver {
    Fdsm(ZfEqualizer),
    Tdsm(TdReceiver),
}

fn prepare_receiver(
    modem: &SchemeModem,
    h: &ChannelMatrix,
    noise: NoiseSpec,
) -> Result<PointReceiver> {
    Ok(match modem {
        SchemeModem::Fdsm(_) => PointReceiver::Fdsm(ZfEqualizer::new(h)?),
        SchemeModem::Tdsm(m, det) => PointReceiver::Tdsm(m.receiver(h, noise.sigma_n, *det)?),
    })
}

/// Simulates one frame end to end; returns its bit-error count.
fn simulate_frame(
    modem: &SchemeModem,
    receiver: &PointReceiver,
    h: &ChannelMatrix,
    noise: NoiseSpec,
    master_seed: u64,
    stream_id: u64,
) -> Result<u64> {
    let mut stream = RandomStream::derive(master_seed, stream_id);
    let payload = BitBuffer::random(modem.payload_bits(), &mut stream);
    let decoded = match (modem, receiver) {
        (SchemeModem::Fdsm(m), PointReceiver::Fdsm(eq)) => {
            let frame = m.encode(&payload)?;
            let y = m.transmit(&frame, h, noise, &mut stream)?;
            m.decode(&y, eq)?
        }
        (SchemeModem::Tdsm(m, _), PointReceiver::Tdsm(rx)) => {
            let frame = m.encode(&payload)?;
            let y = m.transmit(&frame, h, noise, &mut stream)?;
            m.decode_prepared(&y, rx)?
        }
        _ => unreachable!("modem and receiver prepared together"),
    };
    decoded.hamming_distance(&payload)
}

#[cfg(feature = "parallel")]
fn batch_errors(
    frames: std::ops::Range<u64>,
    parallel: bool,
    sim: impl Fn(u64) -> Result<u64> + Sync + Send,
) -> Result<u64> {
    if parallel {
        frames
            .into_par_iter()
            .map(sim)
            .try_reduce(|| 0u64, |a, b| Ok(a + b))
    } else {
        frames.map(sim).try_fold(0u64, |acc, r| r.map(|e| acc + e))
    }
}

#[cfg(not(feature = "parallel"))]
fn batch_errors(
    frames: std::ops::Range<u64>,
    _parallel: bool,
    sim: impl Fn(u64) -> Result<u64> + Sync,
) -> Result<u64> {
    frames.map(sim).try_fold(0u64, |acc, r| r.map(|e| acc + e))
}

fn check_dimensions(cfg: &SimConfig, h: &ChannelMatrix) -> Result<()> {
    if h.n_tx() != cfg.n_tx || h.n_rx() != cfg.n_rx {
        return Err(Error::Dimension {
            context: "run_point",
            expected: format!("{}x{} channel", cfg.n_rx, cfg.n_tx),
            got: format!("{}x{}", h.n_rx(), h.n_tx()),
        });
    }
    if cfg.max_frames > u32::MAX as u64 {
        return Err(Error::Parameter {
            name: "max_frames",
            reason: format!("{} exceeds the 2^32-1 frame-id space", cfg.max_frames),
        });
    }
    Ok(())
}

fn run_point_impl(
    cfg: &SimConfig,
    modem: &SchemeModem,
    scheme: Scheme,
    h: &ChannelMatrix,
    snr_db: f64,
    stream_base: u64,
    parallel: bool,
) -> Result<BerRecord> {
    let noise = noise_sigma_for_snr(snr_db, h, modem.total_tx_power())?;
    let receiver = prepare_receiver(modem, h, noise)?;
    let bits_per_frame = modem.payload_bits() as u64;
    let sim = |frame_idx: u64| {
        simulate_frame(
            modem,
            &receiver,
            h,
            noise,
            cfg.master_seed,
            stream_base | frame_idx,
        )
    };
    let mut frames = 0u64;
    let mut errors = 0u64;
    while frames < cfg.max_frames && errors < cfg.target_bit_errors {
        let end = (frames + BATCH_FRAMES).min(cfg.max_frames);
        errors += batch_errors(frames..end, parallel, sim)?;
        frames = end;
    }
    let bits = frames * bits_per_frame;
    Ok(BerRecord {
        scheme,
        snr_db,
        bits,
        bit_errors: errors,
        ber: errors as f64 / bits as f64,
        frames,
        master_seed: cfg.master_seed,
    })
}

/// Simulates one (scheme, SNR) point, parallelizing over frames when the
/// `parallel` feature is enabled.
pub fn run_point(
    cfg: &SimConfig,
    scheme: Scheme,
    h: &ChannelMatrix,
    snr_db: f64,
    stream_base: u64,
) -> Result<BerRecord> {
    cfg.validate()?;
    check_dimensions(cfg, h)?;
    let modem = SchemeModem::new(cfg, scheme)?;
    run_point_impl(cfg, &modem, scheme, h, snr_db, stream_base, true)
}

/// [`run_point`], forced onto the current thread. Produces the identical
/// record; exists as the sequential baseline for benchmarks and determinism
/// checks.
pub fn run_point_seq(
    cfg: &SimConfig,
    scheme: Scheme,
    h: &ChannelMatrix,
    snr_db: f64,
    stream_base: u64,
) -> Result<BerRecord> {
    cfg.validate()?;
    check_dimensions(cfg, h)?;
    let modem = SchemeModem::new(cfg, scheme)?;
    run_point_impl(cfg, &modem, scheme, h, snr_db, stream_base, false)
}

fn run_sweep_impl(
    cfg: &SimConfig,
    schemes: &[Scheme],
    h: &ChannelMatrix,
    parallel: bool,
) -> Result<SweepReport> {
    cfg.validate()?;
    check_dimensions(cfg, h)?;
    let mut records = Vec::with_capacity(schemes.len() * cfg.snr_grid_db.len());
    for &scheme in schemes {
        let modem = SchemeModem::new(cfg, scheme)?;
        for (snr_index, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
            records.push(run_point_impl(
                cfg,
                &modem,
                scheme,
                h,
                snr_db,
                point_stream_base(scheme, snr_index),
                parallel,
            )?);
        }
    }
    Ok(SweepReport {
        config: cfg.clone(),
        schemes: schemes.to_vec(),
        channel_provenance: h.provenance().to_string(),
        channel_rho: condition_number(h).ok(),
        records,
    })
}

/// Runs every scheme across the configured SNR grid.
pub fn run_sweep(cfg: &SimConfig, schemes: &[Scheme], h: &ChannelMatrix) -> Result<SweepReport> {
    run_sweep_impl(cfg, schemes, h, true)
}

/// Runs `f` inside a worker pool of `threads` threads (0 keeps the global
/// default). Without the `parallel` feature the closure runs on the calling
/// thread regardless.
#[cfg(feature = "parallel")]
pub fn with_worker_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("worker pool")
        .install(f)
}

#[cfg(not(feature = "parallel"))]
pub fn with_worker_threads<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}

/// Sequential [`run_sweep`]; byte-identical output.
pub fn run_sweep_seq(
    cfg: &SimConfig,
    schemes: &[Scheme],
    h: &ChannelMatrix,
) -> Result<SweepReport> {
    run_sweep_impl(cfg, schemes, h, false)
}
