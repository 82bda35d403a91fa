//! Link-level simulator for OFDM-based optical spatial modulation.
//!
//! Implements the two OFDM spatial-modulation transmit/receive chains for
//! intensity-modulated optical MIMO links — frequency-domain SM (one active
//! subcarrier stream per LED) and time-domain SM (one active LED per time
//! sample) — over a Lambertian line-of-sight channel, together with a seeded
//! Monte Carlo BER engine that sweeps SNR operating points for both schemes.
//!
//! ```
//! use owsm::channel::ChannelMatrix;
//! use owsm::sim::{self, Scheme};
//! use owsm::SimConfig;
//!
//! let cfg = SimConfig {
//!     n_fft: 64,
//!     m_order: 16,
//!     snr_grid_db: vec![10.0],
//!     max_frames: 64,
//!     ..SimConfig::default()
//! };
//! let h = ChannelMatrix::identity(4);
//! let report = sim::run_sweep(&cfg, &[Scheme::TdsmMap], &h).unwrap();
//! assert_eq!(report.records.len(), 1);
//! assert!(report.records[0].ber < 0.5);
//! ```

pub mod bits;
pub mod channel;
pub mod config;
pub mod error;
pub mod fdsm;
pub mod ofdm;
pub mod qam;
pub mod rng;
pub mod sim;
pub mod tdsm;

pub use bits::BitBuffer;
pub use config::SimConfig;
pub use error::{Error, Result};
pub use qam::QamConstellation;
pub use rng::RandomStream;
pub use sim::{BerRecord, Scheme, SweepReport};
