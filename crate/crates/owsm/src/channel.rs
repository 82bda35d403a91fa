//! Lambertian line-of-sight optical MIMO channel.
//!
//! Builds DC gain matrices from 3-D link geometry, synthesizes matrices with
//! a prescribed condition number for ill-conditioning studies, injects AWGN,
//! and calibrates the noise level for a requested receive SNR.

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use nalgebra::{DMatrix, Vector3};
use std::fmt::Write as _;

/// Cap on the Lambertian mode number; semiangles close to zero would
/// otherwise overflow the cosine power.
pub const DEFAULT_LAMBERTIAN_CAP: f64 = 1e4;

/// Condition-number threshold above which ZF equalization refuses to invert.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Positions, orientations and optical parameters of every LED and PD.
#[derive(Debug, Clone)]
pub struct LinkGeometry {
    pub led_positions: Vec<Vector3<f64>>,
    pub led_normals: Vec<Vector3<f64>>,
    pub pd_positions: Vec<Vector3<f64>>,
    pub pd_normals: Vec<Vector3<f64>>,
    /// LED half-power semiangle, radians, in (0, pi/2).
    pub half_power_semiangle: f64,
    /// PD field-of-view semiangle, radians, in (0, pi/2].
    pub fov_semiangle: f64,
    /// PD detection area, m^2.
    pub pd_area: f64,
}

impl LinkGeometry {
    /// Validates vector counts, unit normals and parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if self.led_positions.len() != self.led_normals.len() {
            return Err(Error::DegenerateGeometry(
                "LED position and normal counts differ".into(),
            ));
        }
        if self.pd_positions.len() != self.pd_normals.len() {
            return Err(Error::DegenerateGeometry(
                "PD position and normal counts differ".into(),
            ));
        }
        if self.led_positions.is_empty() || self.pd_positions.is_empty() {
            return Err(Error::DegenerateGeometry(
                "geometry has no LEDs or PDs".into(),
            ));
        }
        for (what, normals) in [("LED", &self.led_normals), ("PD", &self.pd_normals)] {
            for (idx, n) in normals.iter().enumerate() {
                if (n.norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::DegenerateGeometry(format!(
                        "{what} normal {idx} has length {}",
                        n.norm()
                    )));
                }
            }
        }
        let hps = self.half_power_semiangle;
        if hps.is_nan() || hps <= 0.0 || hps >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::Parameter {
                name: "half_power_semiangle",
                reason: format!("{} rad outside (0, pi/2)", self.half_power_semiangle),
            });
        }
        let fov = self.fov_semiangle;
        if fov.is_nan() || fov <= 0.0 || fov > std::f64::consts::FRAC_PI_2 {
            return Err(Error::Parameter {
                name: "fov_semiangle",
                reason: format!("{} rad outside (0, pi/2]", self.fov_semiangle),
            });
        }
        if self.pd_area.is_nan() || self.pd_area <= 0.0 {
            return Err(Error::Parameter {
                name: "pd_area",
                reason: format!("{} must be positive", self.pd_area),
            });
        }
        Ok(())
    }

    pub fn n_tx(&self) -> usize {
        self.led_positions.len()
    }

    pub fn n_rx(&self) -> usize {
        self.pd_positions.len()
    }

    /// Parses the line-oriented geometry format:
    ///
    /// ```text
    /// half_power_semiangle_deg = 60
    /// fov_semiangle_deg = 60
    /// pd_area = 1e-4
    /// led = 0 0 0.8   0 0 -1      # position (m), normal
    /// pd  = 0 0 0     0 0 1
    /// ```
    ///
    /// `led`/`pd` lines repeat once per element; normals are normalized on
    /// load.
    pub fn parse(text: &str) -> Result<Self> {
        let mut half_power = None;
        let mut fov = None;
        let mut area = None;
        let mut leds: Vec<(Vector3<f64>, Vector3<f64>)> = Vec::new();
        let mut pds: Vec<(Vector3<f64>, Vector3<f64>)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "geometry line {}: expected key = value",
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            let value = value.trim();
            let parse_f64 = |v: &str| {
                v.parse::<f64>().map_err(|_| {
                    Error::Config(format!(
                        "geometry line {}: `{v}` is not a number",
                        lineno + 1
                    ))
                })
            };
            match key {
                "half_power_semiangle_deg" => half_power = Some(parse_f64(value)?.to_radians()),
                "fov_semiangle_deg" => fov = Some(parse_f64(value)?.to_radians()),
                "pd_area" => area = Some(parse_f64(value)?),
                "led" | "pd" => {
                    let nums: Vec<f64> = value
                        .split_whitespace()
                        .map(parse_f64)
                        .collect::<Result<_>>()?;
                    if nums.len() != 6 {
                        return Err(Error::Config(format!(
                            "geometry line {}: `{key}` needs 6 numbers (position, normal)",
                            lineno + 1
                        )));
                    }
                    let pos = Vector3::new(nums[0], nums[1], nums[2]);
                    let normal = Vector3::new(nums[3], nums[4], nums[5]);
                    if normal.norm() == 0.0 {
                        return Err(Error::Config(format!(
                            "geometry line {}: zero normal vector",
                            lineno + 1
                        )));
                    }
                    let entry = (pos, normal.normalize());
                    if key == "led" {
                        leds.push(entry);
                    } else {
                        pds.push(entry);
                    }
                }
                other => {
                    return Err(Error::Config(format!(
                        "geometry line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        let missing = |what: &str| Error::Config(format!("geometry: missing key `{what}`"));
        let geometry = LinkGeometry {
            led_positions: leds.iter().map(|(p, _)| *p).collect(),
            led_normals: leds.iter().map(|(_, n)| *n).collect(),
            pd_positions: pds.iter().map(|(p, _)| *p).collect(),
            pd_normals: pds.iter().map(|(_, n)| *n).collect(),
            half_power_semiangle: half_power.ok_or_else(|| missing("half_power_semiangle_deg"))?,
            fov_semiangle: fov.ok_or_else(|| missing("fov_semiangle_deg"))?,
            pd_area: area.ok_or_else(|| missing("pd_area"))?,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// How a channel matrix came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Geometric,
    Synthetic,
    Loaded,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Geometric => write!(f, "geometric"),
            Provenance::Synthetic => write!(f, "synthetic"),
            Provenance::Loaded => write!(f, "loaded"),
        }
    }
}

/// Nonnegative N_r x N_t matrix of DC channel gains.
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    h: DMatrix<f64>,
    provenance: Provenance,
}

impl ChannelMatrix {
    /// Wraps a gain matrix, enforcing nonnegative finite entries.
    pub fn new(h: DMatrix<f64>, provenance: Provenance) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::Dimension {
                context: "ChannelMatrix",
                expected: "nonempty matrix".into(),
                got: format!("{}x{}", h.nrows(), h.ncols()),
            });
        }
        for &v in h.iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Parameter {
                    name: "channel gain",
                    reason: format!("entry {v} is negative or non-finite"),
                });
            }
        }
        Ok(Self { h, provenance })
    }

    /// Identity channel of size n.
    pub fn identity(n: usize) -> Self {
        Self {
            h: DMatrix::identity(n, n),
            provenance: Provenance::Synthetic,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn n_rx(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.h.ncols()
    }

    /// Serializes row-major CSV: N_r rows of N_t comma-separated gains.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 0..self.h.nrows() {
            for i in 0..self.h.ncols() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", self.h[(j, i)]);
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV layout written by [`ChannelMatrix::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!(
                            "channel csv line {}: `{}` is not a number",
                            lineno + 1,
                            tok.trim()
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::Config(format!(
                        "channel csv line {}: expected {} columns, got {}",
                        lineno + 1,
                        first.len(),
                        row.len()
                    )));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Config("channel csv contains no rows".into()));
        }
        let n_rx = rows.len();
        let n_tx = rows[0].len();
        let h = DMatrix::from_fn(n_rx, n_tx, |j, i| rows[j][i]);
        Self::new(h, Provenance::Loaded)
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv(&text)
    }
}

/// Lambertian mode number m = -1/log2(cos(semiangle)), capped at `cap`.
pub fn lambertian_order_capped(half_power_semiangle: f64, cap: f64) -> Result<f64> {
    if half_power_semiangle.is_nan()
        || half_power_semiangle <= 0.0
        || half_power_semiangle >= std::f64::consts::FRAC_PI_2
    {
        return Err(Error::Parameter {
            name: "half_power_semiangle",
            reason: format!("{half_power_semiangle} rad outside (0, pi/2)"),
        });
    }
    let m = -1.0 / half_power_semiangle.cos().log2();
    if m.is_nan() || m <= 0.0 || m > cap {
        return Err(Error::Parameter {
            name: "half_power_semiangle",
            reason: format!("Lambertian order {m} exceeds cap {cap}"),
        });
    }
    Ok(m)
}

/// [`lambertian_order_capped`] with the default cap.
pub fn lambertian_order(half_power_semiangle: f64) -> Result<f64> {
    lambertian_order_capped(half_power_semiangle, DEFAULT_LAMBERTIAN_CAP)
}

/// Line-of-sight DC gain between LED `i` and PD `j`.
///
/// Gain is (m+1) A / (2 pi d^2) cos^m(theta) cos(psi) inside the PD field of
/// view and zero outside; emission behind the LED plane is clamped to zero.
pub fn los_gain(i: usize, j: usize, geometry: &LinkGeometry) -> Result<f64> {
    let m = lambertian_order(geometry.half_power_semiangle)?;
    let d = geometry.led_positions[i] - geometry.pd_positions[j];
    let dist = d.norm();
    if dist == 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "LED {i} and PD {j} coincide"
        )));
    }
    let cos_theta = -geometry.led_normals[i].dot(&d) / dist;
    let cos_psi = geometry.pd_normals[j].dot(&d) / dist;
    // Field-of-view indicator: |psi| <= fov, i.e. cos(psi) >= cos(fov).
    if cos_psi < geometry.fov_semiangle.cos() {
        return Ok(0.0);
    }
    if cos_theta <= 0.0 {
        return Ok(0.0);
    }
    let gain = (m + 1.0) * geometry.pd_area / (2.0 * std::f64::consts::PI * dist * dist)
        * cos_theta.powf(m)
        * cos_psi;
    Ok(gain)
}

/// Applies [`los_gain`] entry-wise over the whole geometry.
pub fn build_channel_matrix(geometry: &LinkGeometry) -> Result<ChannelMatrix> {
    geometry.validate()?;
    let n_rx = geometry.n_rx();
    let n_tx = geometry.n_tx();
    let mut h = DMatrix::zeros(n_rx, n_tx);
    for j in 0..n_rx {
        for i in 0..n_tx {
            h[(j, i)] = los_gain(i, j, geometry)?;
        }
    }
    ChannelMatrix::new(h, Provenance::Geometric)
}

/// Synthetic n x n channel a*I + b*(J - I) whose condition number is exactly
/// `rho`: b = a(rho-1)/(rho+n-1), giving eigenvalues a+(n-1)b and a-b.
pub fn make_overlap_channel(n: usize, rho: f64, diag_gain: f64) -> Result<ChannelMatrix> {
    if rho.is_nan() || rho < 1.0 {
        return Err(Error::Parameter {
            name: "rho",
            reason: format!("{rho} must be >= 1"),
        });
    }
    if n < 2 {
        return Err(Error::Parameter {
            name: "n",
            reason: format!("{n} must be >= 2"),
        });
    }
    if diag_gain.is_nan() || diag_gain <= 0.0 {
        return Err(Error::Parameter {
            name: "gain",
            reason: format!("{diag_gain} must be positive"),
        });
    }
    let b = diag_gain * (rho - 1.0) / (rho + n as f64 - 1.0);
    let h = DMatrix::from_fn(n, n, |j, i| if i == j { diag_gain } else { b });
    ChannelMatrix::new(h, Provenance::Synthetic)
}

/// Ratio of the largest to smallest singular value; +infinity when singular.
pub fn condition_number(h: &ChannelMatrix) -> Result<f64> {
    let m = h.matrix();
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension {
            context: "condition_number",
            expected: "square matrix".into(),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= max * f64::EPSILON {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

/// Per-PD AWGN level, electrical amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma_n: f64,
}

impl NoiseSpec {
    pub fn new(sigma_n: f64) -> Result<Self> {
        if sigma_n.is_nan() || sigma_n < 0.0 {
            return Err(Error::Parameter {
                name: "sigma_n",
                reason: format!("{sigma_n} must be nonnegative"),
            });
        }
        Ok(Self { sigma_n })
    }

    pub fn noiseless() -> Self {
        Self { sigma_n: 0.0 }
    }
}

/// Adds i.i.d. zero-mean Gaussian noise with `noise.sigma_n` to every entry.
pub fn add_awgn(signal: &mut DMatrix<f64>, noise: NoiseSpec, stream: &mut RandomStream) {
    if noise.sigma_n == 0.0 {
        return;
    }
    for v in signal.iter_mut() {
        *v += noise.sigma_n * stream.standard_normal();
    }
}

/// Noise level realizing `snr_db`, defined as total received electrical power
/// over total receiver noise power.
///
/// The received power is propagated analytically: with per-LED transmit
/// second moment E{tx^2} = total_tx_power / N_t and streams treated as
/// uncorrelated, P_rx = sum_{j,i} H(j,i)^2 E{tx_i^2} and
/// sigma_n^2 = P_rx / (N_r * 10^(snr_db/10)).
pub fn noise_sigma_for_snr(
    snr_db: f64,
    h: &ChannelMatrix,
    total_tx_power: f64,
) -> Result<NoiseSpec> {
    let per_led = total_tx_power / h.n_tx() as f64;
    let p_rx: f64 = h.matrix().iter().map(|&v| v * v * per_led).sum();
    if p_rx.is_nan() || p_rx <= 0.0 {
        return Err(Error::ZeroReceivedPower);
    }
    let snr_lin = 10f64.powf(snr_db / 10.0);
    let sigma_sq = p_rx / (h.n_rx() as f64 * snr_lin);
    NoiseSpec::new(sigma_sq.sqrt())
}
