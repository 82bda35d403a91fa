//! Line-oriented `key = value` configuration files.
//!
//! Recognized keys: scheme, n_fft, n_cp, m_order, n_tx, n_rx, bias_db,
//! clip_low, clip_high, snr_db, seed, max_frames, target_errors, channel.
//! `#` starts a comment, unknown keys are errors, duplicate keys take the
//! last value and record a warning. `scheme` and `snr_db` accept comma
//! lists; `clip_high` and SNR values accept `inf`.

use super::Scheme;
use crate::channel::{build_channel_matrix, make_overlap_channel, ChannelMatrix, LinkGeometry};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

/// Where the sweep's channel matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    /// Square identity channel.
    Identity,
    /// Synthetic overlap channel with prescribed condition number.
    Overlap { rho: f64, gain: f64 },
    /// Lambertian geometry description file.
    Geometry(PathBuf),
    /// Plain-text CSV gain matrix.
    Csv(PathBuf),
}

impl ChannelSpec {
    /// Parses the `channel =` value syntax.
    pub fn parse(value: &str) -> Result<Self> {
        let value = value.trim();
        if value == "identity" {
            return Ok(ChannelSpec::Identity);
        }
        if let Some(rest) = value.strip_prefix("overlap:") {
            let mut rho = None;
            let mut gain = 1.0;
            for part in rest.split(',') {
                let (k, v) = part.split_once('=').ok_or_else(|| {
                    Error::Config(format!("channel overlap: expected key=value, got `{part}`"))
                })?;
                let num: f64 = v.trim().parse().map_err(|_| {
                    Error::Config(format!("channel overlap: `{}` is not a number", v.trim()))
                })?;
                match k.trim() {
                    "rho" => rho = Some(num),
                    "gain" => gain = num,
                    other => {
                        return Err(Error::Config(format!(
                            "channel overlap: unknown field `{other}`"
                        )))
                    }
                }
            }
            let rho = rho.ok_or_else(|| Error::Config("channel overlap: missing `rho`".into()))?;
            return Ok(ChannelSpec::Overlap { rho, gain });
        }
        if let Some(path) = value.strip_prefix("geometry:") {
            return Ok(ChannelSpec::Geometry(PathBuf::from(path.trim())));
        }
        if let Some(path) = value.strip_prefix("csv:") {
            return Ok(ChannelSpec::Csv(PathBuf::from(path.trim())));
        }
        Err(Error::Config(format!(
            "channel `{value}` is not identity, overlap:..., geometry:<path> or csv:<path>"
        )))
    }

    /// Materializes the channel matrix and checks it against the configured
    /// array size.
    pub fn build(&self, n_rx: usize, n_tx: usize) -> Result<ChannelMatrix> {
        let h = match self {
            ChannelSpec::Identity => {
                if n_rx != n_tx {
                    return Err(Error::Config(format!(
                        "channel identity needs n_rx == n_tx, got {n_rx}x{n_tx}"
                    )));
                }
                ChannelMatrix::identity(n_tx)
            }
            ChannelSpec::Overlap { rho, gain } => {
                if n_rx != n_tx {
                    return Err(Error::Config(format!(
                        "channel overlap needs n_rx == n_tx, got {n_rx}x{n_tx}"
                    )));
                }
                make_overlap_channel(n_tx, *rho, *gain)?
            }
            ChannelSpec::Geometry(path) => build_channel_matrix(&LinkGeometry::from_file(path)?)?,
            ChannelSpec::Csv(path) => ChannelMatrix::read_csv(path)?,
        };
        if h.n_rx() != n_rx || h.n_tx() != n_tx {
            return Err(Error::Config(format!(
                "channel is {}x{} but the config says {n_rx}x{n_tx}",
                h.n_rx(),
                h.n_tx()
            )));
        }
        Ok(h)
    }
}

impl std::fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChannelSpec::Identity => write!(f, "identity"),
            ChannelSpec::Overlap { rho, gain } => write!(f, "overlap:rho={rho},gain={gain}"),
            ChannelSpec::Geometry(p) => write!(f, "geometry:{}", p.display()),
            ChannelSpec::Csv(p) => write!(f, "csv:{}", p.display()),
        }
    }
}

/// A parsed configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct FileConfig {
    pub sim: SimConfig,
    pub schemes: Vec<Scheme>,
    pub channel: ChannelSpec,
}

/// Parse result plus diagnostics for the caller to surface.
#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub file: FileConfig,
    /// One entry per duplicated key (last value wins).
    pub warnings: Vec<String>,
}

const KNOWN_KEYS: [&str; 14] = [
    "scheme",
    "n_fft",
    "n_cp",
    "m_order",
    "n_tx",
    "n_rx",
    "bias_db",
    "clip_low",
    "clip_high",
    "snr_db",
    "seed",
    "max_frames",
    "target_errors",
    "channel",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{value}`")))
}

/// Parses config text. Relative channel paths resolve against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<ParsedConfig> {
    let mut values: HashMap<&str, String> = HashMap::new();
    let mut warnings = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        let value = value.trim();
        let canonical = KNOWN_KEYS
            .iter()
            .find(|&&k| k == key)
            .ok_or_else(|| Error::Config(format!("line {}: unknown key `{key}`", lineno + 1)))?;
        if values.insert(canonical, value.to_string()).is_some() {
            warnings.push(format!(
                "line {}: duplicate key `{key}`, last value wins",
                lineno + 1
            ));
        }
    }

    let require = |key: &str| {
        values
            .get(key)
            .cloned()
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    };

    let schemes: Vec<Scheme> = require("scheme")?
        .split(',')
        .map(|s| s.parse())
        .collect::<Result<_>>()?;
    if schemes.is_empty() {
        return Err(Error::Config("key `scheme`: empty list".into()));
    }

    let snr_text = require("snr_db")?;
    let snr_grid_db: Vec<f64> = if snr_text.trim().is_empty() {
        Vec::new()
    } else {
        snr_text
            .split(',')
            .map(|tok| parse_num::<f64>("snr_db", tok.trim()))
            .collect::<Result<_>>()?
    };

    let channel = ChannelSpec::parse(&require("channel")?)?;
    let channel = match channel {
        ChannelSpec::Geometry(p) if p.is_relative() => ChannelSpec::Geometry(base_dir.join(p)),
        ChannelSpec::Csv(p) if p.is_relative() => ChannelSpec::Csv(base_dir.join(p)),
        other => other,
    };

    let defaults = SimConfig::default();
    let sim = SimConfig {
        n_fft: values
            .get("n_fft")
            .map(|v| parse_num("n_fft", v))
            .transpose()?
            .unwrap_or(defaults.n_fft),
        n_cp: values
            .get("n_cp")
            .map(|v| parse_num("n_cp", v))
            .transpose()?
            .unwrap_or(defaults.n_cp),
        m_order: values
            .get("m_order")
            .map(|v| parse_num("m_order", v))
            .transpose()?
            .unwrap_or(defaults.m_order),
        n_tx: values
            .get("n_tx")
            .map(|v| parse_num("n_tx", v))
            .transpose()?
            .unwrap_or(defaults.n_tx),
        n_rx: values
            .get("n_rx")
            .map(|v| parse_num("n_rx", v))
            .transpose()?
            .unwrap_or(defaults.n_rx),
        bias_db: values
            .get("bias_db")
            .map(|v| parse_num("bias_db", v))
            .transpose()?
            .unwrap_or(defaults.bias_db),
        clip_low: values
            .get("clip_low")
            .map(|v| parse_num("clip_low", v))
            .transpose()?
            .unwrap_or(defaults.clip_low),
        clip_high: values
            .get("clip_high")
            .map(|v| parse_num("clip_high", v))
            .transpose()?
            .unwrap_or(defaults.clip_high),
        snr_grid_db,
        master_seed: values
            .get("seed")
            .map(|v| parse_num("seed", v))
            .transpose()?
            .unwrap_or(defaults.master_seed),
        max_frames: values
            .get("max_frames")
            .map(|v| parse_num("max_frames", v))
            .transpose()?
            .unwrap_or(defaults.max_frames),
        target_bit_errors: values
            .get("target_errors")
            .map(|v| parse_num("target_errors", v))
            .transpose()?
            .unwrap_or(defaults.target_bit_errors),
    };
    sim.validate()?;

    Ok(ParsedConfig {
        file: FileConfig {
            sim,
            schemes,
            channel,
        },
        warnings,
    })
}

/// Reads and parses a config file.
pub fn parse_config(path: &Path) -> Result<ParsedConfig> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
scheme = fdsm,tdsm-map
snr_db = 0,5,10
channel = identity
";

    #[test]
    fn minimal_file_gets_defaults() {
        let parsed = parse_config_str(MINIMAL, Path::new(".")).unwrap();
        let cfg = &parsed.file.sim;
        assert_eq!(cfg.n_fft, 256);
        assert_eq!(cfg.n_cp, 0);
        assert_eq!(cfg.bias_db, 10.0);
        assert_eq!(cfg.clip_low, 0.0);
        assert!(cfg.clip_high.is_infinite());
        assert_eq!(parsed.file.schemes, vec![Scheme::Fdsm, Scheme::TdsmMap]);
        assert_eq!(parsed.file.channel, ChannelSpec::Identity);
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn full_file_round() {
        let text = "\
# comment line
scheme = tdsm-zf
n_fft = 64          # trailing comment
n_cp = 4
m_order = 64
n_tx = 8
n_rx = 8
bias_db = 7
clip_low = 0
clip_high = inf
snr_db = 10,20,inf
seed = 1234
max_frames = 500
target_errors = 10
channel = overlap:rho=3.5,gain=2.0
";
        let parsed = parse_config_str(text, Path::new(".")).unwrap();
        let cfg = &parsed.file.sim;
        assert_eq!(cfg.n_fft, 64);
        assert_eq!(cfg.n_cp, 4);
        assert_eq!(cfg.m_order, 64);
        assert_eq!(cfg.master_seed, 1234);
        assert_eq!(cfg.snr_grid_db, vec![10.0, 20.0, f64::INFINITY]);
        assert_eq!(
            parsed.file.channel,
            ChannelSpec::Overlap {
                rho: 3.5,
                gain: 2.0
            }
        );
    }

    #[test]
    fn missing_required_key() {
        let err = parse_config_str("scheme = fdsm\nsnr_db = 1\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("channel"), "{err}");
    }

    #[test]
    fn constraint_violation_names_key() {
        let text = "scheme = fdsm\nsnr_db = 0\nchannel = identity\nm_order = 6\n";
        let err = parse_config_str(text, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("m_order"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err =
            parse_config_str(&format!("{MINIMAL}velocity = 3\n"), Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("velocity"), "{err}");
    }

    #[test]
    fn duplicate_key_warns_and_last_wins() {
        let text = format!("{MINIMAL}seed = 1\nseed = 2\n");
        let parsed = parse_config_str(&text, Path::new(".")).unwrap();
        assert_eq!(parsed.file.sim.master_seed, 2);
        assert_eq!(parsed.warnings.len(), 1);
        assert!(parsed.warnings[0].contains("seed"));
    }

    #[test]
    fn channel_spec_variants() {
        assert_eq!(
            ChannelSpec::parse("identity").unwrap(),
            ChannelSpec::Identity
        );
        assert_eq!(
            ChannelSpec::parse("overlap:rho=400").unwrap(),
            ChannelSpec::Overlap {
                rho: 400.0,
                gain: 1.0
            }
        );
        assert!(matches!(
            ChannelSpec::parse("geometry:room.geom").unwrap(),
            ChannelSpec::Geometry(_)
        ));
        assert!(matches!(
            ChannelSpec::parse("csv:gains.csv").unwrap(),
            ChannelSpec::Csv(_)
        ));
        assert!(ChannelSpec::parse("diag").is_err());
        assert!(ChannelSpec::parse("overlap:gain=2").is_err());
    }

    #[test]
    fn channel_build_checks_shape() {
        let spec = ChannelSpec::Identity;
        assert!(spec.build(4, 4).is_ok());
        assert!(spec.build(4, 2).is_err());
        let overlap = ChannelSpec::Overlap {
            rho: 3.5,
            gain: 1.0,
        };
        let h = overlap.build(4, 4).unwrap();
        assert_eq!(h.n_tx(), 4);
    }

    #[test]
    fn empty_snr_grid_allowed() {
        let text = "scheme = fdsm\nsnr_db =\nchannel = identity\n";
        let parsed = parse_config_str(text, Path::new(".")).unwrap();
        assert!(parsed.file.sim.snr_grid_db.is_empty());
    }
}
