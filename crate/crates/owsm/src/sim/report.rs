//! BER records, sweep reports and their CSV wire format.

use super::Scheme;
use crate::config::SimConfig;
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// One Monte Carlo operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub frames: u64,
    pub master_seed: u64,
}

impl BerRecord {
    /// False when the point exhausted its frame budget before accumulating
    /// the requested number of bit errors.
    pub fn reached_target(&self, target_bit_errors: u64) -> bool {
        self.bit_errors >= target_bit_errors
    }

    /// Binomial standard error of the BER estimate.
    pub fn standard_error(&self) -> f64 {
        if self.bits == 0 {
            return 0.0;
        }
        (self.ber * (1.0 - self.ber) / self.bits as f64).sqrt()
    }
}

/// Everything produced by one sweep invocation.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub config: SimConfig,
    pub schemes: Vec<Scheme>,
    pub channel_provenance: String,
    /// Condition number of the channel; None when not square.
    pub channel_rho: Option<f64>,
    pub records: Vec<BerRecord>,
}

impl SweepReport {
    pub fn records_for(&self, scheme: Scheme) -> impl Iterator<Item = &BerRecord> {
        self.records.iter().filter(move |r| r.scheme == scheme)
    }
}

pub const CSV_HEADER: &str = "scheme,snr_db,bits,bit_errors,ber,frames,seed";

fn format_record(out: &mut String, r: &BerRecord) {
    let _ = writeln!(
        out,
        "{},{},{},{},{:.5e},{},{}",
        r.scheme, r.snr_db, r.bits, r.bit_errors, r.ber, r.frames, r.master_seed
    );
}

/// Renders the report as CSV: a header row, then one row per record with the
/// BER in scientific notation at six significant digits.
pub fn to_csv_string(report: &SweepReport) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &report.records {
        format_record(&mut out, r);
    }
    out
}

/// Writes [`to_csv_string`] output to `path`.
pub fn emit_csv(report: &SweepReport, path: &Path) -> Result<()> {
    std::fs::write(path, to_csv_string(report))?;
    Ok(())
}

/// Parses rows written by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<BerRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == CSV_HEADER => {}
        other => {
            return Err(Error::Config(format!(
                "ber csv: expected header `{CSV_HEADER}`, got {other:?}"
            )))
        }
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Config(format!(
                "ber csv line {}: expected 7 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_err = |what: &str, tok: &str| {
            Error::Config(format!("ber csv line {}: bad {what}: `{tok}`", lineno + 2))
        };
        records.push(BerRecord {
            scheme: fields[0].parse()?,
            snr_db: fields[1]
                .parse()
                .map_err(|_| parse_err("snr_db", fields[1]))?,
            bits: fields[2]
                .parse()
                .map_err(|_| parse_err("bits", fields[2]))?,
            bit_errors: fields[3]
                .parse()
                .map_err(|_| parse_err("bit_errors", fields[3]))?,
            ber: fields[4].parse().map_err(|_| parse_err("ber", fields[4]))?,
            frames: fields[5]
                .parse()
                .map_err(|_| parse_err("frames", fields[5]))?,
            master_seed: fields[6]
                .parse()
                .map_err(|_| parse_err("seed", fields[6]))?,
        });
    }
    Ok(records)
}

/// Reads a CSV file produced by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<BerRecord>> {
    parse_csv(&std::fs::read_to_string(path)?)
}

/// Renders (snr_db, log10 ber) pairs per scheme for external plotting.
/// Zero-BER points carry no finite logarithm and are skipped.
pub fn to_plot_data(report: &SweepReport) -> String {
    let mut out = String::new();
    for &scheme in &report.schemes {
        let _ = writeln!(out, "# {scheme}");
        for r in report.records_for(scheme) {
            if r.ber > 0.0 {
                let _ = writeln!(out, "{} {:.6}", r.snr_db, r.ber.log10());
            }
        }
        out.push('\n');
    }
    out
}

/// Writes [`to_plot_data`] output to `path`.
pub fn emit_plot_data(report: &SweepReport, path: &Path) -> Result<()> {
    std::fs::write(path, to_plot_data(report))?;
    Ok(())
}

/// Log-linear interpolation of the SNR at which the BER curve crosses
/// `target_ber`. Only records with at least `min_errors` bit errors
/// participate. Returns None when the curve never brackets the target.
pub fn interpolate_snr_at_ber(
    records: &[&BerRecord],
    target_ber: f64,
    min_errors: u64,
) -> Option<f64> {
    let mut usable: Vec<&&BerRecord> = records
        .iter()
        .filter(|r| r.bit_errors >= min_errors && r.ber > 0.0)
        .collect();
    usable.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    let target_log = target_ber.log10();
    for pair in usable.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let (log_lo, log_hi) = (lo.ber.log10(), hi.ber.log10());
        if (log_lo - target_log) * (log_hi - target_log) <= 0.0 && log_lo != log_hi {
            let t = (log_lo - target_log) / (log_lo - log_hi);
            return Some(lo.snr_db + t * (hi.snr_db - lo.snr_db));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> SweepReport {
        SweepReport {
            config: SimConfig::default(),
            schemes: vec![Scheme::Fdsm, Scheme::TdsmMap],
            channel_provenance: "synthetic".into(),
            channel_rho: Some(1.0),
            records: vec![
                BerRecord {
                    scheme: Scheme::Fdsm,
                    snr_db: 10.0,
                    bits: 1_016_000,
                    bit_errors: 2334,
                    ber: 2334.0 / 1_016_000.0,
                    frames: 1000,
                    master_seed: 42,
                },
                BerRecord {
                    scheme: Scheme::TdsmMap,
                    snr_db: 12.5,
                    bits: 102_000,
                    bit_errors: 0,
                    ber: 0.0,
                    frames: 100,
                    master_seed: 42,
                },
            ],
        }
    }

    #[test]
    fn csv_header_and_sig_digits() {
        let text = to_csv_string(&sample_report());
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row = lines.next().unwrap();
        assert_eq!(row, "fdsm,10,1016000,2334,2.29724e-3,1000,42");
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut report = sample_report();
        report.records.clear();
        assert_eq!(to_csv_string(&report), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_roundtrip_is_byte_exact() {
        let report = sample_report();
        let text = to_csv_string(&report);
        let records = parse_csv(&text).unwrap();
        assert_eq!(records.len(), 2);
        let mut again = report.clone();
        again.records = records;
        assert_eq!(to_csv_string(&again), text);
        // Integer fields survive exactly.
        assert_eq!(again.records[0].bits, 1_016_000);
        assert_eq!(again.records[0].bit_errors, 2334);
        assert_eq!(again.records[1].snr_db, 12.5);
    }

    #[test]
    fn csv_rejects_malformed() {
        assert!(parse_csv("bogus\n").is_err());
        assert!(parse_csv(&format!("{CSV_HEADER}\nfdsm,1,2\n")).is_err());
        assert!(parse_csv(&format!("{CSV_HEADER}\nwat,1,2,3,0.0,4,5\n")).is_err());
    }

    #[test]
    fn plot_data_skips_zero_ber() {
        let text = to_plot_data(&sample_report());
        assert!(text.contains("# fdsm"));
        assert!(text.contains("# tdsm-map"));
        assert!(!text.contains("12.5"));
    }

    #[test]
    fn interpolation_brackets_target() {
        let a = BerRecord {
            scheme: Scheme::Fdsm,
            snr_db: 10.0,
            bits: 1_000_000,
            bit_errors: 10_000,
            ber: 1e-2,
            frames: 1000,
            master_seed: 1,
        };
        let b = BerRecord {
            ber: 1e-4,
            snr_db: 14.0,
            bit_errors: 100,
            ..a.clone()
        };
        let refs: Vec<&BerRecord> = vec![&a, &b];
        let snr = interpolate_snr_at_ber(&refs, 1e-3, 100).unwrap();
        assert!((snr - 12.0).abs() < 1e-12);
        assert!(interpolate_snr_at_ber(&refs, 1e-6, 100).is_none());
        // Points below the error floor are excluded.
        assert!(interpolate_snr_at_ber(&refs, 1e-3, 101).is_none() || b.bit_errors >= 101);
    }

    #[test]
    fn reached_target_flag() {
        let r = sample_report();
        assert!(r.records[0].reached_target(100));
        assert!(!r.records[1].reached_target(100));
    }
}
