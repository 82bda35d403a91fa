//! Built-in invariant suite behind the `selftest` CLI subcommand.
//!
//! Fast, deterministic spot checks of the library's core identities; the
//! heavyweight Monte Carlo oracles live in the test suites.

use super::{run_point, Scheme};
use crate::channel::{
    condition_number, lambertian_order, make_overlap_channel, ChannelMatrix, NoiseSpec,
};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::fdsm::{FdsmModem, ZfEqualizer};
use crate::ofdm::{clip_atoms, clipped_signal_power, dc_bias_from_db, hermitian_extend, Dft};
use crate::qam::QamConstellation;
use crate::rng::RandomStream;
use crate::tdsm::{map_estimate_sample, MapDetector, TdDetector, TdsmModem};
use crate::BitBuffer;
use num_complex::Complex64;

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Failure(format!("selftest failed: {what}")))
    }
}

fn constellations() -> Result<()> {
    for m in [4usize, 16, 64, 256] {
        let c = QamConstellation::build(m)?;
        let avg: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / m as f64;
        check((avg - 1.0).abs() < 1e-12, "constellation unit power")?;
        for label in 0..m {
            check(c.slice(c.point(label)) == label, "map/slice roundtrip")?;
        }
    }
    check(QamConstellation::build(32).is_err(), "cross QAM rejected")
}

fn transforms() -> Result<()> {
    let mut stream = RandomStream::derive(0xC0FFEE, 0);
    for n in [8usize, 64, 256] {
        let dft = Dft::new(n);
        let q: Vec<Complex64> = (0..n / 2 - 1)
            .map(|_| Complex64::new(stream.standard_normal(), stream.standard_normal()))
            .collect();
        let frame = hermitian_extend(&q, n)?;
        let x = dft.ifft_real(&frame)?;
        let s = dft.fft(&x);
        let worst = s
            .iter()
            .zip(frame.bins())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        check(worst < 1e-10, "transform roundtrip")?;
    }
    Ok(())
}

fn channel_model() -> Result<()> {
    check(
        (lambertian_order(60f64.to_radians())? - 1.0).abs() < 1e-12,
        "Lambertian order at 60 degrees",
    )?;
    for (n, rho) in [(4usize, 1.0), (4, 3.5), (16, 400.0)] {
        let h = make_overlap_channel(n, rho, 1.0)?;
        let measured = condition_number(&h)?;
        check(
            (measured - rho).abs() / rho < 1e-9,
            "overlap channel condition number",
        )?;
    }
    Ok(())
}

fn clipped_statistics() -> Result<()> {
    let sigma = 0.2;
    let mut stream = RandomStream::derive(0xBEEF, 0);
    for bias_db in [7.0, 10.0] {
        let bias = dc_bias_from_db(bias_db, sigma)?;
        let analytic = clipped_signal_power(sigma, bias, 0.0, f64::INFINITY);
        let n = 1_000_000;
        let mut acc = 0.0;
        let mut clipped = 0u64;
        for _ in 0..n {
            let v = (sigma * stream.standard_normal() + bias).max(0.0);
            acc += v * v;
            if v == 0.0 {
                clipped += 1;
            }
        }
        let empirical = acc / n as f64;
        check(
            (analytic - empirical).abs() / analytic < 0.02,
            "clipped power vs Monte Carlo",
        )?;
        let (atom, _) = clip_atoms(sigma, bias, 0.0, f64::INFINITY);
        let freq = clipped as f64 / n as f64;
        let se = (atom * (1.0 - atom) / n as f64).sqrt();
        check((freq - atom).abs() < 4.0 * se + 1e-9, "clip atom frequency")?;
    }
    Ok(())
}

fn noiseless_chains() -> Result<()> {
    let cfg = SimConfig {
        n_fft: 64,
        m_order: 16,
        bias_db: 13.0,
        ..SimConfig::default()
    };
    let h = ChannelMatrix::identity(4);
    let mut stream = RandomStream::derive(0xFEED, 0);

    let fdsm = FdsmModem::new(&cfg)?;
    let eq = ZfEqualizer::new(&h)?;
    for _ in 0..20 {
        let payload = BitBuffer::random(fdsm.payload_bits(), &mut stream);
        let frame = fdsm.encode(&payload)?;
        let y = fdsm.transmit(&frame, &h, NoiseSpec::noiseless(), &mut stream)?;
        check(fdsm.decode(&y, &eq)? == payload, "fdsm noiseless roundtrip")?;
    }

    let tdsm = TdsmModem::new(&cfg)?;
    for det in [TdDetector::Map, TdDetector::Zf] {
        for _ in 0..20 {
            let payload = BitBuffer::random(tdsm.payload_bits(), &mut stream);
            let frame = tdsm.encode(&payload)?;
            let y = tdsm.transmit(&frame, &h, NoiseSpec::noiseless(), &mut stream)?;
            let sigma_n = if det == TdDetector::Map { 1e-12 } else { 0.0 };
            check(
                tdsm.decode(&y, &h, sigma_n, det)? == payload,
                "tdsm noiseless roundtrip",
            )?;
        }
    }
    Ok(())
}

fn map_against_grid() -> Result<()> {
    let mut stream = RandomStream::derive(0xACE, 0);
    let sigma = 0.1;
    let sigma_n = 0.03;
    let bias = 0.3;
    let lo = 0.0;
    let hi = f64::INFINITY;
    for _ in 0..100 {
        let h = ChannelMatrix::new(
            nalgebra::DMatrix::from_fn(2, 2, |_, _| stream.standard_normal().abs() + 0.05),
            crate::channel::Provenance::Loaded,
        )?;
        let det = MapDetector::new(&h, sigma, sigma_n, bias, lo, hi)?;
        let y: Vec<f64> = (0..2).map(|_| 0.2 * stream.standard_normal()).collect();
        let (best_idx, best_x) = det.detect(&y);
        // Coarse grid search over the joint metric.
        let mut grid_best = (0usize, 0.0f64, f64::INFINITY);
        for i in 0..2 {
            let col: Vec<f64> = h.matrix().column(i).iter().cloned().collect();
            for step in 0..=4000 {
                let x = lo + (bias + 6.0 * sigma - lo) * step as f64 / 4000.0;
                let res: f64 = y
                    .iter()
                    .zip(&col)
                    .map(|(a, b)| (a - b * x) * (a - b * x))
                    .sum();
                let metric = sigma * sigma * res + sigma_n * sigma_n * (x - bias) * (x - bias);
                if metric < grid_best.2 {
                    grid_best = (i, x, metric);
                }
            }
        }
        check(best_idx == grid_best.0, "MAP index vs grid search")?;
        let _ = map_estimate_sample(&y, &[0.1, 0.1], sigma, sigma_n, bias, lo, hi)?;
        check(
            (best_x - grid_best.1).abs() < 2.0 * (bias + 6.0 * sigma) / 4000.0,
            "MAP sample vs grid search",
        )?;
    }
    Ok(())
}

fn engine_determinism() -> Result<()> {
    let cfg = SimConfig {
        n_fft: 64,
        m_order: 16,
        max_frames: 128,
        target_bit_errors: 50,
        master_seed: 11,
        ..SimConfig::default()
    };
    let h = ChannelMatrix::identity(4);
    for scheme in Scheme::ALL {
        let a = run_point(&cfg, scheme, &h, 9.0, 0)?;
        let b = run_point(&cfg, scheme, &h, 9.0, 0)?;
        check(a == b, "run_point determinism")?;
    }
    Ok(())
}

/// Runs every check, returning (name, outcome) pairs.
pub fn run_all() -> Vec<(&'static str, Result<()>)> {
    vec![
        ("constellations", constellations()),
        ("transforms", transforms()),
        ("channel_model", channel_model()),
        ("clipped_statistics", clipped_statistics()),
        ("noiseless_chains", noiseless_chains()),
        ("map_detector_vs_grid", map_against_grid()),
        ("engine_determinism", engine_determinism()),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_passes() {
        for (name, outcome) in super::run_all() {
            assert!(outcome.is_ok(), "{name}: {outcome:?}");
        }
    }
}
