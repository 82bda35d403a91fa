//! Monte Carlo engine throughput: parallel frame fan-out vs the sequential
//! baseline, per scheme, on a fixed 256-frame workload.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use owsm::channel::ChannelMatrix;
use owsm::sim::{run_point, run_point_seq, Scheme};
use owsm::{BitBuffer, RandomStream, SimConfig};

fn point_cfg(m_order: usize) -> SimConfig {
    SimConfig {
        n_fft: 256,
        m_order,
        n_tx: 4,
        n_rx: 4,
        bias_db: 10.0,
        master_seed: 7,
        max_frames: 256,
        // Never stop early so every iteration simulates the same frames.
        target_bit_errors: u64::MAX - 1,
        ..SimConfig::default()
    }
}

fn payload_bits(cfg: &SimConfig, scheme: Scheme) -> u64 {
    let per_frame = match scheme {
        Scheme::Fdsm => cfg.data_subcarriers() * (cfg.k_c() + cfg.k_s()),
        _ => cfg.data_subcarriers() * cfg.k_c() + cfg.n_fft * cfg.k_s(),
    };
    cfg.max_frames * per_frame as u64
}

fn bench_run_point(c: &mut Criterion) {
    let h = ChannelMatrix::identity(4);
    let mut group = c.benchmark_group("run_point/256_frames");
    group.sample_size(10);
    for (scheme, m_order) in [
        (Scheme::Fdsm, 64),
        (Scheme::TdsmMap, 16),
        (Scheme::TdsmZf, 16),
    ] {
        let cfg = point_cfg(m_order);
        group.throughput(Throughput::Elements(payload_bits(&cfg, scheme)));
        group.bench_with_input(BenchmarkId::new("sequential", scheme), &cfg, |b, cfg| {
            b.iter(|| run_point_seq(cfg, scheme, &h, 18.0, 0).unwrap())
        });
        // Without the parallel feature this is the same code path as the
        // sequential baseline; benching both keeps the builds comparable.
        group.bench_with_input(BenchmarkId::new("parallel", scheme), &cfg, |b, cfg| {
            b.iter(|| run_point(cfg, scheme, &h, 18.0, 0).unwrap())
        });
    }
    group.finish();
}

fn bench_modem_stages(c: &mut Criterion) {
    use owsm::channel::NoiseSpec;
    use owsm::fdsm::{FdsmModem, ZfEqualizer};
    use owsm::tdsm::{TdDetector, TdsmModem};

    let h = ChannelMatrix::identity(4);
    let mut group = c.benchmark_group("frame");

    let cfg = point_cfg(64);
    let fdsm = FdsmModem::new(&cfg).unwrap();
    let eq = ZfEqualizer::new(&h).unwrap();
    let mut stream = RandomStream::derive(7, 0);
    let payload = BitBuffer::random(fdsm.payload_bits(), &mut stream);
    let frame = fdsm.encode(&payload).unwrap();
    let noise = NoiseSpec::new(0.01).unwrap();
    let y = fdsm.transmit(&frame, &h, noise, &mut stream).unwrap();
    group.bench_function("fdsm_encode", |b| b.iter(|| fdsm.encode(&payload).unwrap()));
    group.bench_function("fdsm_decode", |b| b.iter(|| fdsm.decode(&y, &eq).unwrap()));

    let cfg = point_cfg(16);
    let tdsm = TdsmModem::new(&cfg).unwrap();
    let payload = BitBuffer::random(tdsm.payload_bits(), &mut stream);
    let frame = tdsm.encode(&payload).unwrap();
    let y = tdsm.transmit(&frame, &h, noise, &mut stream).unwrap();
    let map_rx = tdsm.receiver(&h, noise.sigma_n, TdDetector::Map).unwrap();
    let zf_rx = tdsm.receiver(&h, noise.sigma_n, TdDetector::Zf).unwrap();
    group.bench_function("tdsm_encode", |b| b.iter(|| tdsm.encode(&payload).unwrap()));
    group.bench_function("tdsm_decode_map", |b| {
        b.iter(|| tdsm.decode_prepared(&y, &map_rx).unwrap())
    });
    group.bench_function("tdsm_decode_zf", |b| {
        b.iter(|| tdsm.decode_prepared(&y, &zf_rx).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_run_point, bench_modem_stages);
criterion_main!(benches);
