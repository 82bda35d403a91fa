//! Square M-QAM constellations with Gray bit labeling.
//!
//! Points live on the odd-integer lattice {±1, ±3, ...}² scaled to unit
//! average electrical power. Labels are per-axis reflected-binary Gray codes,
//! in-phase bits first, then quadrature bits; label index 0 is the (+I, +Q)
//! corner. Only square constellations (M a power of 4) are supported.

use crate::bits::bits_to_index;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// A square M-QAM constellation.
///
/// `points[v]` is the symbol whose bit label (MSB first) has value `v`, so the
/// label list is implicitly `0..M` and "lowest label index" ties resolve to
/// the lowest array index.
#[derive(Debug, Clone)]
pub struct QamConstellation {
    order: usize,
    bits_per_symbol: usize,
    side: usize,
    scale: f64,
    points: Vec<Complex64>,
}

impl QamConstellation {
    /// Builds the M-QAM constellation. M must be a power of 4.
    pub fn build(m: usize) -> Result<Self> {
        if m < 4 || !power_of_four(m) {
            return Err(Error::UnsupportedConstellation(m));
        }
        let bits_per_symbol = m.trailing_zeros() as usize;
        let side = 1usize << (bits_per_symbol / 2);
        // Mean square of the odd-level lattice is 2(side^2 - 1)/3.
        let scale = (3.0 / (2.0 * (side * side - 1) as f64)).sqrt();
        let half = bits_per_symbol / 2;
        let points = (0..m)
            .map(|label| {
                let i_idx = gray_decode(label >> half);
                let q_idx = gray_decode(label & (side - 1));
                Complex64::new(level(i_idx, side) * scale, level(q_idx, side) * scale)
            })
            .collect();
        Ok(Self {
            order: m,
            bits_per_symbol,
            side,
            scale,
            points,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Bits per constellation symbol, log2(M).
    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Maps a log2(M)-bit string (MSB first) to its constellation point.
    pub fn map_bits(&self, bits: &[u8]) -> Result<Complex64> {
        if bits.len() != self.bits_per_symbol {
            return Err(Error::BitLength {
                expected: self.bits_per_symbol,
                got: bits.len(),
            });
        }
        Ok(self.points[bits_to_index(bits)])
    }

    /// Nearest-point slicing: returns the label of the closest constellation
    /// point in Euclidean distance, ties broken by lowest label index.
    pub fn slice(&self, z: Complex64) -> usize {
        let half = self.bits_per_symbol / 2;
        let gi = self.slice_axis(z.re);
        let gq = self.slice_axis(z.im);
        (gi << half) | gq
    }

    /// Label and squared distance of the nearest point.
    pub fn slice_with_distance(&self, z: Complex64) -> (usize, f64) {
        let label = self.slice(z);
        let d = z - self.points[label];
        (label, d.norm_sqr())
    }

    // Nearest level along one axis, returned as the Gray code of its index.
    // On an exact midpoint tie the smaller Gray code wins, which together
    // with the per-axis label split realizes the lowest-label tie rule.
    fn slice_axis(&self, v: f64) -> usize {
        let k = self.side;
        let idx_real = ((k - 1) as f64 - v / self.scale) / 2.0;
        if idx_real <= 0.0 {
            return gray_encode(0);
        }
        if idx_real >= (k - 1) as f64 {
            return gray_encode(k - 1);
        }
        let lo = idx_real.floor() as usize;
        let hi = lo + 1;
        let d_lo = idx_real - lo as f64;
        let d_hi = hi as f64 - idx_real;
        if d_lo < d_hi {
            gray_encode(lo)
        } else if d_hi < d_lo {
            gray_encode(hi)
        } else {
            gray_encode(lo).min(gray_encode(hi))
        }
    }
}

// Level of axis index `idx`, descending so index 0 is the positive edge.
fn level(idx: usize, side: usize) -> f64 {
    (side - 1) as f64 - 2.0 * idx as f64
}

fn power_of_four(m: usize) -> bool {
    m.is_power_of_two() && m.trailing_zeros().is_multiple_of(2)
}

fn gray_encode(v: usize) -> usize {
    v ^ (v >> 1)
}

fn gray_decode(g: usize) -> usize {
    let mut v = g;
    let mut s = g >> 1;
    while s != 0 {
        v ^= s;
        s >>= 1;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::push_index_bits;

    fn brute_force_slice(c: &QamConstellation, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in c.points().iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        best
    }

    #[test]
    fn gray_code_roundtrip() {
        for v in 0..64 {
            assert_eq!(gray_decode(gray_encode(v)), v);
        }
    }

    #[test]
    fn qpsk_points() {
        let c = QamConstellation::build(4).unwrap();
        let s = 0.5f64.sqrt();
        for p in c.points() {
            assert!((p.re.abs() - s).abs() < 1e-15);
            assert!((p.im.abs() - s).abs() < 1e-15);
        }
        let avg: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 4.0;
        assert!((avg - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qam16_lattice_scale() {
        // Unscaled mean square over the {±1,±3}² lattice is 10, so the
        // lattice is scaled by 1/sqrt(10).
        let c = QamConstellation::build(16).unwrap();
        let s = 1.0 / 10.0f64.sqrt();
        for p in c.points() {
            let li = p.re / s;
            let lq = p.im / s;
            assert!((li.round() - li).abs() < 1e-12);
            assert!([1.0, 3.0].contains(&li.abs().round()));
            assert!([1.0, 3.0].contains(&lq.abs().round()));
        }
    }

    #[test]
    fn unit_power_all_supported_orders() {
        for m in [4usize, 16, 64, 256, 1024] {
            let c = QamConstellation::build(m).unwrap();
            let avg: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / m as f64;
            assert!((avg - 1.0).abs() < 1e-12, "M={m}: avg power {avg}");
        }
    }

    #[test]
    fn rejects_non_square_orders() {
        for m in [0usize, 1, 2, 6, 8, 32, 128] {
            assert!(QamConstellation::build(m).is_err(), "M={m} accepted");
        }
    }

    #[test]
    fn label_zero_is_positive_corner() {
        let c = QamConstellation::build(4).unwrap();
        let s = 0.5f64.sqrt();
        let p = c.map_bits(&[0, 0]).unwrap();
        assert!((p - Complex64::new(s, s)).norm() < 1e-15);
    }

    #[test]
    fn map_slice_roundtrip() {
        for m in [4usize, 16, 64, 256] {
            let c = QamConstellation::build(m).unwrap();
            let k = c.bits_per_symbol();
            for label in 0..m {
                let mut bits = Vec::new();
                push_index_bits(&mut bits, label, k);
                let p = c.map_bits(&bits).unwrap();
                assert_eq!(c.slice(p), label, "M={m} label={label}");
            }
        }
    }

    #[test]
    fn points_distinct() {
        let c = QamConstellation::build(16).unwrap();
        for a in 0..16 {
            for b in (a + 1)..16 {
                assert!((c.point(a) - c.point(b)).norm() > 1e-9);
            }
        }
    }

    #[test]
    fn wrong_bit_length() {
        let c = QamConstellation::build(16).unwrap();
        assert!(c.map_bits(&[0, 1, 0]).is_err());
    }

    #[test]
    fn gray_property_on_lattice_neighbors() {
        // Lattice-adjacent points must differ in exactly one label bit.
        for m in [4usize, 16, 64, 256] {
            let c = QamConstellation::build(m).unwrap();
            let step = 2.0 * c.scale;
            for a in 0..m {
                for b in 0..m {
                    let d = c.point(a) - c.point(b);
                    let adjacent = (d.norm() - step).abs() < 1e-9
                        && (d.re.abs() < 1e-12 || d.im.abs() < 1e-12);
                    if adjacent {
                        let hamming = (a ^ b).count_ones();
                        assert_eq!(hamming, 1, "M={m} labels {a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn slice_nearest_corner() {
        let c = QamConstellation::build(4).unwrap();
        let s = 0.5f64.sqrt();
        let label = c.slice(Complex64::new(0.70, 0.72));
        assert!((c.point(label) - Complex64::new(s, s)).norm() < 1e-15);
    }

    #[test]
    fn slice_tie_goes_to_lowest_label() {
        let c = QamConstellation::build(4).unwrap();
        // The origin is equidistant from all four points.
        assert_eq!(c.slice(Complex64::new(0.0, 0.0)), 0);
        let c16 = QamConstellation::build(16).unwrap();
        assert_eq!(
            c16.slice(Complex64::new(0.0, 0.0)),
            brute_force_slice(&c16, Complex64::new(0.0, 0.0))
        );
    }

    #[test]
    fn slice_matches_brute_force() {
        use crate::rng::RandomStream;
        let mut stream = RandomStream::derive(99, 0);
        for m in [4usize, 16, 64] {
            let c = QamConstellation::build(m).unwrap();
            for _ in 0..2000 {
                let z = Complex64::new(
                    1.5 * stream.standard_normal(),
                    1.5 * stream.standard_normal(),
                );
                assert_eq!(c.slice(z), brute_force_slice(&c, z), "M={m}, z={z}");
            }
        }
    }
}
