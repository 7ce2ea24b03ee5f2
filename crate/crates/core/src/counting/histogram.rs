use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CountingError, TimestampStream};

/// Events of stream `a` per parallel work unit.
const CHUNK: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub bin_width_ps: i64,
    /// Bin centres run from `-range_ps` to `+range_ps`.
    pub range_ps: i64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            bin_width_ps: 100,
            range_ps: 50_000,
        }
    }
}

/// Counts of delays `t_b − t_a` in bins centred on multiples of the bin width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub bin_width_ps: i64,
    pub offsets_ps: Vec<i64>,
    pub counts: Vec<u64>,
}

impl CoincidenceHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index of the bin centred at `offset_ps`, if present.
    pub fn index_of(&self, offset_ps: i64) -> Option<usize> {
        let first = *self.offsets_ps.first()?;
        let d = offset_ps - first;
        (d % self.bin_width_ps == 0)
            .then(|| (d / self.bin_width_ps) as usize)
            .filter(|i| *i < self.counts.len())
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "offset_ps,count")?;
        for (o, c) in self.offsets_ps.iter().zip(&self.counts) {
            writeln!(out, "{o},{c}")?;
        }
        Ok(())
    }
}

/// Signed bin index of an integer delay: nearest multiple of `width`, ties
/// rounded away from zero so that negating every delay mirrors the histogram
/// exactly.
#[inline]
fn bin_index(delay: i64, width: i64) -> i64 {
    let k = (2 * delay.abs() + width) / (2 * width);
    if delay < 0 {
        -k
    } else {
        k
    }
}

/// Delay histogram of `b` relative to `a`, built with a two-pointer sweep.
/// Stream `a` is partitioned into fixed-size chunks that are histogrammed in
/// parallel; integer counts make the result independent of scheduling.
pub fn histogram(
    a: &TimestampStream,
    b: &TimestampStream,
    config: HistogramConfig,
) -> Result<CoincidenceHistogram, CountingError> {
    let HistogramConfig {
        bin_width_ps: width,
        range_ps,
    } = config;
    if width <= 0 {
        return Err(CountingError::InvalidHistogram(format!(
            "bin width must be positive, got {width} ps"
        )));
    }
    if range_ps < 0 {
        return Err(CountingError::InvalidHistogram(format!(
            "range must be non-negative, got {range_ps} ps"
        )));
    }
    let half_bins = range_ps / width;
    let nbins = (2 * half_bins + 1) as usize;
    // any delay that can land in bin ±half_bins
    let reach = width * half_bins + width / 2;

    let ta = a.times_ps();
    let tb = b.times_ps();
    let counts = ta
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut local = vec![0u64; nbins];
            let mut lo = tb.partition_point(|&t| t < chunk[0] - reach);
            for &t in chunk {
                while lo < tb.len() && tb[lo] < t - reach {
                    lo += 1;
                }
                for &u in &tb[lo..] {
                    let delay = u - t;
                    if delay > reach {
                        break;
                    }
                    let k = bin_index(delay, width);
                    if k.abs() <= half_bins {
                        local[(k + half_bins) as usize] += 1;
                    }
                }
            }
            local
        })
        .reduce(
            || vec![0u64; nbins],
            |mut x, y| {
                x.iter_mut().zip(&y).for_each(|(p, q)| *p += q);
                x
            },
        );
    let offsets_ps = (-half_bins..=half_bins).map(|k| k * width).collect();
    Ok(CoincidenceHistogram {
        bin_width_ps: width,
        offsets_ps,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stream(times: Vec<i64>) -> TimestampStream {
        TimestampStream::from_unsorted("x", times, 1_000_000_000_000).unwrap()
    }

    #[test]
    fn identical_single_events() {
        let a = stream(vec![1000]);
        let h = histogram(&a, &a, HistogramConfig::default()).unwrap();
        assert_eq!(h.total(), 1);
        assert_eq!(h.counts[h.index_of(0).unwrap()], 1);
        assert_eq!(h.offsets_ps.len(), 1001);
    }

    #[test]
    fn pure_shift() {
        let ta: Vec<i64> = (0..500).map(|i| 10_000 + i * 97_331).collect();
        let tb: Vec<i64> = ta.iter().map(|t| t + 500).collect();
        let h = histogram(
            &stream(ta),
            &stream(tb),
            HistogramConfig {
                bin_width_ps: 100,
                range_ps: 2_000,
            },
        )
        .unwrap();
        assert_eq!(h.counts[h.index_of(500).unwrap()], 500);
        assert_eq!(h.total(), 500);
    }

    #[test]
    fn tie_rounding_is_symmetric() {
        assert_eq!(bin_index(49, 100), 0);
        assert_eq!(bin_index(50, 100), 1);
        assert_eq!(bin_index(-50, 100), -1);
        assert_eq!(bin_index(149, 100), 1);
        assert_eq!(bin_index(150, 100), 2);
        assert_eq!(bin_index(1, 3), 0);
        assert_eq!(bin_index(2, 3), 1);
    }

    #[test]
    fn rejects_bad_config() {
        let a = stream(vec![1]);
        for cfg in [
            HistogramConfig { bin_width_ps: 0, range_ps: 10 },
            HistogramConfig { bin_width_ps: 10, range_ps: -1 },
        ] {
            assert!(histogram(&a, &a, cfg).is_err());
        }
    }

    #[test]
    fn chunking_does_not_change_counts() {
        // more than one chunk in `a`
        let ta: Vec<i64> = (0..(3 * CHUNK as i64 + 17)).map(|i| i * 211).collect();
        let tb: Vec<i64> = (0..20_000).map(|i| i * 503 + 7).collect();
        let (a, b) = (stream(ta.clone()), stream(tb.clone()));
        let cfg = HistogramConfig { bin_width_ps: 50, range_ps: 3_000 };
        let h = histogram(&a, &b, cfg).unwrap();
        // brute force
        let mut expect = vec![0u64; h.counts.len()];
        for &t in &ta {
            for &u in &tb {
                let k = bin_index(u - t, 50);
                if k.abs() <= 60 {
                    expect[(k + 60) as usize] += 1;
                }
            }
        }
        assert_eq!(h.counts, expect);
    }

    proptest! {
        #[test]
        fn mirror_symmetry(
            ta in prop::collection::vec(0i64..200_000, 0..200),
            tb in prop::collection::vec(0i64..200_000, 0..200),
            width in 1i64..300,
        ) {
            let (a, b) = (stream(ta), stream(tb));
            let cfg = HistogramConfig { bin_width_ps: width, range_ps: 20_000 };
            let ab = histogram(&a, &b, cfg).unwrap();
            let ba = histogram(&b, &a, cfg).unwrap();
            let mut reversed = ba.counts.clone();
            reversed.reverse();
            prop_assert_eq!(ab.counts, reversed);
            let negated: Vec<i64> = ba.offsets_ps.iter().rev().map(|o| -o).collect();
            prop_assert_eq!(ab.offsets_ps, negated);
        }
    }
}
