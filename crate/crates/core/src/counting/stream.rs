use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Deserialize;

use super::CountingError;

/// Detection times of one channel, integer picoseconds, sorted ascending and
/// contained in `[0, duration_ps]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimestampStream {
    channel: String,
    times_ps: Vec<i64>,
    duration_ps: i64,
}

impl TimestampStream {
    pub fn new(
        channel: impl Into<String>,
        times_ps: Vec<i64>,
        duration_ps: i64,
    ) -> Result<Self, CountingError> {
        let channel = channel.into();
        if let Some(i) = times_ps.windows(2).position(|w| w[1] < w[0]) {
            return Err(CountingError::UnsortedStream {
                channel,
                index: i + 1,
            });
        }
        if let Some(&t) = times_ps
            .first()
            .filter(|t| **t < 0)
            .or(times_ps.last().filter(|t| **t > duration_ps))
        {
            return Err(CountingError::OutOfWindow {
                channel,
                time_ps: t,
                duration_ps,
            });
        }
        Ok(Self {
            channel,
            times_ps,
            duration_ps,
        })
    }

    /// Sorts `times_ps` before validating.
    pub fn from_unsorted(
        channel: impl Into<String>,
        mut times_ps: Vec<i64>,
        duration_ps: i64,
    ) -> Result<Self, CountingError> {
        times_ps.sort_unstable();
        Self::new(channel, times_ps, duration_ps)
    }

    pub fn channel(&self) -> &str {
        &self.channel
    }

    pub fn times_ps(&self) -> &[i64] {
        &self.times_ps
    }

    pub fn duration_ps(&self) -> i64 {
        self.duration_ps
    }

    pub fn len(&self) -> usize {
        self.times_ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_ps.is_empty()
    }

    /// Mean count rate in Hz.
    pub fn rate_hz(&self) -> f64 {
        if self.duration_ps <= 0 {
            return 0.0;
        }
        self.times_ps.len() as f64 / (self.duration_ps as f64 / super::PS_PER_S)
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    channel: String,
    time_ps: i64,
}

/// Reads `channel,time_ps` rows in any order and returns each channel's sorted
/// times.
pub fn read_timestamp_csv<R: Read>(reader: R) -> Result<BTreeMap<String, Vec<i64>>, CountingError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["channel", "time_ps"] {
        return Err(CountingError::InvalidParameter(
            "expected header `channel,time_ps`".into(),
        ));
    }
    let mut out: BTreeMap<String, Vec<i64>> = BTreeMap::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        out.entry(row.channel).or_default().push(row.time_ps);
    }
    for times in out.values_mut() {
        times.sort_unstable();
    }
    Ok(out)
}

pub fn write_timestamp_csv<W: Write>(mut out: W, streams: &[&TimestampStream]) -> std::io::Result<()> {
    writeln!(out, "channel,time_ps")?;
    for s in streams {
        for t in &s.times_ps {
            writeln!(out, "{},{t}", s.channel)?;
        }
    }
    Ok(())
}
