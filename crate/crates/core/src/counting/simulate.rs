use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Normal};
use serde::{Deserialize, Serialize};

use super::{CountingError, TimestampStream, PS_PER_S};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceParams {
    pub pair_rate_hz: f64,
    pub efficiency_s: f64,
    pub efficiency_i: f64,
    pub dark_s_hz: f64,
    pub dark_i_hz: f64,
    pub jitter_sigma_ps: f64,
    pub duration_s: f64,
    pub seed: u64,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self {
            pair_rate_hz: 1e5,
            efficiency_s: 0.5,
            efficiency_i: 0.5,
            dark_s_hz: 1e3,
            dark_i_hz: 1e3,
            jitter_sigma_ps: 50.0,
            duration_s: 10.0,
            seed: 0,
        }
    }
}

impl SourceParams {
    fn validate(&self) -> Result<(), CountingError> {
        let rates = [self.pair_rate_hz, self.dark_s_hz, self.dark_i_hz, self.jitter_sigma_ps];
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(CountingError::InvalidParameter(
                "rates and jitter must be finite and non-negative".into(),
            ));
        }
        if [self.efficiency_s, self.efficiency_i].iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(CountingError::InvalidParameter("efficiencies must lie in [0, 1]".into()));
        }
        if !(self.duration_s > 0.0 && self.duration_s * PS_PER_S < i64::MAX as f64) {
            return Err(CountingError::InvalidParameter("duration must be positive".into()));
        }
        Ok(())
    }
}

/// Arrival times of a homogeneous Poisson process on `[0, duration]`, ps.
fn poisson_times(rng: &mut ChaCha8Rng, rate_hz: f64, duration_ps: i64) -> Vec<f64> {
    let mut out = Vec::new();
    if rate_hz <= 0.0 {
        return out;
    }
    let gap = Exp::new(rate_hz / PS_PER_S).expect("positive rate");
    let mut t = gap.sample(rng);
    while t <= duration_ps as f64 {
        out.push(t);
        t += gap.sample(rng);
    }
    out
}

/// Signal and idler detection streams of a pair source without multi-pair
/// emission or dead time. Draws are made in a fixed order from one seeded
/// generator, so the output depends only on `params`.
pub fn simulate_streams(params: &SourceParams) -> Result<(TimestampStream, TimestampStream), CountingError> {
    params.validate()?;
    let duration_ps = (params.duration_s * PS_PER_S).round() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let jitter = (params.jitter_sigma_ps > 0.0)
        .then(|| Normal::new(0.0, params.jitter_sigma_ps).expect("finite sigma"));

    let pairs = poisson_times(&mut rng, params.pair_rate_hz, duration_ps);
    let expected = pairs.len() as f64;
    let mut s = Vec::with_capacity((expected * params.efficiency_s) as usize + 16);
    let mut i = Vec::with_capacity((expected * params.efficiency_i) as usize + 16);
    for &t in &pairs {
        let keep_s = rng.gen_bool(params.efficiency_s);
        let keep_i = rng.gen_bool(params.efficiency_i);
        let (js, ji) = match &jitter {
            Some(n) => (n.sample(&mut rng), n.sample(&mut rng)),
            None => (0.0, 0.0),
        };
        if keep_s {
            s.push((t + js).round() as i64);
        }
        if keep_i {
            i.push((t + ji).round() as i64);
        }
    }
    s.extend(poisson_times(&mut rng, params.dark_s_hz, duration_ps).into_iter().map(|t| t.round() as i64));
    i.extend(poisson_times(&mut rng, params.dark_i_hz, duration_ps).into_iter().map(|t| t.round() as i64));

    let finish = |mut v: Vec<i64>, label: &str| {
        v.retain(|t| (0..=duration_ps).contains(t));
        TimestampStream::from_unsorted(label, v, duration_ps)
    };
    Ok((finish(s, "s")?, finish(i, "i")?))
}
