//! Start-to-all cross-correlation between the two detector channels.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::stream::{Channel, TimestampStream};
use crate::{PhotonError, Result};

/// Coincidence counts at lag `τ = t₋ − t₊`, bins centred on multiples of the bin width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationHistogram {
    pub bin_width_ps: u64,
    /// Bins reach `±half_bins · bin_width`.
    pub half_bins: usize,
    pub counts: Vec<u64>,
    /// Coincidences per bin expected for uncorrelated channels.
    pub normalization: f64,
}

impl CorrelationHistogram {
    pub fn lags_ns(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|k| (k as f64 - self.half_bins as f64) * self.bin_width_ps as f64 * 1e-3)
            .collect()
    }

    pub fn g2(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.normalization).collect()
    }

    /// Poisson standard error of each normalized bin (at least one count).
    pub fn g2_sigma(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| (c.max(1) as f64).sqrt() / self.normalization)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "lag_ns,counts,g2")?;
        for ((l, c), g) in self.lags_ns().iter().zip(&self.counts).zip(self.g2()) {
            writeln!(w, "{l},{c},{g}")?;
        }
        Ok(())
    }
}

/// Counts every plus–minus pair within `±max_lag_ps`.
pub fn correlate(stream: &TimestampStream, bin_width_ps: u64, max_lag_ps: u64) -> Result<CorrelationHistogram> {
    if bin_width_ps == 0 || max_lag_ps < bin_width_ps {
        return Err(PhotonError::InvalidParameter(format!(
            "bin width {bin_width_ps} ps must be positive and below the lag range {max_lag_ps} ps"
        )));
    }
    let plus = stream.times(Channel::Plus);
    let minus = stream.times(Channel::Minus);
    if plus.is_empty() {
        return Err(PhotonError::EmptyChannel(Channel::Plus));
    }
    if minus.is_empty() {
        return Err(PhotonError::EmptyChannel(Channel::Minus));
    }
    if stream.duration_ps == 0 {
        return Err(PhotonError::InvalidParameter("zero stream duration".into()));
    }
    let half_bins = ((max_lag_ps as f64 / bin_width_ps as f64).round() as usize).max(1);
    let nb = 2 * half_bins + 1;
    let reach = (half_bins as i64) * bin_width_ps as i64 + bin_width_ps as i64 / 2;
    let w = bin_width_ps as i64;
    let mut counts = vec![0u64; nb];
    let mut start = 0usize;
    for &tp in &plus {
        let tp = tp as i64;
        while start < minus.len() && (minus[start] as i64) < tp - reach {
            start += 1;
        }
        for &tm in &minus[start..] {
            let lag = tm as i64 - tp;
            if lag > reach {
                break;
            }
            // floor((lag + w/2) / w) shifted so bin `half_bins` is centred on 0
            let k = (lag + reach).div_euclid(w);
            if let Some(c) = counts.get_mut(k as usize) {
                *c += 1;
            }
        }
    }
    let normalization = plus.len() as f64 * minus.len() as f64 * bin_width_ps as f64 / stream.duration_ps as f64;
    Ok(CorrelationHistogram {
        bin_width_ps,
        half_bins,
        counts,
        normalization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{Event, StreamMetadata};

    #[test]
    fn pair_lands_in_its_bin() {
        let ev = |t, c| Event { time_ps: t, channel: c };
        let s = TimestampStream::new(
            vec![ev(1000, Channel::Plus), ev(1240, Channel::Minus), ev(5000, Channel::Minus)],
            10_000,
            StreamMetadata::default(),
        )
        .unwrap();
        let h = correlate(&s, 100, 1000).unwrap();
        assert_eq!(h.counts.len(), 21);
        assert_eq!(h.counts[12], 1);
        assert_eq!(h.counts.iter().sum::<u64>(), 1);
        assert!((h.lags_ns()[12] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn empty_channel_is_an_error() {
        let s = TimestampStream::new(
            vec![Event { time_ps: 1, channel: Channel::Plus }],
            10,
            StreamMetadata::default(),
        )
        .unwrap();
        assert!(matches!(correlate(&s, 1, 5), Err(PhotonError::EmptyChannel(Channel::Minus))));
    }
}
