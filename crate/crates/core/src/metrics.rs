//! Aggregation of period records into box statistics, beamwidth CDFs and
//! throughput figures.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::antenna::{Beamwidth, BeamwidthLadder};
use crate::engine::{PeriodRecord, Policy};
use crate::error::{Error, Result};

/// Nearest-rank percentile of ascending `samples`: the value at 1-based rank
/// `ceil(p·n)`, clamped to `[1, n]`.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = samples.len();
    let rank = libm::ceil(p * n as f64) as i64;
    let rank = rank.clamp(1, n as i64) as usize;
    Ok(samples[rank - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub p5: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub p95: f64,
    pub mean: f64,
    pub count: usize,
}

impl BoxStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self::from_sorted(&sorted)
    }

    pub fn from_sorted(sorted: &[f64]) -> Result<Self> {
        if sorted.is_empty() {
            return Err(Error::EmptyData);
        }
        // summing in sorted order keeps the mean independent of input order
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        Ok(Self {
            p5: percentile(sorted, 0.05)?,
            p25: percentile(sorted, 0.25)?,
            median: percentile(sorted, 0.50)?,
            p75: percentile(sorted, 0.75)?,
            p95: percentile(sorted, 0.95)?,
            mean,
            count: sorted.len(),
        })
    }
}

/// Mergeable fold over period records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Accumulator {
    contacted: Vec<f64>,
    pdr_percent: Vec<f64>,
    /// (beamwidth, used intervals) pairs, one per scheduled burst set.
    beam_uses: Vec<(Beamwidth, u64)>,
    delivered_packets: u64,
    contacted_receivers: u64,
    used_intervals: u64,
    neighbor_sum: u64,
    tx_records: u64,
    periods: u64,
    packets_per_interval: u32,
}

impl Accumulator {
    pub fn new(packets_per_interval: u32) -> Self {
        Self {
            packets_per_interval,
            ..Default::default()
        }
    }

    pub fn add(&mut self, rec: &PeriodRecord) {
        self.periods += 1;
        for t in &rec.transmitters {
            if t.neighbors == 0 {
                continue;
            }
            self.tx_records += 1;
            self.neighbor_sum += t.neighbors as u64;
            self.contacted.push(t.contacted_ratio());
            self.contacted_receivers += t.contacted as u64;
            self.used_intervals += t.used_intervals as u64;
            if let (Some(bw), true) = (t.beamwidth, t.used_intervals > 0) {
                self.beam_uses.push((bw, t.used_intervals as u64));
            }
            for s in &t.samples {
                self.delivered_packets += u64::from(s.delivered_packets);
                self.pdr_percent
                    .push(100.0 * f64::from(s.delivered_packets) / f64::from(self.packets_per_interval));
            }
        }
    }

    pub fn extend<'a>(&mut self, recs: impl IntoIterator<Item = &'a PeriodRecord>) {
        for r in recs {
            self.add(r);
        }
    }

    pub fn merge(&mut self, other: Accumulator) {
        self.contacted.extend(other.contacted);
        self.pdr_percent.extend(other.pdr_percent);
        self.beam_uses.extend(other.beam_uses);
        self.delivered_packets += other.delivered_packets;
        self.contacted_receivers += other.contacted_receivers;
        self.used_intervals += other.used_intervals;
        self.neighbor_sum += other.neighbor_sum;
        self.tx_records += other.tx_records;
        self.periods += other.periods;
    }

    pub fn contacted_stats(&self) -> Result<BoxStats> {
        BoxStats::from_samples(&self.contacted)
    }

    pub fn pdr_stats(&self) -> Result<BoxStats> {
        BoxStats::from_samples(&self.pdr_percent)
    }

    pub fn beamwidth_cdf(&self, ladder: &BeamwidthLadder) -> Vec<(Beamwidth, f64)> {
        let total: u64 = self.beam_uses.iter().map(|u| u.1).sum();
        if total == 0 {
            return Vec::new();
        }
        let mut cum = 0u64;
        ladder
            .entries()
            .iter()
            .map(|&bw| {
                cum += self.beam_uses.iter().filter(|u| u.0 == bw).map(|u| u.1).sum::<u64>();
                (bw, cum as f64 / total as f64)
            })
            .collect()
    }

    pub fn delivered_packets(&self) -> u64 {
        self.delivered_packets
    }

    pub fn periods(&self) -> u64 {
        self.periods
    }

    pub fn mean_neighbors(&self) -> Option<f64> {
        (self.tx_records > 0).then(|| self.neighbor_sum as f64 / self.tx_records as f64)
    }

    pub fn mean_receivers_per_interval(&self) -> Option<f64> {
        (self.used_intervals > 0).then(|| self.contacted_receivers as f64 / self.used_intervals as f64)
    }

    pub fn aggregated_throughput_mbps(&self, packet_bits: f64, duration_s: f64) -> f64 {
        self.delivered_packets as f64 * packet_bits / duration_s / 1e6
    }
}

/// Box statistics of per-transmitter, per-period contacted ratios.
pub fn contacted_stats(records: &[PeriodRecord]) -> Result<BoxStats> {
    let mut acc = Accumulator::new(1);
    acc.extend(records);
    acc.contacted_stats()
}

/// Empirical CDF of the beamwidth over scheduled bursts, one sample per
/// used interval, evaluated at every ladder entry.
pub fn beamwidth_cdf(records: &[PeriodRecord], ladder: &BeamwidthLadder) -> Vec<(Beamwidth, f64)> {
    let mut acc = Accumulator::new(1);
    acc.extend(records);
    acc.beamwidth_cdf(ladder)
}

/// Probability mass the CDF assigns to exactly `bw`.
pub fn cdf_mass_at(cdf: &[(Beamwidth, f64)], bw: Beamwidth) -> f64 {
    let mut prev = 0.0;
    for &(b, c) in cdf {
        if b == bw {
            return c - prev;
        }
        prev = c;
    }
    0.0
}

/// Mass strictly above `bw`.
pub fn cdf_mass_above(cdf: &[(Beamwidth, f64)], bw: Beamwidth) -> f64 {
    let at_or_below = cdf.iter().rev().find(|(b, _)| *b <= bw).map_or(0.0, |(_, c)| *c);
    if cdf.is_empty() {
        0.0
    } else {
        1.0 - at_or_below
    }
}

/// PDR box statistics in percent, one sample per (tx, rx, interval).
pub fn pdr_stats(records: &[PeriodRecord], packets_per_interval: u32) -> Result<BoxStats> {
    let mut acc = Accumulator::new(packets_per_interval);
    acc.extend(records);
    acc.pdr_stats()
}

pub fn aggregated_throughput_mbps(records: &[PeriodRecord], packet_bits: f64, duration_s: f64) -> f64 {
    let mut acc = Accumulator::new(1);
    acc.extend(records);
    acc.aggregated_throughput_mbps(packet_bits, duration_s)
}

/// Relative throughput increase of `adaptive` over `baseline`, in percent.
pub fn throughput_gain(adaptive: &[PeriodRecord], baseline: &[PeriodRecord], packet_bits: f64, duration_s: f64) -> Result<f64> {
    let a = aggregated_throughput_mbps(adaptive, packet_bits, duration_s);
    let b = aggregated_throughput_mbps(baseline, packet_bits, duration_s);
    gain_percent(a, b)
}

pub fn gain_percent(adaptive: f64, baseline: f64) -> Result<f64> {
    if baseline <= 0.0 {
        return Err(Error::UndefinedGain);
    }
    Ok((adaptive - baseline) / baseline * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioLabel {
    pub density_per_km: f64,
    pub tx_ratio: f64,
    pub policy: Policy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: ScenarioLabel,
    pub contacted: Option<BoxStats>,
    pub beamwidth_cdf: Vec<(Beamwidth, f64)>,
    pub pdr: Option<BoxStats>,
    pub aggregated_throughput_mbps: f64,
    pub mean_receivers_per_interval: Option<f64>,
    pub mean_neighbors: Option<f64>,
    pub delivered_packets: u64,
    pub duration_s: f64,
}

impl MetricsReport {
    pub fn from_accumulator(label: ScenarioLabel, acc: &Accumulator, ladder: &BeamwidthLadder, packet_bits: f64, duration_s: f64) -> Self {
        Self {
            label,
            contacted: acc.contacted_stats().ok(),
            beamwidth_cdf: acc.beamwidth_cdf(ladder),
            pdr: acc.pdr_stats().ok(),
            aggregated_throughput_mbps: acc.aggregated_throughput_mbps(packet_bits, duration_s),
            mean_receivers_per_interval: acc.mean_receivers_per_interval(),
            mean_neighbors: acc.mean_neighbors(),
            delivered_packets: acc.delivered_packets(),
            duration_s,
        }
    }
}
