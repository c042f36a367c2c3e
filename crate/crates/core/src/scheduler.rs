//! Beamwidth-aware interval scheduling and the fixed-beam baseline.
//!
//! A transmitter first finds the intervals it is not reserved to receive in,
//! then scans the beamwidth ladder from narrowest to widest and keeps the
//! first width whose sector grouping of its neighbors needs no more beams
//! than it has free intervals. Groups are served in clockwise sector order.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::antenna::{AntennaModel, Beamwidth};
use crate::control::{ReservationTable, Role};
use crate::error::{Error, Result};
use crate::scenario::NeighborTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulingPeriod {
    pub period_ms: f64,
    pub interval_count: usize,
    pub interval_ms: f64,
}

impl Default for SchedulingPeriod {
    fn default() -> Self {
        Self {
            period_ms: 100.0,
            interval_count: 5,
            interval_ms: 20.0,
        }
    }
}

impl SchedulingPeriod {
    pub fn validate(&self) -> Result<()> {
        if self.interval_count == 0 || !(self.interval_ms > 0.0) {
            return Err(Error::Config("interval count and length must be positive".into()));
        }
        let total = self.interval_count as f64 * self.interval_ms;
        if (total - self.period_ms).abs() > 1e-9 * self.period_ms.abs().max(1.0) {
            return Err(Error::Config(alloc::format!(
                "interval_count x interval_ms = {} but period_ms = {}",
                total,
                self.period_ms
            )));
        }
        Ok(())
    }
}

/// Intervals a transmitter may use.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IntervalAvailability {
    pub available: Vec<usize>,
}

impl IntervalAvailability {
    pub fn count(&self) -> usize {
        self.available.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamGroup {
    pub sector: u16,
    pub interval: usize,
    pub receivers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamPlan {
    pub beamwidth: Beamwidth,
    pub groups: Vec<BeamGroup>,
}

impl BeamPlan {
    pub fn empty(beamwidth: Beamwidth) -> Self {
        Self {
            beamwidth,
            groups: Vec::new(),
        }
    }

    pub fn receiver_count(&self) -> usize {
        self.groups.iter().map(|g| g.receivers.len()).sum()
    }

    pub fn receivers(&self) -> impl Iterator<Item = u32> + '_ {
        self.groups.iter().flat_map(|g| g.receivers.iter().copied())
    }
}

/// Intervals whose role is not a reception.
pub fn check_sched_tx(table: &ReservationTable, period: &SchedulingPeriod) -> IntervalAvailability {
    let available = (0..period.interval_count.min(table.interval_count()))
        .filter(|&i| !matches!(table.role(i), Role::Rx { .. }))
        .collect();
    IntervalAvailability { available }
}

/// Neighbors grouped by the sector holding them at `bw`, in ascending sector
/// order; within a group receivers keep their clockwise order.
pub fn sector_groups(antenna: &AntennaModel, neighbors: &NeighborTable, bw: Beamwidth) -> Result<Vec<(u16, Vec<u32>)>> {
    let mut keyed = neighbors
        .neighbors
        .iter()
        .map(|n| antenna.sector_index(n.bearing, bw).map(|s| (s, n.id)))
        .collect::<Result<Vec<_>>>()?;
    // neighbors are already clockwise, so a stable sort keeps that order inside a sector
    keyed.sort_by_key(|&(s, _)| s);
    let mut groups: Vec<(u16, Vec<u32>)> = Vec::new();
    for (s, id) in keyed {
        match groups.last_mut() {
            Some((last, ids)) if *last == s => ids.push(id),
            _ => groups.push((s, alloc::vec![id])),
        }
    }
    Ok(groups)
}

/// Number of distinct sectors occupied by the neighbors at `bw`.
pub fn beams_needed(antenna: &AntennaModel, neighbors: &NeighborTable, bw: Beamwidth) -> Result<usize> {
    let mut sectors = neighbors
        .neighbors
        .iter()
        .map(|n| antenna.sector_index(n.bearing, bw))
        .collect::<Result<Vec<_>>>()?;
    sectors.sort_unstable();
    sectors.dedup();
    Ok(sectors.len())
}

/// First ladder entry whose beam count fits in the available intervals.
///
/// The ladder is walked in order without shortcuts: the beam count is not
/// monotone in the beamwidth, since sector edges of different widths do not
/// nest.
pub fn min_beamwidth(antenna: &AntennaModel, neighbors: &NeighborTable, avail: &IntervalAvailability) -> Option<Beamwidth> {
    let f = avail.count();
    antenna.ladder.entries().iter().copied().find(|&bw| {
        beams_needed(antenna, neighbors, bw).expect("ladder entries are valid") <= f
    })
}

/// Map sector groups at `bw` onto the available intervals in clockwise order.
pub fn schedule_tx(
    antenna: &AntennaModel,
    neighbors: &NeighborTable,
    bw: Beamwidth,
    avail: &IntervalAvailability,
) -> Result<BeamPlan> {
    let groups = sector_groups(antenna, neighbors, bw)?;
    if groups.len() > avail.count() {
        return Err(Error::Capacity {
            needed: groups.len(),
            available: avail.count(),
        });
    }
    let groups = groups
        .into_iter()
        .zip(&avail.available)
        .map(|((sector, receivers), &interval)| BeamGroup {
            sector,
            interval,
            receivers,
        })
        .collect();
    Ok(BeamPlan { beamwidth: bw, groups })
}

/// Full adaptive decision: `None` when no interval is free for a non-empty
/// neighbor set.
pub fn adaptive_schedule(
    antenna: &AntennaModel,
    neighbors: &NeighborTable,
    avail: &IntervalAvailability,
) -> Option<BeamPlan> {
    let bw = min_beamwidth(antenna, neighbors, avail)?;
    Some(schedule_tx(antenna, neighbors, bw, avail).expect("minimum beamwidth fits"))
}

/// One receiver per interval at the base beamwidth, clockwise from the
/// heading, until the free intervals run out.
pub fn baseline_schedule(antenna: &AntennaModel, neighbors: &NeighborTable, avail: &IntervalAvailability) -> BeamPlan {
    let bw = antenna.ladder.entries()[0];
    let groups = neighbors
        .neighbors
        .iter()
        .zip(&avail.available)
        .map(|(n, &interval)| BeamGroup {
            sector: antenna.sector_index(n.bearing, bw).expect("base width is in the ladder"),
            interval,
            receivers: alloc::vec![n.id],
        })
        .collect();
    BeamPlan { beamwidth: bw, groups }
}

/// Fraction of the neighbors present in the plan; 1 for an empty table.
pub fn contacted_ratio(plan: &BeamPlan, neighbors: &NeighborTable) -> f64 {
    if neighbors.is_empty() {
        return 1.0;
    }
    let contacted = plan.receivers().filter(|&id| neighbors.contains(id)).count();
    contacted as f64 / neighbors.count() as f64
}
