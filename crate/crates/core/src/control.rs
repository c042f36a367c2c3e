//! Sub-6GHz control plane: periodic CAMs carrying schedule announcements,
//! ideal broadcast delivery, and per-vehicle reservation tables.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::antenna::Beamwidth;
use crate::error::{Error, Result};
use crate::geometry::Position;
use crate::scenario::{wraparound_distance, Vehicle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnouncementEntry {
    pub interval: usize,
    pub receivers: Vec<u32>,
    pub beam_sector: u16,
    pub beamwidth: Beamwidth,
}

/// Reservation of mmWave intervals for an upcoming period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Announcement {
    pub tx_id: u32,
    pub period_index: u64,
    pub entries: Vec<AnnouncementEntry>,
    /// Start of the reserved period.
    pub start_time_ms: f64,
    /// Length of each entry's burst window.
    pub duration_ms: f64,
}

impl Announcement {
    /// Entry start times are `start_time_ms + interval * duration_ms`.
    pub fn entry_start_ms(&self, entry: &AnnouncementEntry) -> f64 {
        self.start_time_ms + entry.interval as f64 * self.duration_ms
    }

    pub fn receiver_count(&self) -> usize {
        self.entries.iter().map(|e| e.receivers.len()).sum()
    }

    pub fn validate(&self, interval_count: usize) -> Result<()> {
        let mut seen_intervals = Vec::with_capacity(self.entries.len());
        let mut seen_rx: Vec<u32> = Vec::new();
        for e in &self.entries {
            if e.interval >= interval_count {
                return Err(Error::Protocol(format!(
                    "announcement from {} names interval {} of {}",
                    self.tx_id, e.interval, interval_count
                )));
            }
            if seen_intervals.contains(&e.interval) {
                return Err(Error::Protocol(format!(
                    "announcement from {} repeats interval {}",
                    self.tx_id, e.interval
                )));
            }
            seen_intervals.push(e.interval);
            for &r in &e.receivers {
                if r == self.tx_id || seen_rx.contains(&r) {
                    return Err(Error::Protocol(format!(
                        "announcement from {} has overlapping receiver {}",
                        self.tx_id, r
                    )));
                }
                seen_rx.push(r);
            }
        }
        Ok(())
    }
}

/// Cooperative awareness message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cam {
    pub sender: u32,
    pub timestamp_ms: f64,
    pub position: Position,
    pub announcement: Option<Announcement>,
}

/// One emission per vehicle per period at its CAM offset, sorted by time
/// then id.
pub fn cam_schedule(vehicles: &[Vehicle], periods: u64, period_ms: f64) -> Vec<(f64, u32)> {
    let mut out: Vec<(f64, u32)> = (0..periods)
        .flat_map(|p| {
            vehicles
                .iter()
                .map(move |v| (p as f64 * period_ms + v.cam_offset_ms, v.id))
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    out
}

/// Ideal broadcast: every other vehicle within `control_range_m` hears the CAM.
pub fn deliver_broadcast(cam: &Cam, vehicles: &[Vehicle], control_range_m: f64, road_length: f64) -> Vec<u32> {
    vehicles
        .iter()
        .filter(|v| v.id != cam.sender)
        .filter(|v| wraparound_distance(cam.position, v.position(), road_length) <= control_range_m)
        .map(|v| v.id)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Role {
    Free,
    Tx {
        receivers: Vec<u32>,
        beam_sector: u16,
        beamwidth: Beamwidth,
    },
    Rx {
        peer: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlEventKind {
    Cam,
    Reservation,
    Conflict,
    Forfeit,
}

impl ControlEventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Cam => "cam",
            Self::Reservation => "reservation",
            Self::Conflict => "conflict",
            Self::Forfeit => "forfeit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlEvent {
    pub time_ms: f64,
    pub kind: ControlEventKind,
    pub sender: u32,
    pub receiver: Option<u32>,
    pub interval: Option<usize>,
}

/// Per-interval commitments of one vehicle for one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservationTable {
    pub owner: u32,
    slots: Vec<Role>,
    /// Announcer responsible for each non-free slot.
    sources: Vec<Option<u32>>,
}

impl ReservationTable {
    pub fn new(owner: u32, interval_count: usize) -> Self {
        Self {
            owner,
            slots: alloc::vec![Role::Free; interval_count],
            sources: alloc::vec![None; interval_count],
        }
    }

    pub fn interval_count(&self) -> usize {
        self.slots.len()
    }

    pub fn role(&self, interval: usize) -> &Role {
        &self.slots[interval]
    }

    pub fn roles(&self) -> &[Role] {
        &self.slots
    }

    pub fn source(&self, interval: usize) -> Option<u32> {
        self.sources[interval]
    }

    /// Transmitter this vehicle listens to in `interval`, if any.
    pub fn listening_to(&self, interval: usize) -> Option<u32> {
        match self.slots[interval] {
            Role::Rx { peer } => Some(peer),
            _ => None,
        }
    }

    pub fn is_transmitting(&self, interval: usize) -> bool {
        matches!(self.slots[interval], Role::Tx { .. })
    }

    /// Fold one heard (or self-issued) announcement into the table.
    ///
    /// A free interval becomes a reception from the announcer. An interval
    /// already held for reception keeps the first-heard peer and logs a
    /// conflict; one held for transmission stays so and logs a forfeit.
    pub fn apply_announcement(&mut self, ann: &Announcement, rx_time_ms: f64) -> Result<Vec<ControlEvent>> {
        ann.validate(self.slots.len())?;
        let mut events = Vec::new();
        if ann.tx_id == self.owner {
            for e in &ann.entries {
                if self.slots[e.interval] != Role::Free {
                    return Err(Error::Protocol(format!(
                        "vehicle {} announced a transmission over reserved interval {}",
                        self.owner, e.interval
                    )));
                }
                self.slots[e.interval] = Role::Tx {
                    receivers: e.receivers.clone(),
                    beam_sector: e.beam_sector,
                    beamwidth: e.beamwidth,
                };
                self.sources[e.interval] = Some(self.owner);
            }
            return Ok(events);
        }
        for e in ann.entries.iter().filter(|e| e.receivers.contains(&self.owner)) {
            let kind = match self.slots[e.interval] {
                Role::Free => {
                    self.slots[e.interval] = Role::Rx { peer: ann.tx_id };
                    self.sources[e.interval] = Some(ann.tx_id);
                    ControlEventKind::Reservation
                }
                Role::Rx { .. } => ControlEventKind::Conflict,
                Role::Tx { .. } => ControlEventKind::Forfeit,
            };
            events.push(ControlEvent {
                time_ms: rx_time_ms,
                kind,
                sender: ann.tx_id,
                receiver: Some(self.owner),
                interval: Some(e.interval),
            });
        }
        Ok(events)
    }
}
