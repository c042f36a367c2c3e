//! Deterministic period-by-period event loop.
//!
//! Period `p` executes in `[p·P, (p+1)·P)`. Its schedule is negotiated during
//! the previous period: every vehicle emits its CAM at `(p-1)·P + offset`,
//! and a transmitter decides at its own CAM instant from the announcements
//! heard before it. Period 0's window therefore lies at negative times and
//! starts with empty tables.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::antenna::{AntennaModel, Beamwidth};
use crate::control::{deliver_broadcast, Announcement, AnnouncementEntry, Cam, ControlEvent, ControlEventKind, ReservationTable};
use crate::error::{Error, Result};
use crate::phy::{interval_outcomes, ActiveTransmission, LinkSample, PhyConfig};
use crate::rng::derive_seed;
use crate::scenario::{advance, generate_drop, ScenarioConfig, Scene, Vehicle};
use crate::scheduler::{adaptive_schedule, baseline_schedule, check_sched_tx, BeamPlan, SchedulingPeriod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Adaptive,
    Baseline,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Adaptive => "adaptive",
            Policy::Baseline => "baseline",
        }
    }
}

impl core::fmt::Display for Policy {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: ScenarioConfig,
    pub period: SchedulingPeriod,
    pub phy: PhyConfig,
    pub antenna: AntennaModel,
    pub policy: Policy,
    pub periods: u64,
    pub control_range_m: f64,
    pub master_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            period: SchedulingPeriod::default(),
            phy: PhyConfig::default(),
            antenna: AntennaModel::default(),
            policy: Policy::Adaptive,
            periods: 100,
            control_range_m: 300.0,
            master_seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.periods == 0 {
            return Err(Error::Config("at least one period is required".into()));
        }
        if !(self.control_range_m > 0.0) {
            return Err(Error::Config("control range must be positive".into()));
        }
        self.scenario.validate()?;
        self.period.validate()?;
        self.phy.validate(self.period.interval_ms)?;
        self.antenna.validate()?;
        Ok(())
    }
}

/// Per-period outcome for one transmitter with at least one neighbor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxRecord {
    pub tx: u32,
    /// Neighbor count N.
    pub neighbors: usize,
    /// Free intervals F at decision time.
    pub free_intervals: usize,
    /// Beamwidth of the plan; `None` when no plan could be made.
    pub beamwidth: Option<Beamwidth>,
    pub contacted: usize,
    pub used_intervals: usize,
    pub samples: Vec<LinkSample>,
}

impl TxRecord {
    pub fn contacted_ratio(&self) -> f64 {
        if self.neighbors == 0 {
            1.0
        } else {
            self.contacted as f64 / self.neighbors as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub replication: u32,
    pub period: u64,
    pub transmitters: Vec<TxRecord>,
}

/// Hooks for optional raw logs. All methods default to no-ops.
pub trait Observer {
    fn topology(&mut self, _period: u64, _vehicles: &[Vehicle]) {}
    fn control_event(&mut self, _period: u64, _event: &ControlEvent) {}
    fn link(&mut self, _period: u64, _sample: &LinkSample) {}
}

impl Observer for () {}

pub fn run(config: &SimConfig) -> Result<Vec<PeriodRecord>> {
    run_observed(config, &mut ())
}

pub fn run_observed(config: &SimConfig, observer: &mut impl Observer) -> Result<Vec<PeriodRecord>> {
    run_replica(config, 0, observer)
}

/// Seed used by replication `r`; replication 0 uses the master seed itself.
pub fn replication_seed(master_seed: u64, r: u32) -> u64 {
    if r == 0 {
        master_seed
    } else {
        derive_seed(master_seed ^ 0x5EED_5EED_5EED_5EED, u64::from(r))
    }
}

/// Independent replications concatenated in replication order.
pub fn run_replications(config: &SimConfig, replication_count: u32) -> Result<Vec<PeriodRecord>> {
    if replication_count == 0 {
        return Err(Error::Config("at least one replication is required".into()));
    }
    let seeds: Vec<u64> = (0..replication_count)
        .map(|r| replication_seed(config.master_seed, r))
        .collect();
    run_with_seeds(config, &seeds)
}

/// Replications with explicit seeds, numbered by position.
pub fn run_with_seeds(config: &SimConfig, seeds: &[u64]) -> Result<Vec<PeriodRecord>> {
    let mut out = Vec::new();
    for (r, &seed) in seeds.iter().enumerate() {
        out.extend(run_replication(config, r as u32, seed, &mut ())?);
    }
    Ok(out)
}

/// One replication with `seed` substituted for the master seed.
pub fn run_replication(config: &SimConfig, replication: u32, seed: u64, observer: &mut impl Observer) -> Result<Vec<PeriodRecord>> {
    let cfg = SimConfig {
        master_seed: seed,
        ..config.clone()
    };
    run_replica(&cfg, replication, observer)
}

fn run_replica(config: &SimConfig, replication: u32, observer: &mut impl Observer) -> Result<Vec<PeriodRecord>> {
    config.validate()?;
    let scenario = ScenarioConfig {
        seed: config.master_seed,
        ..config.scenario.clone()
    };
    let dt_s = config.period.period_ms / 1000.0;
    let mut moving: Option<Vec<Vehicle>> = None;
    let mut records = Vec::with_capacity(config.periods as usize);
    for p in 0..config.periods {
        let vehicles = match &scenario.mobility {
            None => generate_drop(&scenario, p)?,
            Some(m) => {
                let vs = match moving.take() {
                    None => generate_drop(&scenario, 0)?,
                    Some(mut vs) => {
                        advance(&mut vs, m, dt_s, scenario.road_length_m);
                        vs
                    }
                };
                moving = Some(vs.clone());
                vs
            }
        };
        observer.topology(p, &vehicles);
        records.push(run_period(config, &scenario, replication, p, &vehicles, observer)?);
    }
    Ok(records)
}

fn run_period(
    config: &SimConfig,
    scenario: &ScenarioConfig,
    replication: u32,
    p: u64,
    vehicles: &[Vehicle],
    observer: &mut impl Observer,
) -> Result<PeriodRecord> {
    let k = config.period.interval_count;
    let period_ms = config.period.period_ms;
    let scene = Scene::new(vehicles, scenario.road_length_m, scenario.blocking_footprint());
    let mut tables: Vec<ReservationTable> = vehicles.iter().map(|v| ReservationTable::new(v.id, k)).collect();

    let mut order: Vec<&Vehicle> = vehicles.iter().collect();
    order.sort_by(|a, b| a.cam_offset_ms.total_cmp(&b.cam_offset_ms).then(a.id.cmp(&b.id)));

    let window_start = (p as f64 - 1.0) * period_ms;
    let mut txs: Vec<TxRecord> = Vec::new();
    let mut plans: Vec<(u32, BeamPlan)> = Vec::new();
    for v in order {
        let now = window_start + v.cam_offset_ms;
        let mut cam = Cam {
            sender: v.id,
            timestamp_ms: now,
            position: v.position(),
            announcement: None,
        };
        observer.control_event(
            p,
            &ControlEvent {
                time_ms: now,
                kind: ControlEventKind::Cam,
                sender: v.id,
                receiver: None,
                interval: None,
            },
        );
        if v.is_mm_tx {
            let neighbors = scene.neighbors(v.id, scenario.neighbor_range_m);
            if !neighbors.is_empty() {
                let avail = check_sched_tx(&tables[v.id as usize], &config.period);
                let plan = match config.policy {
                    Policy::Adaptive => adaptive_schedule(&config.antenna, &neighbors, &avail),
                    Policy::Baseline => Some(baseline_schedule(&config.antenna, &neighbors, &avail)),
                };
                txs.push(TxRecord {
                    tx: v.id,
                    neighbors: neighbors.count(),
                    free_intervals: avail.count(),
                    beamwidth: plan.as_ref().map(|pl| pl.beamwidth),
                    contacted: plan.as_ref().map_or(0, BeamPlan::receiver_count),
                    used_intervals: plan.as_ref().map_or(0, |pl| pl.groups.len()),
                    samples: Vec::new(),
                });
                if let Some(plan) = plan.filter(|pl| !pl.groups.is_empty()) {
                    let ann = Announcement {
                        tx_id: v.id,
                        period_index: p,
                        entries: plan
                            .groups
                            .iter()
                            .map(|g| AnnouncementEntry {
                                interval: g.interval,
                                receivers: g.receivers.clone(),
                                beam_sector: g.sector,
                                beamwidth: plan.beamwidth,
                            })
                            .collect(),
                        start_time_ms: p as f64 * period_ms,
                        duration_ms: config.period.interval_ms,
                    };
                    tables[v.id as usize].apply_announcement(&ann, now)?;
                    cam.announcement = Some(ann);
                    plans.push((v.id, plan));
                }
            }
        }
        if let Some(ann) = &cam.announcement {
            for rx in deliver_broadcast(&cam, vehicles, config.control_range_m, scenario.road_length_m) {
                for ev in tables[rx as usize].apply_announcement(ann, now)? {
                    observer.control_event(p, &ev);
                }
            }
        }
    }

    let mut by_interval: Vec<Vec<ActiveTransmission>> = (0..k).map(|_| Vec::new()).collect();
    for (tx, plan) in &plans {
        for g in &plan.groups {
            by_interval[g.interval].push(ActiveTransmission {
                tx: *tx,
                interval: g.interval,
                beam_sector: g.sector,
                beamwidth: plan.beamwidth,
                receivers: g.receivers.clone(),
            });
        }
    }
    txs.sort_by_key(|t| t.tx);
    for active in &by_interval {
        for s in interval_outcomes(&config.antenna, &config.phy, &scene, active, &tables)? {
            observer.link(p, &s);
            let idx = txs.binary_search_by_key(&s.tx, |t| t.tx).expect("sample from a recorded transmitter");
            txs[idx].samples.push(s);
        }
    }
    Ok(PeriodRecord {
        replication,
        period: p,
        transmitters: txs,
    })
}
