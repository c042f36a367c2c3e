//! Executes a manifest: every matrix cell and policy, replications in
//! parallel, merged in replication order so results do not depend on
//! thread scheduling.

use beamsched_core::control::ControlEvent;
use beamsched_core::engine::{replication_seed, run_replication, Observer, PeriodRecord, Policy};
use beamsched_core::metrics::{gain_percent, Accumulator, MetricsReport, ScenarioLabel};
use beamsched_core::phy::LinkSample;
use beamsched_core::scenario::Vehicle;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Cell, RunManifest};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologyRow {
    pub replication: u32,
    pub period: u64,
    pub id: u32,
    pub lane: u32,
    pub longitudinal_m: f64,
    pub lateral_m: f64,
    pub heading_deg: f64,
    pub is_mm_tx: bool,
    pub cam_offset_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRow {
    pub replication: u32,
    pub period: u64,
    pub time_ms: f64,
    pub event: &'static str,
    pub sender: u32,
    pub receiver: Option<u32>,
    pub interval: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkRow {
    pub replication: u32,
    pub period: u64,
    pub interval: usize,
    pub tx: u32,
    pub rx: u32,
    pub distance_m: f64,
    pub tx_beamwidth: u16,
    pub sinr_db: Option<f64>,
    pub delivered: u32,
    pub outcome: &'static str,
}

/// Raw per-event logs of one run, filled by the engine's observer hooks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawDump {
    pub topology: Vec<TopologyRow>,
    pub events: Vec<EventRow>,
    pub links: Vec<LinkRow>,
    pub records: Vec<PeriodRecord>,
}

struct Collector<'a> {
    replication: u32,
    dump: &'a mut RawDump,
}

impl Observer for Collector<'_> {
    fn topology(&mut self, period: u64, vehicles: &[Vehicle]) {
        self.dump.topology.extend(vehicles.iter().map(|v| TopologyRow {
            replication: self.replication,
            period,
            id: v.id,
            lane: v.lane,
            longitudinal_m: v.longitudinal_m,
            lateral_m: v.lateral_m,
            heading_deg: v.heading.degrees(),
            is_mm_tx: v.is_mm_tx,
            cam_offset_ms: v.cam_offset_ms,
        }));
    }

    fn control_event(&mut self, period: u64, e: &ControlEvent) {
        self.dump.events.push(EventRow {
            replication: self.replication,
            period,
            time_ms: e.time_ms,
            event: e.kind.as_str(),
            sender: e.sender,
            receiver: e.receiver,
            interval: e.interval,
        });
    }

    fn link(&mut self, period: u64, s: &LinkSample) {
        self.dump.links.push(LinkRow {
            replication: self.replication,
            period,
            interval: s.interval,
            tx: s.tx,
            rx: s.rx,
            distance_m: s.distance_m,
            tx_beamwidth: s.beamwidth.0,
            sinr_db: s.sinr_db,
            delivered: s.delivered_packets,
            outcome: s.outcome.as_str(),
        });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun {
    pub policy: Policy,
    pub report: MetricsReport,
    pub raw: Option<RawDump>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub runs: Vec<PolicyRun>,
}

impl CellResult {
    pub fn report(&self, policy: Policy) -> Option<&MetricsReport> {
        self.runs.iter().find(|r| r.policy == policy).map(|r| &r.report)
    }

    /// Throughput gain of adaptive over baseline when both ran.
    pub fn gain_percent(&self) -> Option<beamsched_core::Result<f64>> {
        let a = self.report(Policy::Adaptive)?;
        let b = self.report(Policy::Baseline)?;
        Some(gain_percent(a.aggregated_throughput_mbps, b.aggregated_throughput_mbps))
    }
}

struct Replica {
    acc: Accumulator,
    raw: Option<RawDump>,
}

fn run_policy(manifest: &RunManifest, cell: &Cell, policy: Policy) -> beamsched_core::Result<PolicyRun> {
    let cfg = manifest.sim_config(cell, policy);
    let keep_raw = manifest.run.raw;
    let replicas = (0..manifest.run.replications)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(cfg.master_seed, r);
            let mut raw = RawDump::default();
            let records = if keep_raw {
                run_replication(&cfg, r, seed, &mut Collector { replication: r, dump: &mut raw })?
            } else {
                run_replication(&cfg, r, seed, &mut ())?
            };
            let mut acc = Accumulator::new(cfg.phy.packets_per_interval);
            acc.extend(&records);
            Ok(Replica {
                acc,
                raw: keep_raw.then_some(RawDump { records, ..raw }),
            })
        })
        .collect::<beamsched_core::Result<Vec<_>>>()?;

    let mut acc = Accumulator::new(cfg.phy.packets_per_interval);
    let mut raw = keep_raw.then(RawDump::default);
    for rep in replicas {
        acc.merge(rep.acc);
        if let (Some(all), Some(part)) = (raw.as_mut(), rep.raw) {
            all.topology.extend(part.topology);
            all.events.extend(part.events);
            all.links.extend(part.links);
            all.records.extend(part.records);
        }
    }
    let duration_s = cfg.periods as f64 * cfg.period.period_ms / 1000.0 * f64::from(manifest.run.replications);
    let label = ScenarioLabel {
        density_per_km: cell.density_per_km,
        tx_ratio: cell.tx_ratio,
        policy,
    };
    Ok(PolicyRun {
        policy,
        report: MetricsReport::from_accumulator(label, &acc, &cfg.antenna.ladder, cfg.phy.packet_bits(), duration_s),
        raw,
    })
}

/// Runs every cell and policy of the manifest on the current rayon pool.
pub fn execute(manifest: &RunManifest) -> Result<Vec<CellResult>, String> {
    let cells = manifest.cells();
    let jobs: Vec<(usize, Policy)> = cells
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.policies.iter().map(move |&p| (i, p)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(i, p)| run_policy(manifest, &cells[i], p).map_err(|e| format!("scenario {} {p}: {e}", cells[i])))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out: Vec<CellResult> = cells
        .into_iter()
        .map(|cell| CellResult { cell, runs: Vec::new() })
        .collect();
    for (&(i, _), run) in jobs.iter().zip(runs) {
        out[i].runs.push(run);
    }
    Ok(out)
}
