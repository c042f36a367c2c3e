//! Highway topology drops and neighbor discovery.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, bearing_between, unwrap_near, Bearing, BodySize, Position};
use crate::rng::SimRng;

/// Optional constant-speed kinematics; one speed per lane in m/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mobility {
    pub lane_speeds_mps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Vehicles per km summed over all lanes.
    pub density_per_km: f64,
    pub lanes: u32,
    pub lane_width_m: f64,
    pub road_length_m: f64,
    pub tx_ratio: f64,
    pub neighbor_range_m: f64,
    /// Minimum bumper-to-bumper gap between consecutive vehicles in a lane.
    pub min_gap_m: f64,
    pub body: BodySize,
    /// Clear zone a LOS ray must keep from every third vehicle's body, on all sides.
    pub los_clearance_m: f64,
    pub seed: u64,
    pub mobility: Option<Mobility>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            density_per_km: 75.0,
            lanes: 4,
            lane_width_m: 3.5,
            road_length_m: 2000.0,
            tx_ratio: 0.10,
            neighbor_range_m: 50.0,
            min_gap_m: 5.0,
            body: BodySize::default(),
            los_clearance_m: 0.6,
            seed: 0,
            mobility: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.density_per_km > 0.0 && self.density_per_km.is_finite()) {
            return bad("density must be positive");
        }
        if self.lanes == 0 {
            return bad("at least one lane is required");
        }
        if !(self.lane_width_m > 0.0) {
            return bad("lane width must be positive");
        }
        if !(self.road_length_m > 0.0 && self.road_length_m.is_finite()) {
            return bad("road length must be positive");
        }
        if !(0.0..=1.0).contains(&self.tx_ratio) {
            return bad("tx ratio must lie in [0, 1]");
        }
        if !(self.neighbor_range_m > 0.0) {
            return bad("neighbor range must be positive");
        }
        if !(self.min_gap_m >= 0.0) {
            return bad("minimum gap must be non-negative");
        }
        if !(self.body.length_m > 0.0 && self.body.width_m > 0.0) {
            return bad("vehicle body must have positive extents");
        }
        if !(self.los_clearance_m >= 0.0) {
            return bad("LOS clearance must be non-negative");
        }
        if 2.0 * self.neighbor_range_m >= self.road_length_m {
            return bad("road must be longer than twice the neighbor range");
        }
        if let Some(m) = &self.mobility {
            if m.lane_speeds_mps.len() != self.lanes as usize {
                return bad("mobility needs one speed per lane");
            }
        }
        Ok(())
    }

    /// Footprint a LOS ray must avoid: the body grown by the clearance.
    pub fn blocking_footprint(&self) -> BodySize {
        self.body.inflated(self.los_clearance_m)
    }

    pub fn lane_center(&self, lane: u32) -> f64 {
        f64::from(lane) * self.lane_width_m + self.lane_width_m / 2.0
    }

    /// Lanes in the lower half travel toward `+x`, the rest toward `-x`.
    pub fn lane_heading(&self, lane: u32) -> Bearing {
        if lane < self.lanes.div_ceil(2) {
            Bearing::ZERO
        } else {
            Bearing::new(180.0).expect("finite")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: u32,
    pub lane: u32,
    pub longitudinal_m: f64,
    pub lateral_m: f64,
    pub heading: Bearing,
    pub is_mm_tx: bool,
    pub cam_offset_ms: f64,
}

impl Vehicle {
    pub fn position(&self) -> Position {
        Position::new(self.longitudinal_m, self.lateral_m)
    }
}

/// Draw topology `drop_index`. Fully determined by `(config.seed, drop_index)`.
///
/// Each lane receives a Poisson number of vehicles with mean
/// `density / lanes * length_km`, placed uniformly on the ring; a placement
/// closer than `body.length + min_gap` to an earlier one is resampled.
pub fn generate_drop(config: &ScenarioConfig, drop_index: u64) -> Result<Vec<Vehicle>> {
    config.validate()?;
    let mut rng = SimRng::new(config.seed, drop_index);
    let length = config.road_length_m;
    let per_lane_rate = config.density_per_km / f64::from(config.lanes) / 1000.0;
    let spacing = config.body.length_m + config.min_gap_m;

    let mut placed: Vec<(u32, f64)> = Vec::new();
    for lane in 0..config.lanes {
        // arrivals of a rate-λ process on [0, L) give a Poisson(λL) count
        let mut count = 0usize;
        let mut t = rng.exponential(per_lane_rate);
        while t < length {
            count += 1;
            t += rng.exponential(per_lane_rate);
        }
        if count as f64 * spacing > 0.9 * length {
            return Err(Error::Config("density too high for the minimum vehicle gap".into()));
        }
        let mut xs: Vec<f64> = Vec::with_capacity(count);
        for _ in 0..count {
            let mut attempts = 0;
            let x = loop {
                let x = rng.uniform(0.0, length);
                if xs.iter().all(|&o| ring_gap(o, x, length) >= spacing) {
                    break x;
                }
                attempts += 1;
                if attempts > 100_000 {
                    return Err(Error::Config("could not place vehicles with the required gap".into()));
                }
            };
            xs.push(x);
        }
        xs.sort_by(f64::total_cmp);
        placed.extend(xs.into_iter().map(|x| (lane, x)));
    }

    let vehicles = placed
        .into_iter()
        .enumerate()
        .map(|(i, (lane, x))| Vehicle {
            id: i as u32,
            lane,
            longitudinal_m: x,
            lateral_m: config.lane_center(lane),
            heading: config.lane_heading(lane),
            is_mm_tx: rng.bernoulli(config.tx_ratio),
            cam_offset_ms: rng.uniform(0.0, 100.0),
        })
        .collect();
    Ok(vehicles)
}

/// Move every vehicle along its heading for `dt_s` seconds.
pub fn advance(vehicles: &mut [Vehicle], mobility: &Mobility, dt_s: f64, road_length: f64) {
    for v in vehicles {
        let speed = mobility.lane_speeds_mps[v.lane as usize];
        let dir = if v.heading.degrees() == 0.0 { 1.0 } else { -1.0 };
        let x = v.longitudinal_m + dir * speed * dt_s;
        v.longitudinal_m = ring_coord(x, road_length);
    }
}

/// `x` reduced onto `[0, m)`.
fn ring_coord(x: f64, m: f64) -> f64 {
    let r = libm::fmod(x, m);
    let r = if r < 0.0 { r + m } else { r };
    if r >= m {
        0.0
    } else {
        r
    }
}

fn ring_gap(a: f64, b: f64, length: f64) -> f64 {
    let d = libm::fabs(a - b) % length;
    d.min(length - d)
}

/// Euclidean distance with the longitudinal coordinate taken on a ring of
/// circumference `road_length`.
pub fn wraparound_distance(a: Position, b: Position, road_length: f64) -> f64 {
    let bx = unwrap_near(a.x, b.x, road_length);
    libm::hypot(bx - a.x, b.y - a.y)
}

/// Bearing from `from` toward `to` on the ring road, relative to `from`'s heading.
pub fn bearing_to(from: &Vehicle, to: &Vehicle, road_length: f64) -> Result<Bearing> {
    let a = from.position();
    let b = to.position();
    let b = Position::new(unwrap_near(a.x, b.x, road_length), b.y);
    bearing_between(a, b, from.heading)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: u32,
    pub bearing: Bearing,
    pub distance_m: f64,
}

/// LOS neighbors of one vehicle, sorted clockwise from its heading.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NeighborTable {
    pub owner: u32,
    pub neighbors: Vec<Neighbor>,
}

impl NeighborTable {
    pub fn new(owner: u32, mut neighbors: Vec<Neighbor>) -> Self {
        neighbors.sort_by(|a, b| a.bearing.total_cmp(&b.bearing).then(a.id.cmp(&b.id)));
        Self { owner, neighbors }
    }

    pub fn count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.neighbors.iter().any(|n| n.id == id)
    }

    pub fn bearings(&self) -> impl Iterator<Item = Bearing> + '_ {
        self.neighbors.iter().map(|n| n.bearing)
    }
}

/// Reference neighbor search: scans every vehicle and every blocker.
pub fn neighbors_of(v: &Vehicle, all: &[Vehicle], config: &ScenarioConfig) -> NeighborTable {
    let length = config.road_length_m;
    let found = all
        .iter()
        .filter(|o| o.id != v.id)
        .filter_map(|o| {
            let d = wraparound_distance(v.position(), o.position(), length);
            (d < config.neighbor_range_m && geometry::los(v, o, all, config.blocking_footprint(), length)).then(
                || Neighbor {
                    id: o.id,
                    bearing: bearing_to(v, o, length).expect("distinct positions"),
                    distance_m: d,
                },
            )
        })
        .collect();
    NeighborTable::new(v.id, found)
}

/// Vehicles of one drop indexed by longitudinal position for range queries.
///
/// Vehicle ids must equal their index in the slice, as produced by
/// [`generate_drop`].
#[derive(Debug, Clone)]
pub struct Scene<'a> {
    vehicles: &'a [Vehicle],
    by_x: Vec<(f64, u32)>,
    road_length: f64,
    body: BodySize,
}

impl<'a> Scene<'a> {
    pub fn new(vehicles: &'a [Vehicle], road_length: f64, body: BodySize) -> Self {
        debug_assert!(vehicles.iter().enumerate().all(|(i, v)| v.id as usize == i));
        let mut by_x: Vec<(f64, u32)> = vehicles.iter().map(|v| (v.longitudinal_m, v.id)).collect();
        by_x.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Self {
            vehicles,
            by_x,
            road_length,
            body,
        }
    }

    pub fn vehicles(&self) -> &'a [Vehicle] {
        self.vehicles
    }

    pub fn vehicle(&self, id: u32) -> &'a Vehicle {
        &self.vehicles[id as usize]
    }

    pub fn road_length(&self) -> f64 {
        self.road_length
    }

    /// Ids whose longitudinal ring distance to `x` is at most `half_width`.
    pub fn within_x(&self, x: f64, half_width: f64) -> impl Iterator<Item = u32> + '_ {
        let l = self.road_length;
        let (ranges, n) = if 2.0 * half_width >= l {
            ([(0.0, l), (0.0, -1.0)], 1)
        } else {
            let lo = ring_coord(x - half_width, l);
            let hi = ring_coord(x + half_width, l);
            if lo <= hi {
                ([(lo, hi), (0.0, -1.0)], 1)
            } else {
                ([(lo, l), (0.0, hi)], 2)
            }
        };
        ranges.into_iter().take(n).flat_map(move |(lo, hi)| {
            let start = self.by_x.partition_point(|p| p.0 < lo);
            let end = self.by_x.partition_point(|p| p.0 <= hi);
            self.by_x[start..end.max(start)].iter().map(|p| p.1)
        })
    }

    pub fn distance(&self, a: u32, b: u32) -> f64 {
        wraparound_distance(self.vehicle(a).position(), self.vehicle(b).position(), self.road_length)
    }

    pub fn bearing(&self, from: u32, to: u32) -> Result<Bearing> {
        bearing_to(self.vehicle(from), self.vehicle(to), self.road_length)
    }

    pub fn los(&self, a: u32, b: u32) -> bool {
        let va = self.vehicle(a);
        let vb = self.vehicle(b);
        let bx = unwrap_near(va.longitudinal_m, vb.longitudinal_m, self.road_length);
        let mid = (va.longitudinal_m + bx) / 2.0;
        let half = libm::fabs(bx - va.longitudinal_m) / 2.0 + self.body.length_m;
        let blockers = self.within_x(mid, half).map(|id| self.vehicle(id));
        geometry::los_filtered(va, vb, blockers, self.body, self.road_length)
    }

    /// Same result as [`neighbors_of`], using the positional index.
    pub fn neighbors(&self, id: u32, range_m: f64) -> NeighborTable {
        let v = self.vehicle(id);
        let found = self
            .within_x(v.longitudinal_m, range_m)
            .filter(|&o| o != id)
            .filter_map(|o| {
                let d = self.distance(id, o);
                (d < range_m && self.los(id, o)).then(|| Neighbor {
                    id: o,
                    bearing: self.bearing(id, o).expect("distinct positions"),
                    distance_m: d,
                })
            })
            .collect();
        NeighborTable::new(id, found)
    }
}
