//! Run manifest: a TOML file with one section per concern.
//!
//! Every key is optional; missing keys take the built-in defaults and unknown
//! keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use beamsched_core::antenna::AntennaModel;
use beamsched_core::engine::{Policy, SimConfig};
use beamsched_core::geometry::BodySize;
use beamsched_core::phy::PhyConfig;
use beamsched_core::scenario::{Mobility, ScenarioConfig};
use beamsched_core::scheduler::SchedulingPeriod;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config file {path} does not exist")]
    Missing { path: PathBuf },
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown key in {path}: {message}")]
    UnknownKey { path: PathBuf, message: String },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Constraint(String),
}

/// Which policies each matrix cell runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyChoice {
    Adaptive,
    Baseline,
    /// Paired adaptive and baseline runs on shared seeds.
    #[default]
    Both,
}

impl PolicyChoice {
    pub fn policies(self) -> &'static [Policy] {
        match self {
            PolicyChoice::Adaptive => &[Policy::Adaptive],
            PolicyChoice::Baseline => &[Policy::Baseline],
            PolicyChoice::Both => &[Policy::Adaptive, Policy::Baseline],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub periods: u64,
    pub replications: u32,
    pub seed: u64,
    pub out: PathBuf,
    /// Also write topology, control event, link and record dumps.
    pub raw: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            periods: 100,
            replications: 10,
            seed: 1,
            out: PathBuf::from("out"),
            raw: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixSection {
    pub densities: Vec<f64>,
    pub tx_ratios: Vec<f64>,
    pub policy: PolicyChoice,
}

impl Default for MatrixSection {
    fn default() -> Self {
        Self {
            densities: vec![75.0],
            tx_ratios: vec![0.10],
            policy: PolicyChoice::Both,
        }
    }
}

/// Road and vehicle parameters shared by every matrix cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoadSection {
    pub lanes: u32,
    pub lane_width_m: f64,
    pub road_length_m: f64,
    pub neighbor_range_m: f64,
    pub min_gap_m: f64,
    pub body: BodySize,
    pub los_clearance_m: f64,
    pub mobility: Option<Mobility>,
}

impl Default for RoadSection {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        Self {
            lanes: s.lanes,
            lane_width_m: s.lane_width_m,
            road_length_m: s.road_length_m,
            neighbor_range_m: s.neighbor_range_m,
            min_gap_m: s.min_gap_m,
            body: s.body,
            los_clearance_m: s.los_clearance_m,
            mobility: s.mobility,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    pub range_m: f64,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self {
            range_m: SimConfig::default().control_range_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    pub run: RunSection,
    pub matrix: MatrixSection,
    pub road: RoadSection,
    pub period: SchedulingPeriod,
    pub phy: PhyConfig,
    pub antenna: AntennaModel,
    pub control: ControlSection,
}

/// One (density, ratio) pair of the matrix with the policies it runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub density_per_km: f64,
    pub tx_ratio: f64,
    pub policies: Vec<Policy>,
}

impl Cell {
    /// Directory name such as `75_10` (density, then ratio in percent).
    pub fn dir_name(&self) -> String {
        format!("{}_{}", tidy(self.density_per_km), tidy(self.tx_ratio * 100.0))
    }
}

/// Print a value without float noise: `10.000000000000002` becomes `10`.
fn tidy(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    format!("{r}")
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", tidy(self.density_per_km), tidy(self.tx_ratio * 100.0))
    }
}

impl RunManifest {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let manifest: RunManifest = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            if message.contains("unknown field") {
                ConfigError::UnknownKey {
                    path: path.to_path_buf(),
                    message,
                }
            } else {
                ConfigError::Parse {
                    path: path.to_path_buf(),
                    message: e.to_string(),
                }
            }
        })?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest fields are TOML-representable")
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &d in &self.matrix.densities {
            for &r in &self.matrix.tx_ratios {
                out.push(Cell {
                    density_per_km: d,
                    tx_ratio: r,
                    policies: self.matrix.policy.policies().to_vec(),
                });
            }
        }
        out
    }

    /// Simulation config for one cell and policy.
    pub fn sim_config(&self, cell: &Cell, policy: Policy) -> SimConfig {
        let road = &self.road;
        SimConfig {
            scenario: ScenarioConfig {
                density_per_km: cell.density_per_km,
                lanes: road.lanes,
                lane_width_m: road.lane_width_m,
                road_length_m: road.road_length_m,
                tx_ratio: cell.tx_ratio,
                neighbor_range_m: road.neighbor_range_m,
                min_gap_m: road.min_gap_m,
                body: road.body,
                los_clearance_m: road.los_clearance_m,
                seed: self.run.seed,
                mobility: road.mobility.clone(),
            },
            period: self.period,
            phy: self.phy.clone(),
            antenna: self.antenna.clone(),
            policy,
            periods: self.run.periods,
            control_range_m: self.control.range_m,
            master_seed: self.run.seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = |m: String| Err(ConfigError::Constraint(m));
        if self.run.periods == 0 {
            return c("run.periods must be at least 1".into());
        }
        if self.run.replications == 0 {
            return c("run.replications must be at least 1".into());
        }
        if self.matrix.densities.is_empty() || self.matrix.tx_ratios.is_empty() {
            return c("matrix needs at least one density and one tx ratio".into());
        }
        let mut names: Vec<String> = self.cells().iter().map(Cell::dir_name).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return c("matrix contains duplicate (density, ratio) cells".into());
        }
        for cell in self.cells() {
            for &p in &cell.policies {
                self.sim_config(&cell, p)
                    .validate()
                    .or_else(|e| c(format!("scenario {cell} {p}: {e}")))?;
            }
        }
        Ok(())
    }
}

pub fn parse_config(path: &Path) -> Result<RunManifest, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            ConfigError::Missing {
                path: path.to_path_buf(),
            }
        } else {
            ConfigError::Read {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    RunManifest::from_toml(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunManifest, ConfigError> {
        RunManifest::from_toml(text, Path::new("test.toml"))
    }

    #[test]
    fn empty_file_gives_defaults() {
        let m = parse("").unwrap();
        assert_eq!(m, RunManifest::default());
        let cells = m.cells();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].density_per_km, 75.0);
        assert_eq!(cells[0].tx_ratio, 0.10);
        assert_eq!(cells[0].policies, vec![Policy::Adaptive, Policy::Baseline]);
        assert_eq!(m.period.interval_count, 5);
        assert_eq!(m.period.interval_ms, 20.0);
        assert_eq!(m.phy.packets_per_interval, 250);
        assert_eq!(m.phy.packet_bytes, 1600);
        assert_eq!(m.phy.data_rate_mbps, 693.0);
        assert_eq!(m.phy.tx_power_dbm, 10.0);
    }

    #[test]
    fn interval_mismatch_is_a_constraint_error() {
        let e = parse("[period]\ninterval_ms = 25\n").unwrap_err();
        assert!(matches!(e, ConfigError::Constraint(_)), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse("[phy]\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey { .. }), "{e}");
        let e = parse("[nowhere]\n").unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey { .. }), "{e}");
    }

    #[test]
    fn syntax_errors_are_parse_errors() {
        let e = parse("[run\nperiods = 3").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { .. }), "{e}");
        let e = parse("[run]\nperiods = \"many\"").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { .. }), "{e}");
    }

    #[test]
    fn missing_file_is_reported() {
        let e = parse_config(Path::new("/nonexistent/beamsched.toml")).unwrap_err();
        assert!(matches!(e, ConfigError::Missing { .. }));
    }

    #[test]
    fn policy_expansion() {
        let m = parse("[matrix]\ndensities = [75, 150]\ntx_ratios = [0.1, 0.5]\npolicy = \"baseline\"\n").unwrap();
        let cells = m.cells();
        assert_eq!(cells.len(), 4);
        assert!(cells.iter().all(|c| c.policies == vec![Policy::Baseline]));
        assert_eq!(
            cells.iter().map(Cell::dir_name).collect::<Vec<_>>(),
            ["75_10", "75_50", "150_10", "150_50"]
        );
    }

    #[test]
    fn round_trip() {
        let m = parse("[matrix]\ndensities = [75, 150]\ntx_ratios = [0.1, 0.5]\n[phy]\nsinr_threshold_db = 5\n").unwrap();
        let back = parse(&m.to_toml()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_toml(), m.to_toml());
    }

    #[test]
    fn both_policies_share_seeds() {
        let m = RunManifest::default();
        let cell = &m.cells()[0];
        let a = m.sim_config(cell, Policy::Adaptive);
        let b = m.sim_config(cell, Policy::Baseline);
        assert_eq!(a.scenario, b.scenario);
        assert_eq!(a.master_seed, b.master_seed);
    }
}
