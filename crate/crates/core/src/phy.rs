//! Directional mmWave link budget and threshold-SINR delivery model.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::antenna::{AntennaModel, Beamwidth};
use crate::control::ReservationTable;
use crate::error::{Error, Result};
use crate::geometry::Bearing;
use crate::scenario::Scene;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhyConfig {
    pub carrier_hz: f64,
    pub tx_power_dbm: f64,
    pub data_rate_mbps: f64,
    pub packet_bytes: u32,
    pub packets_per_interval: u32,
    pub noise_bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub sinr_threshold_db: f64,
    pub rx_beamwidth_deg: f64,
}

impl Default for PhyConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 60.48e9,
            tx_power_dbm: 10.0,
            data_rate_mbps: 693.0,
            packet_bytes: 1600,
            packets_per_interval: 250,
            noise_bandwidth_hz: 2.16e9,
            noise_figure_db: 10.0,
            sinr_threshold_db: 7.0,
            rx_beamwidth_deg: 6.0,
        }
    }
}

impl PhyConfig {
    /// Time needed to send one interval's packets back to back.
    pub fn burst_airtime_ms(&self) -> f64 {
        f64::from(self.packets_per_interval) * f64::from(self.packet_bytes) * 8.0 / (self.data_rate_mbps * 1e3)
    }

    pub fn packet_bits(&self) -> f64 {
        f64::from(self.packet_bytes) * 8.0
    }

    pub fn validate(&self, interval_ms: f64) -> Result<()> {
        let positive = [
            self.carrier_hz,
            self.data_rate_mbps,
            self.noise_bandwidth_hz,
            self.rx_beamwidth_deg,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("PHY rates, bandwidths and beamwidth must be positive".into()));
        }
        if self.packets_per_interval == 0 || self.packet_bytes == 0 {
            return Err(Error::Config("packet size and count must be positive".into()));
        }
        let airtime = self.burst_airtime_ms();
        if airtime > interval_ms {
            return Err(Error::Config(alloc::format!(
                "burst airtime {airtime:.3} ms exceeds the {interval_ms} ms interval"
            )));
        }
        Ok(())
    }
}

/// Free-space path loss in dB.
pub fn path_loss_db(distance_m: f64, carrier_hz: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::InvalidArgument("distance must be positive"));
    }
    Ok(20.0 * libm::log10(distance_m) + 20.0 * libm::log10(carrier_hz) - 147.55)
}

/// Thermal noise over the receiver bandwidth plus its noise figure.
pub fn noise_floor_dbm(config: &PhyConfig) -> f64 {
    -174.0 + 10.0 * libm::log10(config.noise_bandwidth_hz) + config.noise_figure_db
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * libm::log10(lin)
}

/// One scheduled burst: a transmitter's beam group in one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveTransmission {
    pub tx: u32,
    pub interval: usize,
    pub beam_sector: u16,
    pub beamwidth: Beamwidth,
    pub receivers: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkOutcome {
    Ok,
    SinrFail,
    ConflictLoss,
    ForfeitLoss,
}

impl LinkOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::SinrFail => "sinr_fail",
            Self::ConflictLoss => "conflict_loss",
            Self::ForfeitLoss => "forfeit_loss",
        }
    }
}

/// Delivery outcome of one (interval, transmitter, receiver) burst.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSample {
    pub interval: usize,
    pub tx: u32,
    pub rx: u32,
    pub distance_m: f64,
    pub beamwidth: Beamwidth,
    /// `None` when the receiver was not listening or the link had no coupling.
    pub sinr_db: Option<f64>,
    pub delivered_packets: u32,
    pub outcome: LinkOutcome,
}

/// Received power when a transmitter's sector beam and the receiver's
/// steered beam both cover each other over a LOS path; `None` otherwise.
pub fn rx_power_dbm(
    antenna: &AntennaModel,
    phy: &PhyConfig,
    scene: &Scene<'_>,
    tx: u32,
    rx: u32,
    tx_beam: (u16, Beamwidth),
    rx_pointing: Bearing,
) -> Result<Option<f64>> {
    let toward_rx = scene.bearing(tx, rx)?;
    let Some(tx_gain) = antenna.gain_toward(tx_beam.0, tx_beam.1, toward_rx)? else {
        return Ok(None);
    };
    let toward_tx = scene.bearing(rx, tx)?;
    let Some(rx_gain) = antenna.steered_gain(phy.rx_beamwidth_deg, rx_pointing, toward_tx) else {
        return Ok(None);
    };
    if !scene.los(tx, rx) {
        return Ok(None);
    }
    let loss = path_loss_db(scene.distance(tx, rx), phy.carrier_hz)?;
    Ok(Some(phy.tx_power_dbm + tx_gain + rx_gain - loss))
}

/// SINR at `rx` for `intended`, summing every coupled concurrent burst as
/// interference. All bursts of an interval overlap completely.
pub fn sinr_db(
    antenna: &AntennaModel,
    phy: &PhyConfig,
    scene: &Scene<'_>,
    rx: u32,
    intended: &ActiveTransmission,
    concurrent: &[ActiveTransmission],
) -> Result<f64> {
    let pointing = scene.bearing(rx, intended.tx)?;
    let signal = rx_power_dbm(
        antenna,
        phy,
        scene,
        intended.tx,
        rx,
        (intended.beam_sector, intended.beamwidth),
        pointing,
    )?
    .ok_or(Error::LinkBlocked)?;
    let mut denom = db_to_linear(noise_floor_dbm(phy));
    for other in concurrent {
        if other.tx == intended.tx || other.tx == rx {
            continue;
        }
        let beam = (other.beam_sector, other.beamwidth);
        if let Some(p) = rx_power_dbm(antenna, phy, scene, other.tx, rx, beam, pointing)? {
            denom += db_to_linear(p);
        }
    }
    Ok(signal - linear_to_db(denom))
}

/// Outcomes for every intended receiver of every burst in one interval.
///
/// `tables` is indexed by vehicle id and holds the final reservations of the
/// period: a receiver listens only to its first-heard reserving transmitter
/// and does not listen at all while it transmits.
pub fn interval_outcomes(
    antenna: &AntennaModel,
    phy: &PhyConfig,
    scene: &Scene<'_>,
    transmissions: &[ActiveTransmission],
    tables: &[ReservationTable],
) -> Result<Vec<LinkSample>> {
    let mut out = Vec::new();
    for t in transmissions {
        for &rx in &t.receivers {
            let table = &tables[rx as usize];
            let mut sample = LinkSample {
                interval: t.interval,
                tx: t.tx,
                rx,
                distance_m: scene.distance(t.tx, rx),
                beamwidth: t.beamwidth,
                sinr_db: None,
                delivered_packets: 0,
                outcome: LinkOutcome::SinrFail,
            };
            if table.is_transmitting(t.interval) {
                sample.outcome = LinkOutcome::ForfeitLoss;
            } else if table.listening_to(t.interval) != Some(t.tx) {
                sample.outcome = LinkOutcome::ConflictLoss;
            } else {
                match sinr_db(antenna, phy, scene, rx, t, transmissions) {
                    Ok(s) => {
                        sample.sinr_db = Some(s);
                        if s >= phy.sinr_threshold_db {
                            sample.delivered_packets = phy.packets_per_interval;
                            sample.outcome = LinkOutcome::Ok;
                        }
                    }
                    Err(Error::LinkBlocked) => {}
                    Err(e) => return Err(e),
                }
            }
            out.push(sample);
        }
    }
    Ok(out)
}

/// Smallest whole-dB gain offset for which an interference-free link at
/// `range_m` closes with `margin_db` to spare at the widest transmit beam.
pub fn calibrate_gain_offset(antenna: &AntennaModel, phy: &PhyConfig, range_m: f64, margin_db: f64) -> Result<f64> {
    let probe = AntennaModel {
        gain_offset_db: 0.0,
        ..antenna.clone()
    };
    let tx = probe.gain_dbi(antenna.ladder.widest())?;
    let rx = 10.0 * libm::log10(360.0 / phy.rx_beamwidth_deg);
    let snr0 = phy.tx_power_dbm + tx + rx - path_loss_db(range_m, phy.carrier_hz)? - noise_floor_dbm(phy);
    // the offset is applied at both ends of the link
    let needed = (phy.sinr_threshold_db + margin_db - snr0) / 2.0;
    Ok(libm::ceil(needed - 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{Announcement, AnnouncementEntry};
    use crate::geometry::BodySize;
    use crate::scenario::Vehicle;
    use alloc::vec;

    fn car(id: u32, x: f64, y: f64, heading: f64) -> Vehicle {
        Vehicle {
            id,
            lane: 0,
            longitudinal_m: x,
            lateral_m: y,
            heading: Bearing::new(heading).unwrap(),
            is_mm_tx: false,
            cam_offset_ms: 0.0,
        }
    }

    fn ann(tx: u32, interval: usize, rx: Vec<u32>, bw: u16) -> Announcement {
        Announcement {
            tx_id: tx,
            period_index: 0,
            entries: vec![AnnouncementEntry {
                interval,
                receivers: rx,
                beam_sector: 0,
                beamwidth: Beamwidth(bw),
            }],
            start_time_ms: 0.0,
            duration_ms: 20.0,
        }
    }

    #[test]
    fn path_loss_examples() {
        let f = 60.48e9;
        assert!((path_loss_db(1.0, f).unwrap() - 68.08).abs() < 0.005);
        assert!((path_loss_db(50.0, f).unwrap() - 102.06).abs() < 0.005);
        let d = path_loss_db(100.0, f).unwrap() - path_loss_db(10.0, f).unwrap();
        assert!((d - 20.0).abs() < 1e-9);
        assert!(path_loss_db(0.0, f).is_err());
        assert!(path_loss_db(-3.0, f).is_err());
    }

    #[test]
    fn noise_examples() {
        let c = PhyConfig::default();
        assert!((noise_floor_dbm(&c) - -70.655).abs() < 0.005);
        let nf0 = PhyConfig {
            noise_figure_db: 0.0,
            ..c.clone()
        };
        assert!((noise_floor_dbm(&nf0) - -80.655).abs() < 0.005);
        let wide = PhyConfig {
            noise_bandwidth_hz: c.noise_bandwidth_hz * 10.0,
            ..c.clone()
        };
        assert!((noise_floor_dbm(&wide) - noise_floor_dbm(&c) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn airtime_and_validation() {
        let c = PhyConfig::default();
        assert!((c.burst_airtime_ms() - 4.6176).abs() < 1e-3);
        c.validate(20.0).unwrap();
        assert!(c.validate(4.0).is_err());
    }

    #[test]
    fn link_budget_examples() {
        let a = AntennaModel::default();
        let phy = PhyConfig::default();
        let vs = [car(0, 0.0, 0.0, 0.0), car(1, 50.0, 0.0, 180.0)];
        let scene = Scene::new(&vs, 2000.0, BodySize::default());
        let p = rx_power_dbm(&a, &phy, &scene, 0, 1, (0, Beamwidth(6)), Bearing::ZERO)
            .unwrap()
            .unwrap();
        assert!((p - -28.50).abs() < 0.01, "{p}");
        let p = rx_power_dbm(&a, &phy, &scene, 0, 1, (0, Beamwidth(360)), Bearing::ZERO)
            .unwrap()
            .unwrap();
        assert!((p - -46.28).abs() < 0.01, "{p}");
        assert_eq!(
            rx_power_dbm(&a, &phy, &scene, 0, 1, (1, Beamwidth(6)), Bearing::ZERO).unwrap(),
            None
        );
        // receiver looking the other way
        let away = Bearing::new(90.0).unwrap();
        assert_eq!(
            rx_power_dbm(&a, &phy, &scene, 0, 1, (0, Beamwidth(6)), away).unwrap(),
            None
        );
    }

    #[test]
    fn calibration_offset() {
        let a = AntennaModel::default();
        let phy = PhyConfig::default();
        let g0 = calibrate_gain_offset(&a, &phy, 50.0, 3.0).unwrap();
        assert_eq!(g0, 7.0);
    }

    #[test]
    fn conflict_and_forfeit_outcomes() {
        let a = AntennaModel::default();
        let phy = PhyConfig::default();
        let vs = [
            car(0, 0.0, 0.0, 0.0),
            car(1, 60.0, 0.0, 180.0),
            car(2, 30.0, 3.5, 0.0),
            car(3, 30.0, 10.5, 0.0),
        ];
        let scene = Scene::new(&vs, 2000.0, BodySize::default());
        let sector = a.sector_index(scene.bearing(0, 2).unwrap(), Beamwidth(6)).unwrap();
        let ts = vec![
            ActiveTransmission {
                tx: 0,
                interval: 0,
                beam_sector: sector,
                beamwidth: Beamwidth(6),
                receivers: vec![2],
            },
            ActiveTransmission {
                tx: 1,
                interval: 0,
                beam_sector: 0,
                beamwidth: Beamwidth(360),
                receivers: vec![2, 3],
            },
        ];
        let mut tables: Vec<ReservationTable> = (0..4).map(|i| ReservationTable::new(i, 5)).collect();
        tables[3].apply_announcement(&ann(3, 0, vec![1], 6), 0.0).unwrap();
        tables[2].apply_announcement(&ann(0, 0, vec![2], 6), 1.0).unwrap();
        tables[2].apply_announcement(&ann(1, 0, vec![2, 3], 360), 2.0).unwrap();
        tables[3].apply_announcement(&ann(1, 0, vec![2, 3], 360), 2.0).unwrap();

        let out = interval_outcomes(&a, &phy, &scene, &ts, &tables).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].outcome, LinkOutcome::Ok);
        assert_eq!(out[0].delivered_packets, 250);
        assert_eq!(out[1].outcome, LinkOutcome::ConflictLoss);
        assert_eq!(out[1].delivered_packets, 0);
        assert_eq!(out[2].outcome, LinkOutcome::ForfeitLoss);
    }

    #[test]
    fn single_link_delivers() {
        let a = AntennaModel::default();
        let phy = PhyConfig::default();
        let vs = [car(0, 0.0, 0.0, 0.0), car(1, 30.0, 0.0, 0.0)];
        let scene = Scene::new(&vs, 2000.0, BodySize::default());
        let t = ActiveTransmission {
            tx: 0,
            interval: 2,
            beam_sector: 0,
            beamwidth: Beamwidth(6),
            receivers: vec![1],
        };
        let mut tables = vec![ReservationTable::new(0, 5), ReservationTable::new(1, 5)];
        let a2 = ann(0, 2, vec![1], 6);
        tables[0].apply_announcement(&a2, 0.0).unwrap();
        tables[1].apply_announcement(&a2, 0.0).unwrap();
        let out = interval_outcomes(&a, &phy, &scene, std::slice::from_ref(&t), &tables).unwrap();
        assert_eq!(out[0].outcome, LinkOutcome::Ok);
        assert_eq!(out[0].delivered_packets, 250);
        let snr = sinr_db(&a, &phy, &scene, 1, &t, &[]).unwrap();
        assert_eq!(out[0].sinr_db, Some(snr));
    }
}
