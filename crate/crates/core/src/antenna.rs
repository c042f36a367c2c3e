//! Sector-grouping antenna model.
//!
//! The horizontal plane is split into `base_sector_count` equal sectors of
//! the base beamwidth. Wider beams group consecutive base sectors, so every
//! ladder sector boundary is also a base sector boundary.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_bearing, Bearing};

/// Transmit beamwidth in whole degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Beamwidth(pub u16);

impl Beamwidth {
    pub const BASE: Beamwidth = Beamwidth(6);
    pub const OMNI: Beamwidth = Beamwidth(360);

    pub fn degrees(self) -> f64 {
        f64::from(self.0)
    }
}

impl fmt::Display for Beamwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.0)
    }
}

/// Ordered set of selectable beamwidths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u16>", into = "Vec<u16>")]
pub struct BeamwidthLadder {
    entries: Vec<Beamwidth>,
}

impl BeamwidthLadder {
    pub const DEFAULT_DEGREES: [u16; 12] = [6, 12, 18, 24, 30, 36, 60, 72, 90, 120, 180, 360];

    pub fn new(degrees: &[u16], base: Beamwidth) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::InvalidLadder("ladder is empty"));
        }
        if base.0 == 0 || 360 % base.0 != 0 {
            return Err(Error::InvalidLadder("base beamwidth must divide 360"));
        }
        for w in degrees.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidLadder("entries must be strictly ascending"));
            }
        }
        for &d in degrees {
            if d == 0 || 360 % d != 0 {
                return Err(Error::InvalidLadder("every entry must divide 360"));
            }
            if d % base.0 != 0 {
                return Err(Error::InvalidLadder("every entry must be a multiple of the base"));
            }
        }
        Ok(Self {
            entries: degrees.iter().copied().map(Beamwidth).collect(),
        })
    }

    pub fn entries(&self) -> &[Beamwidth] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, bw: Beamwidth) -> bool {
        self.entries.binary_search(&bw).is_ok()
    }

    pub fn widest(&self) -> Beamwidth {
        *self.entries.last().expect("ladder is never empty")
    }
}

impl Default for BeamwidthLadder {
    fn default() -> Self {
        Self::new(&Self::DEFAULT_DEGREES, Beamwidth::BASE).expect("default ladder is valid")
    }
}

impl TryFrom<Vec<u16>> for BeamwidthLadder {
    type Error = Error;

    fn try_from(v: Vec<u16>) -> Result<Self> {
        Self::new(&v, Beamwidth::BASE)
    }
}

impl From<BeamwidthLadder> for Vec<u16> {
    fn from(l: BeamwidthLadder) -> Self {
        l.entries.into_iter().map(|b| b.0).collect()
    }
}

/// Flat-top sectorized antenna.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaModel {
    pub base_sector_count: u16,
    /// Lower edge of sector 0, relative to the vehicle heading.
    pub boresight_reference: Bearing,
    /// Calibration constant added to the directivity of every beam.
    pub gain_offset_db: f64,
    pub ladder: BeamwidthLadder,
}

impl Default for AntennaModel {
    fn default() -> Self {
        Self {
            base_sector_count: 60,
            boresight_reference: Bearing::ZERO,
            gain_offset_db: 14.0,
            ladder: BeamwidthLadder::default(),
        }
    }
}

impl AntennaModel {
    pub fn validate(&self) -> Result<()> {
        let base = self.ladder.entries()[0];
        if u32::from(self.base_sector_count) * u32::from(base.0) != 360 {
            return Err(Error::InvalidLadder(
                "base sector count times base beamwidth must equal 360",
            ));
        }
        if !self.gain_offset_db.is_finite() {
            return Err(Error::InvalidArgument("gain offset must be finite"));
        }
        Ok(())
    }

    fn check(&self, bw: Beamwidth) -> Result<()> {
        if self.ladder.contains(bw) {
            Ok(())
        } else {
            Err(Error::InvalidBeamwidth(bw))
        }
    }

    pub fn sector_count(&self, bw: Beamwidth) -> Result<u16> {
        self.check(bw)?;
        Ok(360 / bw.0)
    }

    /// Sector holding `bearing` at beamwidth `bw`; lower edges are inclusive.
    pub fn sector_index(&self, bearing: Bearing, bw: Beamwidth) -> Result<u16> {
        let count = self.sector_count(bw)?;
        Ok(sector_of(bearing, self.boresight_reference, bw, count))
    }

    /// Boresight gain of a `bw`-wide beam: the full sphere's power squeezed
    /// into `360 / bw` of the azimuth, plus the calibration offset.
    pub fn gain_dbi(&self, bw: Beamwidth) -> Result<f64> {
        self.check(bw)?;
        Ok(directivity_db(bw.degrees()) + self.gain_offset_db)
    }

    /// Whether beam `sector` at width `bw` illuminates `target`.
    pub fn beam_covers(&self, sector: u16, bw: Beamwidth, target: Bearing) -> Result<bool> {
        let count = self.sector_count(bw)?;
        if sector >= count {
            return Err(Error::InvalidArgument("beam sector out of range"));
        }
        Ok(sector_of(target, self.boresight_reference, bw, count) == sector)
    }

    /// Gain toward `target` of beam `sector`, or `None` outside the beam.
    pub fn gain_toward(&self, sector: u16, bw: Beamwidth, target: Bearing) -> Result<Option<f64>> {
        if self.beam_covers(sector, bw, target)? {
            self.gain_dbi(bw).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Gain of a `width_deg` beam centered on `pointing`, toward `target`.
    /// Used for receive beams, which are steered rather than sector-aligned.
    pub fn steered_gain(&self, width_deg: f64, pointing: Bearing, target: Bearing) -> Option<f64> {
        if pointing.separation(target) <= width_deg / 2.0 + STEER_EPS {
            Some(directivity_db(width_deg) + self.gain_offset_db)
        } else {
            None
        }
    }
}

const STEER_EPS: f64 = 1e-9;

fn directivity_db(width_deg: f64) -> f64 {
    10.0 * libm::log10(360.0 / width_deg)
}

fn sector_of(bearing: Bearing, reference: Bearing, bw: Beamwidth, count: u16) -> u16 {
    let rel = normalize_bearing(bearing.degrees() - reference.degrees())
        .expect("bearings are finite")
        .degrees();
    let idx = libm::floor(rel / bw.degrees()) as u16;
    idx.min(count - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(d: f64) -> Bearing {
        Bearing::new(d).unwrap()
    }

    #[test]
    fn ladder_validation() {
        assert_eq!(BeamwidthLadder::default().len(), 12);
        assert!(BeamwidthLadder::new(&[12, 6], Beamwidth::BASE).is_err());
        assert!(BeamwidthLadder::new(&[6, 6], Beamwidth::BASE).is_err());
        assert!(BeamwidthLadder::new(&[6, 48], Beamwidth::BASE).is_err());
        assert!(BeamwidthLadder::new(&[6, 45], Beamwidth::BASE).is_err());
        assert!(BeamwidthLadder::new(&[], Beamwidth::BASE).is_err());
        assert!(BeamwidthLadder::new(&[6, 12, 18, 36], Beamwidth::BASE).is_ok());
    }

    #[test]
    fn sector_counts() {
        let a = AntennaModel::default();
        a.validate().unwrap();
        assert_eq!(a.sector_count(Beamwidth(6)).unwrap(), 60);
        assert_eq!(a.sector_count(Beamwidth(12)).unwrap(), 30);
        assert_eq!(a.sector_count(Beamwidth(360)).unwrap(), 1);
        assert_eq!(a.sector_count(Beamwidth(7)), Err(Error::InvalidBeamwidth(Beamwidth(7))));
    }

    #[test]
    fn sector_indices() {
        let a = AntennaModel::default();
        assert_eq!(a.sector_index(b(10.0), Beamwidth(6)).unwrap(), 1);
        assert_eq!(a.sector_index(b(0.0), Beamwidth(6)).unwrap(), 0);
        assert_eq!(a.sector_index(b(359.9), Beamwidth(360)).unwrap(), 0);
        assert_eq!(a.sector_index(b(12.0), Beamwidth(12)).unwrap(), 1);
        assert!(a.sector_index(b(1.0), Beamwidth(8)).is_err());
    }

    #[test]
    fn gains() {
        let a = AntennaModel {
            gain_offset_db: 0.0,
            ..Default::default()
        };
        // 10·log10(60) and 10·log10(30)
        assert!((a.gain_dbi(Beamwidth(6)).unwrap() - 17.781_512_503_836_44).abs() < 1e-9);
        assert!((a.gain_dbi(Beamwidth(12)).unwrap() - 14.771_212_547_196_624).abs() < 1e-9);
        assert_eq!(a.gain_dbi(Beamwidth(360)).unwrap(), 0.0);
        assert!(a.gain_dbi(Beamwidth(5)).is_err());
    }

    #[test]
    fn coverage() {
        let a = AntennaModel::default();
        assert!(a.beam_covers(1, Beamwidth(6), b(10.0)).unwrap());
        assert!(!a.beam_covers(0, Beamwidth(6), b(10.0)).unwrap());
        assert!(a.beam_covers(0, Beamwidth(360), b(271.0)).unwrap());
        assert!(a.beam_covers(60, Beamwidth(6), b(10.0)).is_err());
        assert_eq!(a.gain_toward(0, Beamwidth(6), b(10.0)).unwrap(), None);
    }

    #[test]
    fn steered_receive_beam() {
        let a = AntennaModel::default();
        assert!(a.steered_gain(6.0, b(0.0), b(2.9)).is_some());
        assert!(a.steered_gain(6.0, b(0.0), b(357.5)).is_some());
        assert!(a.steered_gain(6.0, b(0.0), b(3.5)).is_none());
    }

    #[test]
    fn rotated_reference() {
        let a = AntennaModel {
            boresight_reference: b(3.0),
            ..Default::default()
        };
        assert_eq!(a.sector_index(b(2.0), Beamwidth(6)).unwrap(), 59);
        assert_eq!(a.sector_index(b(3.0), Beamwidth(6)).unwrap(), 0);
    }
}
