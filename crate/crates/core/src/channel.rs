//! Multipath channel records and deterministic line-of-sight physics.
//!
//! Angles are in degrees throughout, pathloss in dB, delays in seconds and
//! coordinates in meters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Most multipath components a link may carry.
pub const MAX_PATHS: usize = 25;

/// `20 log10(4 pi / c)` rounded to two decimals.
pub const FSPL_OFFSET_DB: f64 = -147.55;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }
}

/// One multipath component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    #[serde(rename = "pathloss_db")]
    pub pathloss: f64,
    #[serde(rename = "delay_s")]
    pub delay: f64,
    #[serde(rename = "aod_deg")]
    pub aod: f64,
    #[serde(rename = "zod_deg")]
    pub zod: f64,
    #[serde(rename = "aoa_deg")]
    pub aoa: f64,
    #[serde(rename = "zoa_deg")]
    pub zoa: f64,
    #[serde(rename = "phase_deg")]
    pub phase: f64,
}

impl PathParams {
    /// Features in channel-matrix row order.
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.pathloss,
            self.delay,
            self.aod,
            self.zod,
            self.aoa,
            self.zoa,
            self.phase,
        ]
    }

    pub fn from_array(v: [f64; 7]) -> Self {
        Self {
            pathloss: v[0],
            delay: v[1],
            aod: v[2],
            zod: v[3],
            aoa: v[4],
            zoa: v[5],
            phase: v[6],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidLink(format!("{what} out of range: {self:?}")));
        if !self.to_array().iter().all(|v| v.is_finite()) {
            return bad("non-finite value");
        }
        if self.pathloss <= 0.0 {
            return bad("pathloss");
        }
        if self.delay <= 0.0 {
            return bad("delay");
        }
        if !(0.0..=180.0).contains(&self.zod) || !(0.0..=180.0).contains(&self.zoa) {
            return bad("zenith angle");
        }
        if !(self.phase > -360.0 && self.phase <= 0.0) {
            return bad("phase");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkState {
    #[serde(rename = "LOS")]
    Los,
    #[serde(rename = "NLOS")]
    Nlos,
    #[serde(rename = "OUTAGE")]
    Outage,
}

/// Transmitter, receiver and carrier: everything needed to recompute the
/// deterministic parts of a link.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub tx: Point3,
    pub rx: Point3,
    #[serde(rename = "carrier_freq_hz")]
    pub carrier_freq: f64,
}

impl LinkGeometry {
    pub fn distances(&self) -> Result<Distances> {
        geometry(self.tx, self.rx)
    }

    pub fn condition(&self) -> Result<ConditionVector> {
        let d = self.distances()?;
        ConditionVector::new(d.dist2d, self.rx.z)
    }

    pub fn los_params(&self) -> Result<PathParams> {
        los_params(self.tx, self.rx, self.carrier_freq)
    }
}

/// One transmitter-receiver link. `paths` is sorted by ascending delay and
/// `link_state` describes the first arrival.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub tx: Point3,
    pub rx: Point3,
    #[serde(rename = "carrier_freq_hz")]
    pub carrier_freq: f64,
    pub link_state: LinkState,
    pub paths: Vec<PathParams>,
}

impl LinkRecord {
    pub fn geometry(&self) -> LinkGeometry {
        LinkGeometry {
            tx: self.tx,
            rx: self.rx,
            carrier_freq: self.carrier_freq,
        }
    }

    /// Receiver height, the second conditioning variable.
    pub fn height(&self) -> f64 {
        self.rx.z
    }

    pub fn condition(&self) -> Result<ConditionVector> {
        self.geometry().condition()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_freq > 0.0 && self.carrier_freq.is_finite()) {
            return Err(Error::InvalidLink(format!(
                "carrier frequency {} must be positive",
                self.carrier_freq
            )));
        }
        geometry(self.tx, self.rx)?;
        if self.paths.len() > MAX_PATHS {
            return Err(Error::TooManyPaths(self.paths.len()));
        }
        // Decoded outage links legitimately carry no paths.
        if self.paths.is_empty() && self.link_state != LinkState::Outage {
            return Err(Error::EmptyLink);
        }
        for p in &self.paths {
            p.validate()?;
        }
        if self.paths.windows(2).any(|w| w[0].delay > w[1].delay) {
            return Err(Error::InvalidLink("paths not sorted by delay".into()));
        }
        if self.link_state == LinkState::Los {
            let los = self.geometry().los_params()?;
            let first = self.paths[0].to_array();
            let close = first
                .iter()
                .zip(los.to_array())
                .all(|(a, b)| (a - b).abs() <= 1e-9 * b.abs().max(1e-300));
            if !close {
                return Err(Error::InvalidLink(
                    "LOS link whose first path is not the LOS path".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Conditioning variables of the generative model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionVector {
    pub dist2d: f64,
    pub height: f64,
}

impl ConditionVector {
    pub fn new(dist2d: f64, height: f64) -> Result<Self> {
        if !(dist2d > 0.0 && height > 0.0 && dist2d.is_finite() && height.is_finite()) {
            return Err(Error::Domain(format!(
                "condition needs positive distance and height, got ({dist2d}, {height})"
            )));
        }
        Ok(Self { dist2d, height })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distances {
    pub dist2d: f64,
    pub dist3d: f64,
}

/// Horizontal and slant distances. A purely vertical link is allowed here
/// (`dist2d == 0`) but rejected by the azimuth computations.
pub fn geometry(tx: Point3, rx: Point3) -> Result<Distances> {
    let (dx, dy, dz) = (tx.x - rx.x, tx.y - rx.y, tx.z - rx.z);
    let dist2d = dx.hypot(dy);
    let dist3d = (dist2d * dist2d + dz * dz).sqrt();
    if !dist3d.is_finite() {
        return Err(Error::Domain("non-finite coordinates".into()));
    }
    if dist3d == 0.0 {
        return Err(Error::DegenerateGeometry("transmitter and receiver coincide"));
    }
    Ok(Distances { dist2d, dist3d })
}

/// Free-space pathloss in dB.
pub fn fspl(dist3d: f64, freq: f64) -> Result<f64> {
    if !(dist3d > 0.0 && freq > 0.0) {
        return Err(Error::Domain(format!(
            "free-space pathloss needs positive distance and frequency, got ({dist3d}, {freq})"
        )));
    }
    Ok(20.0 * dist3d.log10() + 20.0 * freq.log10() + FSPL_OFFSET_DB)
}

/// Wraps an angle into (-180, 180].
pub fn wrap_degrees(angle: f64) -> f64 {
    let mut a = angle % 360.0;
    if a > 180.0 {
        a -= 360.0;
    } else if a <= -180.0 {
        a += 360.0;
    }
    a
}

/// Azimuth of the tx-to-rx direction in (-180, 180].
fn departure_azimuth(tx: Point3, rx: Point3) -> f64 {
    wrap_degrees((rx.y - tx.y).atan2(rx.x - tx.x).to_degrees())
}

/// `aod - 180` wrapped into (-180, 180] with a single rounding, so that
/// `aoa - aod` is exactly -180 or 180.
fn reverse_azimuth(aod: f64) -> f64 {
    if aod > 0.0 {
        aod - 180.0
    } else {
        aod + 180.0
    }
}

/// Zenith of departure in [0, 180]. Equals `arctan(dist2d / dz)`, shifted by
/// 180 when the receiver sits below the transmitter, and 90 for `dz == 0`.
fn departure_zenith(dist2d: f64, tx: Point3, rx: Point3) -> f64 {
    dist2d.atan2(rx.z - tx.z).to_degrees()
}

/// Phase of a path of the given delay, in (-360, 0].
pub fn arrival_phase(dist3d: f64, freq: f64) -> f64 {
    let cycles = freq * dist3d / SPEED_OF_LIGHT;
    let phase = -360.0 * (cycles - cycles.floor());
    // A fraction just below one can round to a full turn.
    if phase <= -360.0 {
        0.0
    } else {
        phase + 0.0
    }
}

/// Parameters of the direct path.
pub fn los_params(tx: Point3, rx: Point3, freq: f64) -> Result<PathParams> {
    let d = geometry(tx, rx)?;
    if d.dist2d == 0.0 {
        return Err(Error::DegenerateGeometry("azimuth undefined for a vertical link"));
    }
    let pathloss = fspl(d.dist3d, freq)?;
    let aod = departure_azimuth(tx, rx);
    let zod = departure_zenith(d.dist2d, tx, rx);
    Ok(PathParams {
        pathloss,
        delay: d.dist3d / SPEED_OF_LIGHT,
        aod,
        zod,
        aoa: reverse_azimuth(aod),
        zoa: 180.0 - zod,
        phase: arrival_phase(d.dist3d, freq),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link_geometry(tx: Point3, rx: Point3) -> LinkGeometry {
        LinkGeometry {
            tx,
            rx,
            carrier_freq: 12e9,
        }
    }

    #[test]
    fn planar_and_vertical_distances() {
        let d = geometry(Point3::new(0., 0., 0.), Point3::new(3., 4., 0.)).unwrap();
        assert_eq!((d.dist2d, d.dist3d), (5.0, 5.0));

        let d = geometry(Point3::new(0., 0., 0.), Point3::new(0., 0., 10.)).unwrap();
        assert_eq!((d.dist2d, d.dist3d), (0.0, 10.0));
        assert!(matches!(
            los_params(Point3::new(0., 0., 0.), Point3::new(0., 0., 10.), 12e9),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn rooftop_to_street_distances() {
        let d = geometry(Point3::new(1., 2., 30.), Point3::new(4., 6., 1.6)).unwrap();
        assert_eq!(d.dist2d, 5.0);
        // sqrt(25 + 28.4^2) = sqrt(831.56)
        assert!((d.dist3d - 28.836_782_067_352_8).abs() < 1e-12);
        assert!(d.dist3d >= d.dist2d);
    }

    #[test]
    fn coincident_points_are_rejected() {
        let p = Point3::new(1., 1., 1.);
        assert!(matches!(geometry(p, p), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn fspl_reference_values() {
        assert!((fspl(100.0, 12e9).unwrap() - 94.0336).abs() < 1e-3);
        assert_eq!(fspl(1.0, 1.0).unwrap(), -147.55);
        for f in [1e6, 3.5e9, 12e9, 28e9] {
            let step = fspl(400.0, f).unwrap() - fspl(200.0, f).unwrap();
            assert!((step - 20.0 * 2f64.log10()).abs() < 1e-12);
        }
        assert!(fspl(0.0, 1e9).is_err());
        assert!(fspl(10.0, -1.0).is_err());
    }

    #[test]
    fn zenith_of_a_45_degree_link() {
        let p = los_params(Point3::new(0., 0., 0.), Point3::new(10., 0., 10.), 12e9).unwrap();
        assert!((p.zod - 45.0).abs() < 1e-12);
        assert!((p.zoa - 135.0).abs() < 1e-12);
    }

    #[test]
    fn equal_heights_give_horizontal_zenith() {
        let p = los_params(Point3::new(0., 0., 5.), Point3::new(10., 3., 5.), 12e9).unwrap();
        assert_eq!(p.zod, 90.0);
        assert_eq!(p.zoa, 90.0);
    }

    #[test]
    fn receiver_below_transmitter_maps_into_upper_half() {
        let p = los_params(Point3::new(0., 0., 40.), Point3::new(30., 0., 10.), 12e9).unwrap();
        // arctan(30 / -30) = -45, shifted by 180.
        assert!((p.zod - 135.0).abs() < 1e-12);
        assert!((p.zoa - 45.0).abs() < 1e-12);
    }

    #[test]
    fn one_microsecond_link_has_zero_phase() {
        let p = los_params(Point3::new(0., 0., 0.), Point3::new(299.792458, 0., 0.), 12e9).unwrap();
        assert!((p.delay - 1e-6).abs() < 1e-21);
        assert_eq!(p.phase, 0.0);
    }

    #[test]
    fn integer_cycle_count_gives_zero_phase() {
        // 1 Hz carrier, one full wavelength away.
        assert_eq!(arrival_phase(SPEED_OF_LIGHT, 1.0), 0.0);
        assert_eq!(arrival_phase(2.0 * SPEED_OF_LIGHT, 1.0), 0.0);
        assert!((arrival_phase(0.25 * SPEED_OF_LIGHT, 1.0) + 90.0).abs() < 1e-9);
    }

    #[test]
    fn arrival_azimuth_is_departure_minus_180() {
        // Receiver straight "north" of the transmitter.
        let p = los_params(Point3::new(0., 0., 30.), Point3::new(0., 50., 1.6), 12e9).unwrap();
        assert!((p.aod - 90.0).abs() < 1e-12);
        assert!((p.aoa + 90.0).abs() < 1e-12);
    }

    #[test]
    fn wrap_keeps_half_open_interval() {
        assert_eq!(wrap_degrees(180.0), 180.0);
        assert_eq!(wrap_degrees(-180.0), 180.0);
        assert_eq!(wrap_degrees(-270.0), 90.0);
        assert_eq!(wrap_degrees(540.0), 180.0);
        assert_eq!(wrap_degrees(-10.0), -10.0);
    }

    #[test]
    fn validate_checks_los_first_path() {
        let g = link_geometry(Point3::new(0., 0., 30.), Point3::new(40., 30., 1.6));
        let los = g.los_params().unwrap();
        let mut link = LinkRecord {
            tx: g.tx,
            rx: g.rx,
            carrier_freq: g.carrier_freq,
            link_state: LinkState::Los,
            paths: vec![los],
        };
        link.validate().unwrap();
        link.paths[0].pathloss += 1.0;
        assert!(link.validate().is_err());

        link.paths.clear();
        link.link_state = LinkState::Nlos;
        assert!(matches!(link.validate(), Err(Error::EmptyLink)));
        link.link_state = LinkState::Outage;
        link.validate().unwrap();
    }

    #[test]
    fn path_invariants() {
        let ok = PathParams {
            pathloss: 100.0,
            delay: 1e-6,
            aod: 10.0,
            zod: 0.0,
            aoa: -170.0,
            zoa: 180.0,
            phase: 0.0,
        };
        ok.validate().unwrap();
        for bad in [
            PathParams { pathloss: 0.0, ..ok },
            PathParams { delay: -1e-9, ..ok },
            PathParams { zod: 180.5, ..ok },
            PathParams { zoa: -0.1, ..ok },
            PathParams { phase: -360.0, ..ok },
            PathParams { phase: 0.5, ..ok },
            PathParams { aod: f64::NAN, ..ok },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
