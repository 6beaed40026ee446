use super::{
    beam_gain, db_sum, doppler_shift, fspl_db, multipath_penalty, shannon_capacity,
    ChannelError, ChannelParams, LinkKind,
};
use crate::world::{angle_between_deg, slant_range_and_elevation, Point3};

/// Antenna of one link end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Antenna {
    /// Beam assumed aligned with whatever it is measuring (beam-swept
    /// reference signals, or a perfectly tracked peer).
    Aligned { peak_gain: f64 },
    /// Beam pointed along `boresight`; the gain toward any other direction
    /// follows the sector pattern.
    Steered {
        boresight: Point3,
        beamwidth: f64,
        peak_gain: f64,
    },
}

impl Antenna {
    /// Gain toward `direction`, plus the pointing error used (degrees).
    pub fn gain_toward(&self, direction: Point3, sidelobe: f64) -> (f64, f64) {
        match *self {
            Antenna::Aligned { peak_gain } => (peak_gain, 0.0),
            Antenna::Steered {
                boresight,
                beamwidth,
                peak_gain,
            } => {
                let err = angle_between_deg(boresight, direction);
                (beam_gain(err, beamwidth, peak_gain, sidelobe), err)
            }
        }
    }
}

/// One radio end of a link: where it is, how it moves, its transmit power
/// (ignored when it only receives) and its antenna.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioEnd {
    pub position: Point3,
    pub velocity: Point3,
    pub tx_power_dbm: f64,
    pub antenna: Antenna,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSample {
    pub kind: LinkKind,
    pub range: f64,
    /// Elevation of the link above the horizontal, degrees, in [0, 90].
    pub elevation: f64,
    pub frequency: f64,
    pub bandwidth: f64,
    pub path_loss: f64,
    pub tx_power: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub multipath_penalty: f64,
    pub rssi: f64,
    pub interference_plus_noise: f64,
    pub sinr: f64,
    pub doppler: f64,
    pub capacity: f64,
    pub tx_pointing_error: f64,
    pub blocked: bool,
}

impl ChannelSample {
    /// RSSI recomputed from the stored budget terms.
    pub fn reconstructed_rssi(&self) -> f64 {
        link_budget(
            self.tx_power,
            self.tx_gain,
            self.rx_gain,
            self.path_loss,
            self.multipath_penalty,
        )
    }
}

fn link_budget(tx: f64, gt: f64, gr: f64, pl: f64, mp: f64) -> f64 {
    tx + gt + gr - pl - mp
}

/// Received level of `tx` at `rx` plus the geometry terms behind it.
struct Budget {
    range: f64,
    elevation: f64,
    path_loss: f64,
    tx_gain: f64,
    rx_gain: f64,
    multipath: f64,
    rssi: f64,
    tx_err: f64,
    los: Point3,
}

fn budget(
    tx: &RadioEnd,
    rx: &RadioEnd,
    frequency: f64,
    params: &ChannelParams,
    ground_end: bool,
) -> Result<Budget, ChannelError> {
    let (range, elevation) = slant_range_and_elevation(tx.position, rx.position)?;
    let los = (rx.position - tx.position) * (1.0 / range);
    let path_loss = fspl_db(range, frequency)?;
    let (tx_gain, tx_err) = tx.antenna.gain_toward(los, params.sidelobe_gain_dbi);
    let (rx_gain, _) = rx.antenna.gain_toward(los * -1.0, params.sidelobe_gain_dbi);
    let elevation = elevation.abs();
    let multipath = if ground_end {
        multipath_penalty(elevation, params)
    } else {
        0.0
    };
    let rssi = link_budget(tx.tx_power_dbm, tx_gain, rx_gain, path_loss, multipath);
    Ok(Budget {
        range,
        elevation,
        path_loss,
        tx_gain,
        rx_gain,
        multipath,
        rssi,
        tx_err,
        los,
    })
}

/// Evaluates one link: path loss, beam gains and the multipath step give
/// the RSSI; co-channel `interferers` are power-summed with the noise floor
/// to give SINR; capacity is the Shannon bound over `bandwidth`, zero when
/// blocked, below sensitivity, or below the minimum SINR.
pub fn sample_link(
    kind: LinkKind,
    tx: &RadioEnd,
    rx: &RadioEnd,
    bandwidth: f64,
    params: &ChannelParams,
    interferers: &[RadioEnd],
    blocked: bool,
) -> Result<ChannelSample, ChannelError> {
    let frequency = params.carrier_hz.get(kind);
    // Air-to-air links have no ground reflection.
    let ground_end = kind != LinkKind::A2A;
    let b = budget(tx, rx, frequency, params, ground_end)?;

    let noise = params.noise_floor(bandwidth);
    let mut levels = Vec::with_capacity(interferers.len() + 1);
    levels.push(noise);
    for i in interferers {
        levels.push(budget(i, rx, frequency, params, ground_end)?.rssi);
    }
    let interference_plus_noise = if levels.len() == 1 {
        noise
    } else {
        db_sum(levels)
    };
    let sinr = b.rssi - interference_plus_noise;

    let closing = (tx.velocity - rx.velocity).dot(b.los);
    let doppler = doppler_shift(closing, frequency);

    let capacity = if blocked
        || b.rssi < params.receiver_sensitivity_dbm
        || sinr < params.min_sinr_db
    {
        0.0
    } else {
        shannon_capacity(bandwidth, sinr, params.spectral_efficiency)
    };

    Ok(ChannelSample {
        kind,
        range: b.range,
        elevation: b.elevation,
        frequency,
        bandwidth,
        path_loss: b.path_loss,
        tx_power: tx.tx_power_dbm,
        tx_gain: b.tx_gain,
        rx_gain: b.rx_gain,
        multipath_penalty: b.multipath,
        rssi: b.rssi,
        interference_plus_noise,
        sinr,
        doppler,
        capacity,
        tx_pointing_error: b.tx_err,
        blocked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn end(p: Point3, tx: f64) -> RadioEnd {
        RadioEnd {
            position: p,
            velocity: Point3::ZERO,
            tx_power_dbm: tx,
            antenna: Antenna::Aligned { peak_gain: 10.0 },
        }
    }

    fn params() -> ChannelParams {
        ChannelParams {
            noise_floor_dbm: Some(-100.0),
            receiver_sensitivity_dbm: -120.0,
            min_sinr_db: -20.0,
            ..Default::default()
        }
    }

    #[test]
    fn no_interferers_gives_snr() {
        let p = params();
        let s = sample_link(
            LinkKind::A2G,
            &end(Point3::new(0.0, 0.0, 30.0), 40.0),
            &end(Point3::new(1000.0, 0.0, 300.0), 0.0),
            20e6,
            &p,
            &[],
            false,
        )
        .unwrap();
        assert_eq!(s.sinr, s.rssi - (-100.0));
        assert_eq!(s.rssi, s.reconstructed_rssi());
        assert_eq!(s.multipath_penalty, 0.0); // 15.1 deg
    }

    #[test]
    fn sinr_of_three_gives_twice_bandwidth() {
        // Place the receiver so RSSI sits 10 log10(3) above a fixed floor.
        let p = ChannelParams {
            noise_floor_dbm: None,
            ..params()
        };
        let tx = end(Point3::new(0.0, 0.0, 0.0), 0.0);
        let rx = end(Point3::new(0.0, 0.0, 100.0), 0.0);
        let probe = sample_link(LinkKind::A2G, &tx, &rx, 20e6, &p, &[], false).unwrap();
        let p = ChannelParams {
            noise_floor_dbm: Some(probe.rssi - 10.0 * 3f64.log10()),
            ..p
        };
        let s = sample_link(LinkKind::A2G, &tx, &rx, 20e6, &p, &[], false).unwrap();
        assert_relative_eq!(s.capacity, 40e6, epsilon = 1e-3);
    }

    #[test]
    fn equal_interferer_gives_zero_db_sir() {
        // signal and interferer both arrive near -70 dBm, 30 dB above noise
        let p = params();
        let rx = end(Point3::new(0.0, 0.0, 300.0), 0.0);
        let tx = end(Point3::new(1000.0, 0.0, 300.0), 30.0);
        let int = end(Point3::new(-1000.0, 0.0, 300.0), 30.0);
        let s = sample_link(LinkKind::A2A, &tx, &rx, 20e6, &p, &[int], false).unwrap();
        assert!(s.sinr <= 0.0);
        assert!(s.sinr > -0.01, "sinr {}", s.sinr);
        assert!(s.capacity < 20e6);
    }

    #[test]
    fn air_to_air_skips_ground_multipath() {
        let p = params();
        let tx = end(Point3::new(0.0, 0.0, 300.0), 20.0);
        let rx = end(Point3::new(10_000.0, 0.0, 300.0), 0.0);
        let a2a = sample_link(LinkKind::A2A, &tx, &rx, 20e6, &p, &[], false).unwrap();
        assert_eq!(a2a.multipath_penalty, 0.0);
        let a2g = sample_link(LinkKind::A2G, &tx, &rx, 20e6, &p, &[], false).unwrap();
        assert_eq!(a2g.multipath_penalty, p.multipath_penalty_db);
    }

    #[test]
    fn below_sensitivity_or_blocked_has_no_capacity() {
        let p = ChannelParams {
            receiver_sensitivity_dbm: 0.0,
            ..params()
        };
        let tx = end(Point3::new(0.0, 0.0, 30.0), 20.0);
        let rx = end(Point3::new(5000.0, 0.0, 300.0), 0.0);
        let s = sample_link(LinkKind::A2G, &tx, &rx, 20e6, &p, &[], false).unwrap();
        assert_eq!(s.capacity, 0.0);
        let s = sample_link(LinkKind::A2G, &tx, &rx, 20e6, &params(), &[], true).unwrap();
        assert_eq!(s.capacity, 0.0);
        assert!(s.blocked);
    }

    #[test]
    fn steered_beam_uses_pattern() {
        let p = params();
        let tx = RadioEnd {
            antenna: Antenna::Steered {
                boresight: Point3::new(1.0, 0.0, 0.0),
                beamwidth: 20.0,
                peak_gain: 20.0,
            },
            ..end(Point3::ZERO, 30.0)
        };
        let on = sample_link(LinkKind::A2A, &tx, &end(Point3::new(100.0, 0.0, 0.0), 0.0), 1e6, &p, &[], false)
            .unwrap();
        let off = sample_link(LinkKind::A2A, &tx, &end(Point3::new(0.0, 100.0, 0.0), 0.0), 1e6, &p, &[], false)
            .unwrap();
        assert_eq!(on.tx_gain, 20.0);
        assert_eq!(off.tx_gain, -10.0);
        assert_relative_eq!(off.tx_pointing_error, 90.0, epsilon = 1e-9);
    }

    #[test]
    fn doppler_sign_is_positive_when_closing() {
        let p = params();
        let mut tx = end(Point3::ZERO, 30.0);
        tx.velocity = Point3::new(97.22, 0.0, 0.0);
        let rx = end(Point3::new(1000.0, 0.0, 0.0), 0.0);
        let s = sample_link(LinkKind::A2G, &tx, &rx, 1e6, &p, &[], false).unwrap();
        assert_relative_eq!(s.doppler, 648.58, epsilon = 0.01);
        // perpendicular motion has no line-of-sight component
        tx.velocity = Point3::new(0.0, 97.22, 0.0);
        let s = sample_link(LinkKind::A2G, &tx, &rx, 1e6, &p, &[], false).unwrap();
        assert_eq!(s.doppler, 0.0);
    }

    #[test]
    fn degenerate_geometry_propagates() {
        let p = params();
        let a = end(Point3::ZERO, 30.0);
        assert!(matches!(
            sample_link(LinkKind::A2A, &a, &a, 1e6, &p, &[], false),
            Err(ChannelError::Geometry(_))
        ));
    }

    proptest::proptest! {
        #[test]
        fn rssi_reconstruction_is_exact(
            x in -50_000.0f64..50_000.0, y in -50_000.0f64..50_000.0, z in 1.0f64..1000.0,
            tx in -10.0f64..50.0,
        ) {
            let p = params();
            let s = sample_link(
                LinkKind::A2G,
                &end(Point3::new(0.0, 0.0, 0.0), tx),
                &end(Point3::new(x, y, z), 0.0),
                20e6, &p, &[], false,
            ).unwrap();
            proptest::prop_assert_eq!(s.rssi.to_bits(), s.reconstructed_rssi().to_bits());
            proptest::prop_assert!(s.capacity >= 0.0);
        }

        #[test]
        fn interferers_never_raise_sinr(
            ix in -20_000.0f64..20_000.0, iy in -20_000.0f64..20_000.0, ip in -20.0f64..50.0,
        ) {
            let p = params();
            let tx = end(Point3::new(0.0, 0.0, 30.0), 30.0);
            let rx = end(Point3::new(3000.0, 0.0, 300.0), 0.0);
            let int = end(Point3::new(ix, iy, 31.0), ip);
            let clean = sample_link(LinkKind::A2G, &tx, &rx, 20e6, &p, &[], false).unwrap();
            let dirty = sample_link(LinkKind::A2G, &tx, &rx, 20e6, &p, &[int], false).unwrap();
            proptest::prop_assert!(dirty.sinr <= clean.sinr);
            proptest::prop_assert!(dirty.capacity <= clean.capacity);
        }
    }
}
