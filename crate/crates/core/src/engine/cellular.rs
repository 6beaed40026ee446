use std::collections::BTreeMap;

use crate::channel::{sample_link, Antenna, ChannelError, ChannelParams, LinkKind, RadioEnd};
use crate::ids::{StationId, TrackId};
use crate::scenario::CellularParams;
use crate::world::{GroundStation, Point3, TrackPath, WorldError};

/// Trackside base stations every `spacing_m` along each track, starting
/// at arc length 0, offset sideways by `lateral_offset_m`. Ids run from 1
/// in track order.
pub fn trackside_chain(
    tracks: &BTreeMap<TrackId, TrackPath>,
    p: &CellularParams,
) -> Result<Vec<GroundStation>, WorldError> {
    let mut out = Vec::new();
    for track in tracks.values() {
        let n = (track.length() / p.spacing_m).floor() as u64;
        for k in 0..=n {
            let s = k as f64 * p.spacing_m;
            let id = StationId(out.len() as u32 + 1);
            out.push(GroundStation::new(
                id,
                track.offset_point(s, p.lateral_offset_m),
                p.antenna_height,
                p.tx_power_dbm,
                120.0,
                p.gain_dbi,
            )?);
        }
    }
    Ok(out)
}

pub fn bs_end(bs: &GroundStation) -> RadioEnd {
    RadioEnd {
        position: bs.antenna(),
        velocity: Point3::ZERO,
        tx_power_dbm: bs.tx_power,
        antenna: Antenna::Aligned {
            peak_gain: bs.beam.peak_gain,
        },
    }
}

/// RSSI a train antenna sees halfway between the first two base stations of
/// `track`; `None` when the track is shorter than one spacing.
pub fn midpoint_threshold(
    track: &TrackPath,
    p: &CellularParams,
    channel: &ChannelParams,
    train_height: f64,
) -> Result<Option<f64>, ChannelError> {
    if track.length() < p.spacing_m {
        return Ok(None);
    }
    let bs = GroundStation::new(
        StationId(1),
        track.offset_point(0.0, p.lateral_offset_m),
        p.antenna_height,
        p.tx_power_dbm,
        120.0,
        p.gain_dbi,
    )?;
    let rx = RadioEnd {
        position: track
            .point_at(p.spacing_m / 2.0)
            .with_height(train_height),
        velocity: Point3::ZERO,
        tx_power_dbm: 0.0,
        antenna: Antenna::Aligned {
            peak_gain: p.train_gain_dbi,
        },
    };
    let s = sample_link(
        LinkKind::Cellular,
        &bs_end(&bs),
        &rx,
        channel.bandwidth_hz.cellular,
        channel,
        &[],
        false,
    )?;
    Ok(Some(s.rssi))
}
