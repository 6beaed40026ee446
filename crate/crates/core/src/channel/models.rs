use super::{ChannelError, ChannelParams};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Free-space path loss, 20 log10(4 pi d f / c).
pub fn fspl_db(range: f64, frequency: f64) -> Result<f64, ChannelError> {
    if !(range > 0.0) || !(frequency > 0.0) {
        return Err(ChannelError::Domain { range, frequency });
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * range * frequency / SPEED_OF_LIGHT).log10())
}

/// Step penalty for low-elevation multipath. The threshold itself is
/// penalty-free.
pub fn multipath_penalty(elevation_deg: f64, params: &ChannelParams) -> f64 {
    if elevation_deg < params.multipath_threshold_deg {
        params.multipath_penalty_db
    } else {
        0.0
    }
}

/// Doppler shift for a line-of-sight closing speed (positive = closing).
pub fn doppler_shift(closing_speed: f64, frequency: f64) -> f64 {
    frequency * closing_speed / SPEED_OF_LIGHT
}

/// Flat-top sector pattern: peak gain inside half the beamwidth
/// (inclusive), sidelobe floor outside.
pub fn beam_gain(pointing_error_deg: f64, beamwidth_deg: f64, peak_dbi: f64, sidelobe_dbi: f64) -> f64 {
    if pointing_error_deg.abs() <= beamwidth_deg / 2.0 {
        peak_dbi
    } else {
        sidelobe_dbi.min(peak_dbi)
    }
}

pub fn thermal_noise_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Power sum of levels given in dBm.
pub fn db_sum(levels_dbm: impl IntoIterator<Item = f64>) -> f64 {
    mw_to_dbm(levels_dbm.into_iter().map(dbm_to_mw).sum())
}

/// Shannon capacity scaled by the spectral-efficiency factor, bit/s.
pub fn shannon_capacity(bandwidth_hz: f64, sinr_db: f64, efficiency: f64) -> f64 {
    efficiency * bandwidth_hz * (1.0 + 10f64.powf(sinr_db / 10.0)).log2()
}
