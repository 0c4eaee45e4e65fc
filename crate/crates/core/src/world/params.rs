use serde::{Deserialize, Serialize};

use crate::attacks::AttackConfig;
use crate::error::ConfigError;
use crate::immune::ImmuneParams;
use crate::mobility::StParams;
use crate::net_model::{PathLoss, Region, Vec3, DEFAULT_COMM_RANGE, DEFAULT_TX_POWER_DBM};
use crate::routing::LatencyModel;
use crate::security::{Defense, SecurityParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    pub comm_range: f64,
    pub tx_power_dbm: f64,
    pub path_loss: PathLoss,
    /// Reference for the positive SSI scale used by route fitness.
    pub noise_floor_dbm: f64,
    /// Standard deviation of per-reception log-normal shadowing, dB.
    pub shadowing_db: f64,
    pub latency: LatencyModel,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            comm_range: DEFAULT_COMM_RANGE,
            tx_power_dbm: DEFAULT_TX_POWER_DBM,
            path_loss: PathLoss::default(),
            noise_floor_dbm: -100.0,
            shadowing_db: 1.0,
            latency: LatencyModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficParams {
    /// Concurrent CBR flows between ground stations.
    pub flows: usize,
    /// packets per second per flow
    pub rate: f64,
    /// bytes
    pub packet_size: u32,
    /// First packet instant.
    pub start: f64,
    /// Each flow drops its route and rediscovers at this period.
    pub epoch: f64,
    /// Source-side queue bound while no route is available; oldest dropped first.
    pub buffer_capacity: usize,
    /// Wait before retrying a discovery that produced no usable route.
    pub retry_backoff: f64,
}

impl Default for TrafficParams {
    fn default() -> Self {
        TrafficParams {
            flows: 4,
            rate: 4.0,
            packet_size: 512,
            start: 1.0,
            epoch: 30.0,
            buffer_capacity: 1200,
            retry_backoff: 0.5,
        }
    }
}

/// Optional per-run records kept in the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Recording {
    pub decisions: bool,
    pub audits: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldParams {
    pub n_uavs: usize,
    pub region: Region,
    /// UAV altitudes are drawn uniformly from this band, m.
    pub altitude_band: (f64, f64),
    pub ground_stations: Vec<Vec3>,
    pub mobility: StParams,
    pub mobility_tick: f64,
    pub radio: RadioParams,
    pub traffic: TrafficParams,
    pub attack: AttackConfig,
    pub defense: Defense,
    pub security: SecurityParams,
    pub immune: ImmuneParams,
    pub sim_time: f64,
    pub metric_interval: f64,
    pub recording: Recording,
}

/// Four stations on the floor, one near each corner of the central band.
pub fn default_ground_stations(region: &Region) -> Vec<Vec3> {
    let w = region.max.x - region.min.x;
    let h = region.max.y - region.min.y;
    [(0.15, 0.3), (0.85, 0.3), (0.15, 0.7), (0.85, 0.7)]
        .iter()
        .map(|&(fx, fy)| Vec3::new(region.min.x + fx * w, region.min.y + fy * h, region.min.z))
        .collect()
}

impl WorldParams {
    /// 100 UAVs over 2000×2000×500 m for 300 s.
    pub fn desk() -> Self {
        let region = Region::sized(2000.0, 2000.0, 500.0);
        WorldParams {
            n_uavs: 100,
            region,
            altitude_band: (100.0, 200.0),
            ground_stations: default_ground_stations(&region),
            mobility: StParams::default(),
            mobility_tick: 0.1,
            radio: RadioParams::default(),
            traffic: TrafficParams::default(),
            attack: AttackConfig::default(),
            defense: Defense::SuasHis,
            security: SecurityParams::default(),
            immune: ImmuneParams::default(),
            sim_time: 300.0,
            metric_interval: 10.0,
            recording: Recording::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_uavs == 0 {
            return Err(ConfigError::invalid("uav.n_uavs", "must be at least 1"));
        }
        self.region.validate()?;
        let (lo, hi) = self.altitude_band;
        if !(lo <= hi && lo >= self.region.min.z && hi <= self.region.max.z) {
            return Err(ConfigError::invalid("uav.altitude", "band must lie inside the region height"));
        }
        for g in &self.ground_stations {
            if !self.region.contains(*g) {
                return Err(ConfigError::invalid("ground_stations", "station outside the region"));
            }
        }
        if self.traffic.flows > 0 && self.ground_stations.len() < 2 {
            return Err(ConfigError::invalid("ground_stations", "flows need at least two stations"));
        }
        self.mobility.validate()?;
        if !(self.mobility_tick > 0.0 && self.mobility_tick.is_finite()) {
            return Err(ConfigError::invalid("mobility.tick", "must be positive"));
        }
        let r = &self.radio;
        if !(r.comm_range > 0.0 && r.comm_range.is_finite()) {
            return Err(ConfigError::invalid("radio.comm_range", "must be positive"));
        }
        if !(r.path_loss.exponent > 0.0 && r.path_loss.reference_distance > 0.0) {
            return Err(ConfigError::invalid("radio.path_loss_exponent", "must be positive"));
        }
        if !(r.shadowing_db >= 0.0 && r.shadowing_db.is_finite()) {
            return Err(ConfigError::invalid("radio.shadowing_db", "must be non-negative"));
        }
        if !(r.latency.hop > 0.0 && r.latency.jitter >= 0.0 && r.latency.tunnel > 0.0) {
            return Err(ConfigError::invalid("radio.latency", "delays must be positive"));
        }
        if !(r.tx_power_dbm.is_finite() && r.noise_floor_dbm.is_finite() && r.noise_floor_dbm < r.tx_power_dbm) {
            return Err(ConfigError::invalid("radio.noise_floor_dbm", "must be finite and below the transmit power"));
        }
        let t = &self.traffic;
        if !(t.rate > 0.0 && t.rate.is_finite()) {
            return Err(ConfigError::invalid("traffic.rate", "must be positive"));
        }
        if t.packet_size == 0 {
            return Err(ConfigError::invalid("traffic.packet_size", "must be positive"));
        }
        if !(t.start >= 0.0 && t.epoch > 0.0 && t.retry_backoff > 0.0) {
            return Err(ConfigError::invalid("traffic", "start, epoch and retry_backoff must be positive"));
        }
        if t.buffer_capacity == 0 {
            return Err(ConfigError::invalid("traffic.buffer_capacity", "must be at least 1"));
        }
        self.attack.validate()?;
        self.security.validate()?;
        self.immune.validate()?;
        if !(self.sim_time > 0.0 && self.sim_time.is_finite()) {
            return Err(ConfigError::invalid("sim_time", "must be positive"));
        }
        if !(self.metric_interval > 0.0 && self.metric_interval.is_finite()) {
            return Err(ConfigError::invalid("metric_interval", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_defaults_are_valid() {
        let p = WorldParams::desk();
        p.validate().unwrap();
        assert_eq!(p.ground_stations[0], Vec3::new(300.0, 600.0, 0.0));
        assert_eq!(p.ground_stations[3], Vec3::new(1700.0, 1400.0, 0.0));
    }

    #[test]
    fn bad_altitude_band_is_named() {
        let p = WorldParams { altitude_band: (100.0, 900.0), ..WorldParams::desk() };
        assert_eq!(p.validate().unwrap_err().field, "uav.altitude");
    }
}
