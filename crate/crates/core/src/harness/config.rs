use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attacks::{AttackConfig, AttackMix, MAX_MALICIOUS_RATIO};
use crate::error::ConfigError;
use crate::immune::ImmuneParams;
use crate::mobility::StParams;
use crate::net_model::{Region, Vec3};
use crate::security::{Defense, SecurityParams, SurveillanceThreshold};
use crate::world::{default_ground_stations, RadioParams, Recording, TrafficParams, WorldParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig { x: 2000.0, y: 2000.0, z: 500.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UavConfig {
    pub n_uavs: usize,
    pub speed: f64,
    pub altitude_min: f64,
    pub altitude_max: f64,
}

impl Default for UavConfig {
    fn default() -> Self {
        UavConfig { n_uavs: 100, speed: 180.0, altitude_min: 100.0, altitude_max: 200.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityConfig {
    pub curvature_stddev: f64,
    pub mean_maneuver_duration: f64,
    pub r_min: f64,
    pub tick: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        let st = StParams::default();
        MobilityConfig {
            curvature_stddev: st.curvature_stddev,
            mean_maneuver_duration: st.mean_maneuver_duration,
            r_min: st.r_min,
            tick: 0.1,
        }
    }
}

/// Values swept by the run matrix. An empty list leaves the base value alone.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub defense: Vec<Defense>,
    pub attack: Vec<String>,
    pub n_uavs: Vec<usize>,
    pub sim_time: Vec<f64>,
    pub malicious_ratio: Vec<f64>,
    pub t_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub sim_time: f64,
    pub seeds: Vec<u64>,
    pub defense: Defense,
    pub metric_interval: f64,
    /// Ground-station positions; defaults to four stations derived from the region.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_stations: Option<Vec<[f64; 3]>>,
    pub region: RegionConfig,
    pub uav: UavConfig,
    pub mobility: MobilityConfig,
    pub radio: RadioParams,
    pub traffic: TrafficParams,
    pub attack: AttackConfig,
    pub immune: ImmuneParams,
    pub security: SecurityParams,
    pub sweep: Sweep,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".to_string(),
            sim_time: 300.0,
            seeds: (1..=10).collect(),
            defense: Defense::SuasHis,
            metric_interval: 10.0,
            ground_stations: None,
            region: RegionConfig::default(),
            uav: UavConfig::default(),
            mobility: MobilityConfig::default(),
            radio: RadioParams::default(),
            traffic: TrafficParams::default(),
            attack: AttackConfig::default(),
            immune: ImmuneParams::default(),
            security: SecurityParams::default(),
            sweep: Sweep::default(),
        }
    }
}

/// One point of the run matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub defense: Defense,
    pub attack: AttackMix,
    pub n_uavs: usize,
    pub sim_time: f64,
    pub malicious_ratio: f64,
    pub t_s: f64,
}

fn or_base<T: Clone>(swept: &[T], base: T) -> Vec<T> {
    if swept.is_empty() {
        vec![base]
    } else {
        swept.to_vec()
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| ConfigError::invalid("scenario", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario configs always serialize")
    }

    /// Cartesian product of the sweep in canonical order: defense, attack,
    /// n_uavs, sim_time, malicious_ratio, t_s.
    pub fn cells(&self) -> Result<Vec<Cell>, ConfigError> {
        let attacks = if self.sweep.attack.is_empty() {
            vec![self.attack.mix]
        } else {
            self.sweep
                .attack
                .iter()
                .map(|a| a.parse().map_err(|e: ConfigError| ConfigError::invalid("sweep.attack", e.message)))
                .collect::<Result<_, _>>()?
        };
        let mut out = Vec::new();
        for defense in or_base(&self.sweep.defense, self.defense) {
            for &attack in &attacks {
                for n_uavs in or_base(&self.sweep.n_uavs, self.uav.n_uavs) {
                    for sim_time in or_base(&self.sweep.sim_time, self.sim_time) {
                        for malicious_ratio in or_base(&self.sweep.malicious_ratio, self.attack.malicious_ratio) {
                            for t_s in or_base(&self.sweep.t_s, self.security.t_s) {
                                out.push(Cell { defense, attack, n_uavs, sim_time, malicious_ratio, t_s });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn world_params(&self, cell: &Cell) -> WorldParams {
        let region = Region::sized(self.region.x, self.region.y, self.region.z);
        let ground_stations = match &self.ground_stations {
            Some(g) => g.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect(),
            None => default_ground_stations(&region),
        };
        let mut attack = self.attack;
        attack.mix = cell.attack;
        attack.malicious_ratio = cell.malicious_ratio;
        let mut security = self.security;
        security.t_s = cell.t_s;
        WorldParams {
            n_uavs: cell.n_uavs,
            region,
            altitude_band: (self.uav.altitude_min, self.uav.altitude_max),
            ground_stations,
            mobility: StParams {
                curvature_stddev: self.mobility.curvature_stddev,
                mean_maneuver_duration: self.mobility.mean_maneuver_duration,
                speed: self.uav.speed,
                r_min: self.mobility.r_min,
            },
            mobility_tick: self.mobility.tick,
            radio: self.radio,
            traffic: self.traffic,
            attack,
            defense: cell.defense,
            security,
            immune: self.immune,
            sim_time: cell.sim_time,
            metric_interval: self.metric_interval,
            recording: Recording::default(),
        }
    }

    /// Checks every field and every cell the sweep expands to.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(ConfigError::invalid("name", "must not be empty"));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::invalid("seeds", "at least one seed is required"));
        }
        for &r in &self.sweep.malicious_ratio {
            if !(0.0..=MAX_MALICIOUS_RATIO).contains(&r) {
                return Err(ConfigError::invalid(
                    "sweep.malicious_ratio",
                    format!("{r} is outside [0, {MAX_MALICIOUS_RATIO}]"),
                ));
            }
        }
        for &t in &self.sweep.t_s {
            SurveillanceThreshold::new(t).map_err(|e| ConfigError::invalid("sweep.t_s", e.message))?;
        }
        if self.sweep.n_uavs.contains(&0) {
            return Err(ConfigError::invalid("sweep.n_uavs", "must be at least 1"));
        }
        if self.sweep.sim_time.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(ConfigError::invalid("sweep.sim_time", "must be positive"));
        }
        let cells = self.cells()?;
        // validating the base cell reports base-field errors under their own names
        let base = Cell {
            defense: self.defense,
            attack: self.attack.mix,
            n_uavs: self.uav.n_uavs,
            sim_time: self.sim_time,
            malicious_ratio: self.attack.malicious_ratio,
            t_s: self.security.t_s,
        };
        self.world_params(&base).validate().map_err(rename_world_field)?;
        for c in &cells {
            self.world_params(c).validate().map_err(rename_world_field)?;
        }
        Ok(())
    }
}

/// World-level field names mapped back onto scenario keys where they differ.
fn rename_world_field(e: ConfigError) -> ConfigError {
    let field = match e.field.as_ref() {
        "uav.altitude" => "uav.altitude_min".into(),
        "mobility.speed" => "uav.speed".into(),
        _ => e.field,
    };
    ConfigError { field, message: e.message }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::invalid("scenario", format!("cannot read {}: {e}", path.display())))?;
    ScenarioConfig::from_toml(&text)
}

fn ratio_steps() -> Vec<f64> {
    (0..=6).map(|i| f64::from(i) * 0.05).map(|r| (r * 100.0).round() / 100.0).collect()
}

/// Desk-scale sweep: 100 UAVs, 2000×2000×500 m, 300 s, ten seeds, ratio 0..0.3.
pub fn scenario_desk() -> ScenarioConfig {
    ScenarioConfig {
        name: "scenario-desk".to_string(),
        sweep: Sweep {
            defense: vec![Defense::SuasHis, Defense::None],
            malicious_ratio: ratio_steps(),
            ..Sweep::default()
        },
        ..ScenarioConfig::default()
    }
}

/// Swarm size 100..400 over 6000×6000 m for 1400 s.
pub fn scenario1() -> ScenarioConfig {
    ScenarioConfig {
        name: "scenario1".to_string(),
        sim_time: 1400.0,
        region: RegionConfig { x: 6000.0, y: 6000.0, z: 500.0 },
        sweep: Sweep {
            defense: vec![Defense::SuasHis, Defense::None],
            n_uavs: vec![100, 200, 300, 400],
            malicious_ratio: ratio_steps(),
            ..Sweep::default()
        },
        ..ScenarioConfig::default()
    }
}

/// 400 UAVs over 4000×4000 m with the horizon swept 200..1400 s.
pub fn scenario2() -> ScenarioConfig {
    ScenarioConfig {
        name: "scenario2".to_string(),
        sim_time: 1400.0,
        region: RegionConfig { x: 4000.0, y: 4000.0, z: 500.0 },
        uav: UavConfig { n_uavs: 400, ..UavConfig::default() },
        sweep: Sweep {
            defense: vec![Defense::SuasHis, Defense::None],
            sim_time: (1..=7).map(|k| 200.0 * f64::from(k)).collect(),
            malicious_ratio: ratio_steps(),
            ..Sweep::default()
        },
        ..ScenarioConfig::default()
    }
}

pub const PRESETS: [&str; 3] = ["scenario-desk", "scenario1", "scenario2"];

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    match name {
        "scenario-desk" | "desk" => Some(scenario_desk()),
        "scenario1" => Some(scenario1()),
        "scenario2" => Some(scenario2()),
        _ => None,
    }
}

const KEY_DOCS: &[(&str, &str)] = &[
    ("name", "label written to the scenario column of results.csv"),
    ("sim_time", "simulated horizon, s"),
    ("seeds", "master seeds; every cell runs once per seed"),
    ("defense", "\"suas-his\" or \"none\""),
    ("metric_interval", "spacing of the delivery-ratio time series, s"),
    ("region.x", "width, m"),
    ("region.y", "depth, m"),
    ("region.z", "height, m; ground stations sit at z = 0"),
    ("uav.n_uavs", "number of airborne nodes"),
    ("uav.speed", "constant airspeed, m/s"),
    ("uav.altitude_min", "lower edge of the flight band, m"),
    ("uav.altitude_max", "upper edge of the flight band, m"),
    ("mobility.curvature_stddev", "standard deviation of turn curvature, 1/m"),
    ("mobility.mean_maneuver_duration", "mean time between maneuver changes, s"),
    ("mobility.r_min", "tightest turn radius, m"),
    ("mobility.tick", "position update period, s"),
    ("radio.comm_range", "link range, m"),
    ("radio.tx_power_dbm", "honest transmit power, dBm"),
    ("radio.noise_floor_dbm", "zero of the signal-margin scale used in route fitness, dBm"),
    ("radio.shadowing_db", "per-reception shadowing standard deviation, dB"),
    ("radio.path_loss.exponent", "log-distance exponent"),
    ("radio.path_loss.reference_distance", "reference distance, m"),
    ("radio.latency.hop", "per-hop delay, s"),
    ("radio.latency.jitter", "upper bound of uniform per-hop jitter, s"),
    ("radio.latency.tunnel", "wormhole tunnel delay, s"),
    ("traffic.flows", "concurrent ground-station flows"),
    ("traffic.rate", "CBR rate per flow, packets/s"),
    ("traffic.packet_size", "bytes"),
    ("traffic.start", "first packet, s"),
    ("traffic.epoch", "forced rediscovery period, s"),
    ("traffic.buffer_capacity", "source queue bound while no route exists"),
    ("traffic.retry_backoff", "wait after a discovery that yields no route, s"),
    ("attack.malicious_ratio", "fraction of UAVs that misbehave, at most 0.30"),
    ("attack.gh_drop_prob", "gray-hole drop probability"),
    ("attack.wh_tunnel", "whether wormhole pairs tunnel traffic"),
    ("attack.wh_data_drop", "probability a wormhole drops data entering the tunnel"),
    ("attack.wh_ssi_boost", "wormhole endpoint transmit boost, dB"),
    ("attack.fid_ssi_boost", "FID transmit boost, dB"),
    ("attack.fid_pos_error", "displacement of falsified positions, m"),
    ("attack.fid_control_mod_rate", "fraction of relayed control messages falsified"),
    ("attack.fid_data_mod_rate", "fraction of forwarded data corrupted"),
    ("attack.mix.wh", "relative weight of wormholes"),
    ("attack.mix.bh", "relative weight of black holes"),
    ("attack.mix.gh", "relative weight of gray holes"),
    ("attack.mix.fid", "relative weight of FID nodes"),
    ("immune.radius", "detector radius in feature space"),
    ("immune.ni", "number of detectors to train"),
    ("immune.metric", "\"euclidean\", \"manhattan\" or \"hamming\""),
    ("immune.attempt_cap", "candidate draws before training gives up"),
    ("immune.training_horizon", "self samples are gathered until this time, s"),
    ("immune.antigen_capacity", "bound on stored antigens and self samples"),
    ("immune.memory_ttl", "lifetime of a remembered safe route, s"),
    ("immune.clonal.beta", "clone count multiplier"),
    ("immune.clonal.top_k", "detectors cloned per round"),
    ("immune.clonal.mutation_base", "mutation step of the best clone"),
    ("immune.clonal.mutation_decay", "mutation growth with rank"),
    ("security.t_s", "surveillance threshold on per-pair loss, 0..0.2"),
    ("security.ssi_delta", "margin over the runner-up that flags a transmitter, dB"),
    ("security.collection_window", "longest wait for route replies, s"),
    ("security.probe_spacing", "gap between the hellos of one route, s"),
    ("security.probe_timeout_factor", "hello timeout as a multiple of the reply round trip"),
    ("security.min_probe_timeout", "lower bound of the hello timeout, s"),
    ("security.audit_min_packets", "fewest data packets before a route is audited"),
    ("security.audit_settle", "wait after a route retires before auditing it, s"),
    ("security.evidence.min_drop_hits", "offending audits needed to blacklist"),
    ("security.evidence.drop_ratio", "share of audits that must offend"),
    ("security.evidence.min_ssi_flags", "signal-strength flags needed to blacklist"),
    ("security.evidence.ssi_flag_ratio", "share of observations that must be flagged"),
    ("security.evidence.suspect_ttl", "time a suspect stays listed, s"),
    ("security.evidence.gossip_delay", "delay before a blacklisting is known network-wide, s"),
    ("sweep.defense", "defenses to compare"),
    ("sweep.attack", "attack mixes: \"mixed\", \"bh\", \"gh\", \"wh\", \"fid\""),
    ("sweep.n_uavs", "swarm sizes"),
    ("sweep.sim_time", "horizons, s"),
    ("sweep.malicious_ratio", "malicious fractions"),
    ("sweep.t_s", "surveillance thresholds"),
];

/// The default scenario as TOML with every key commented.
pub fn reference_config() -> String {
    let body = ScenarioConfig::default().to_toml();
    let mut out = String::from(
        "# Scenario reference: every key with its default.\n# Empty sweep lists leave the base value unswept.\n\n",
    );
    let mut section = String::new();
    for line in body.lines() {
        let t = line.trim();
        if let Some(s) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = s.to_string();
        } else if let Some((key, _)) = t.split_once(" = ") {
            let path = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            if let Some((_, doc)) = KEY_DOCS.iter().find(|(k, _)| *k == path) {
                out.push_str(&format!("# {doc}\n"));
            }
            if path == "metric_interval" {
                out.push_str(line);
                out.push('\n');
                out.push_str("# ground station positions, m; four derived from the region when absent\n");
                out.push_str("# ground_stations = [[300.0, 600.0, 0.0], [1700.0, 600.0, 0.0]]\n");
                continue;
            }
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
pub(crate) fn undocumented_keys() -> Vec<String> {
    let body = ScenarioConfig::default().to_toml();
    let mut section = String::new();
    let mut missing = Vec::new();
    for line in body.lines() {
        let t = line.trim();
        if let Some(s) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = s.to_string();
        } else if let Some((key, _)) = t.split_once(" = ") {
            let path = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            if !KEY_DOCS.iter().any(|(k, _)| *k == path) {
                missing.push(path);
            }
        }
    }
    missing
}
