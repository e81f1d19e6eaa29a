//! Flat `key = value` configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Later assignments
//! override earlier ones, so command-line overrides can simply be appended.
//! The distance keys `sensor_range`, `comm_range`, `eps_traj` and
//! `eps_plan` are in meters and converted with the map resolution; all
//! other lengths are in cells and times in ticks.

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

use super::floorplan::{generate_map, FloorplanError, RoomParams};
use crate::failure::WeibullParams;
use crate::grid::{GridError, OccupancyGrid, Pose};
use crate::policy::{PenaltyParams, RelayStrategy};
use crate::prediction::PredictorKind;
use crate::sim::MissionConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {value:?} ({reason})")]
    Value {
        key: String,
        value: String,
        reason: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("map {path}: {source}")]
    Map { path: PathBuf, source: GridError },
    #[error(transparent)]
    Floorplan(#[from] FloorplanError),
    #[error("{0}")]
    Invalid(String),
}

/// Parses `key = value` lines into ordered pairs.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: n + 1,
                text: raw.to_string(),
            });
        };
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax {
                line: n + 1,
                text: raw.to_string(),
            });
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub(crate) fn value_err(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

pub(crate) fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| value_err(key, value, e.to_string()))
}

pub(crate) fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(value_err(key, value, "expected true/false")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Proid,
    ProidSafe,
    Periodic,
    FinalOnly,
}

impl StrategyKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "proid" => Some(StrategyKind::Proid),
            "proid_safe" => Some(StrategyKind::ProidSafe),
            "periodic" => Some(StrategyKind::Periodic),
            "final_only" | "finalonly" => Some(StrategyKind::FinalOnly),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Proid => "proid",
            StrategyKind::ProidSafe => "proid_safe",
            StrategyKind::Periodic => "periodic",
            StrategyKind::FinalOnly => "final_only",
        }
    }

    pub fn uses_alpha(self) -> bool {
        matches!(self, StrategyKind::Proid | StrategyKind::ProidSafe)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapSource {
    File(PathBuf),
    Generated { seed: u64, width: usize, height: usize },
}

impl MapSource {
    /// Short identifier used in result tables.
    pub fn id(&self) -> String {
        match self {
            MapSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            MapSource::Generated { seed, width, height } => format!("gen{seed}_{width}x{height}"),
        }
    }
}

/// Every run parameter, in file units.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub map: MapSource,
    pub rooms: RoomParams,
    pub seed: u64,
    pub n_robots: usize,
    pub horizon: u32,
    pub speed: u32,
    pub sensor_range: f64,
    pub n_rays: usize,
    pub comm_range: f64,
    pub strategy: StrategyKind,
    pub alpha: f64,
    pub period: u32,
    pub final_margin: u32,
    pub predictor: String,
    pub reveal_radius: u32,
    pub flip_fraction: f64,
    pub ensemble_size: usize,
    pub vote_threshold: f64,
    pub path_sample_interval: usize,
    pub min_frontier_region: usize,
    pub eps_traj: f64,
    pub eps_plan: f64,
    pub penalty: f64,
    pub handoff: bool,
    pub sharing: bool,
    pub failures_enabled: bool,
    pub weibull_lambda: f64,
    pub weibull_k: f64,
    pub start: Option<Pose>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            map: MapSource::Generated {
                seed: 0,
                width: 60,
                height: 40,
            },
            rooms: RoomParams::default(),
            seed: 0,
            n_robots: 3,
            horizon: 1000,
            speed: 1,
            sensor_range: 20.0,
            n_rays: crate::grid::DEFAULT_RAYS,
            comm_range: 10.0,
            strategy: StrategyKind::Proid,
            alpha: 2.0,
            period: 100,
            final_margin: 2,
            predictor: "oracle".into(),
            reveal_radius: 8,
            flip_fraction: crate::prediction::ORACLE_FLIP_FRACTION,
            ensemble_size: 3,
            vote_threshold: 0.5,
            path_sample_interval: 3,
            min_frontier_region: 1,
            eps_traj: 5.0,
            eps_plan: 10.0,
            penalty: 1e6,
            handoff: true,
            sharing: true,
            failures_enabled: false,
            weibull_lambda: 1100.0,
            weibull_k: 1.5,
            start: None,
        }
    }
}

/// Recognized keys with a one-line description, for help text.
pub const KEYS: &[(&str, &str)] = &[
    ("map", "path to a map file; overrides the generator"),
    ("gen_seed", "floorplan generator seed"),
    ("map_width", "generated map width (cells)"),
    ("map_height", "generated map height (cells)"),
    ("resolution", "generated map resolution (meters per cell)"),
    ("room_min", "smallest generated room side (cells)"),
    ("room_max", "generated rooms with a longer side are always split (cells)"),
    ("door_min", "narrowest generated door (cells)"),
    ("door_max", "widest generated door (cells)"),
    ("corridor_width", "generated corridor width (cells)"),
    ("corridor_levels", "subdivision levels whose cuts become corridors"),
    ("rooms_lo", "fewest generated rooms preferred"),
    ("rooms_hi", "most generated rooms preferred"),
    ("seed", "mission seed: start cell, lifetimes, predictor draws"),
    ("n_robots", "team size"),
    ("horizon", "mission length (ticks)"),
    ("speed", "cells moved per tick"),
    ("sensor_range", "raycast range (meters)"),
    ("n_rays", "rays per scan"),
    ("comm_range", "communication range (meters)"),
    ("strategy", "proid | proid_safe | periodic | final_only"),
    ("alpha", "exploration bias of the relay criterion (>= 1)"),
    ("period", "periodic relay interval (ticks)"),
    ("final_margin", "slack added to the final return trigger (ticks)"),
    ("predictor", "null | oracle | heuristic"),
    ("reveal_radius", "oracle reveal radius around known cells (cells)"),
    ("flip_fraction", "fraction of revealed oracle labels flipped per member"),
    ("ensemble_size", "predicted maps per ensemble"),
    ("vote_threshold", "fraction of members that must see a cell"),
    ("path_sample_interval", "poses between raycast samples along a path"),
    ("min_frontier_region", "smallest frontier cluster kept (cells)"),
    ("eps_traj", "penalty radius around shared trajectories (meters)"),
    ("eps_plan", "penalty radius around shared plans (meters)"),
    ("penalty", "score penalty for committed frontiers"),
    ("handoff", "enable relay handoff (true/false)"),
    ("sharing", "enable trajectory and plan sharing (true/false)"),
    ("failures_enabled", "sample robot lifetimes (true/false)"),
    ("weibull_lambda", "lifetime scale (ticks)"),
    ("weibull_k", "lifetime shape"),
    ("start_x", "start and base cell column; sampled when absent"),
    ("start_y", "start and base cell row"),
];

impl Settings {
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut s = Settings::default();
        s.apply_all(parse_pairs(text)?)?;
        Ok(s)
    }

    pub fn apply_all(
        &mut self,
        pairs: impl IntoIterator<Item = (String, String)>,
    ) -> Result<(), ConfigError> {
        let mut start: BTreeMap<&'static str, i32> = BTreeMap::new();
        for (k, v) in pairs {
            match k.as_str() {
                "start_x" => {
                    start.insert("x", parse_num(&k, &v)?);
                }
                "start_y" => {
                    start.insert("y", parse_num(&k, &v)?);
                }
                _ => self.apply(&k, &v)?,
            }
        }
        match (start.get("x"), start.get("y")) {
            (Some(&x), Some(&y)) => self.start = Some(Pose::new(x, y)),
            (None, None) => {}
            _ => return Err(ConfigError::Invalid("start_x and start_y go together".into())),
        }
        Ok(())
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value;
        let gen = |m: &MapSource| match *m {
            MapSource::Generated { seed, width, height } => (seed, width, height),
            MapSource::File(_) => (0, 60, 40),
        };
        match key {
            "map" => self.map = MapSource::File(PathBuf::from(v)),
            "gen_seed" => {
                let (_, w, h) = gen(&self.map);
                self.map = MapSource::Generated {
                    seed: parse_num(key, v)?,
                    width: w,
                    height: h,
                }
            }
            "map_width" | "map_height" => {
                let (seed, mut w, mut h) = gen(&self.map);
                let n = parse_num(key, v)?;
                if key == "map_width" {
                    w = n
                } else {
                    h = n
                }
                if let MapSource::Generated { .. } = self.map {
                    self.map = MapSource::Generated { seed, width: w, height: h };
                } else {
                    return Err(value_err(key, v, "only applies to generated maps"));
                }
            }
            "resolution" => self.rooms.resolution = parse_num(key, v)?,
            "room_min" => self.rooms.min_room = parse_num(key, v)?,
            "room_max" => self.rooms.max_room = parse_num(key, v)?,
            "door_min" => self.rooms.door_min = parse_num(key, v)?,
            "door_max" => self.rooms.door_max = parse_num(key, v)?,
            "corridor_width" => self.rooms.corridor_width = parse_num(key, v)?,
            "corridor_levels" => self.rooms.corridor_levels = parse_num(key, v)?,
            "rooms_lo" => self.rooms.rooms_lo = parse_num(key, v)?,
            "rooms_hi" => self.rooms.rooms_hi = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "n_robots" => self.n_robots = parse_num(key, v)?,
            "horizon" => self.horizon = parse_num(key, v)?,
            "speed" => self.speed = parse_num(key, v)?,
            "sensor_range" => self.sensor_range = parse_num(key, v)?,
            "n_rays" => self.n_rays = parse_num(key, v)?,
            "comm_range" => self.comm_range = parse_num(key, v)?,
            "strategy" => {
                self.strategy = StrategyKind::parse(v)
                    .ok_or_else(|| value_err(key, v, "unknown strategy"))?
            }
            "alpha" => self.alpha = parse_num(key, v)?,
            "period" => self.period = parse_num(key, v)?,
            "final_margin" => self.final_margin = parse_num(key, v)?,
            "predictor" => {
                let p = v.to_ascii_lowercase();
                if !matches!(p.as_str(), "null" | "oracle" | "heuristic") {
                    return Err(value_err(key, v, "expected null, oracle or heuristic"));
                }
                self.predictor = p;
            }
            "reveal_radius" => self.reveal_radius = parse_num(key, v)?,
            "flip_fraction" => self.flip_fraction = parse_num(key, v)?,
            "ensemble_size" => self.ensemble_size = parse_num(key, v)?,
            "vote_threshold" => self.vote_threshold = parse_num(key, v)?,
            "path_sample_interval" => self.path_sample_interval = parse_num(key, v)?,
            "min_frontier_region" => self.min_frontier_region = parse_num(key, v)?,
            "eps_traj" => self.eps_traj = parse_num(key, v)?,
            "eps_plan" => self.eps_plan = parse_num(key, v)?,
            "penalty" => self.penalty = parse_num(key, v)?,
            "handoff" => self.handoff = parse_bool(key, v)?,
            "sharing" => self.sharing = parse_bool(key, v)?,
            "failures_enabled" => self.failures_enabled = parse_bool(key, v)?,
            "weibull_lambda" => self.weibull_lambda = parse_num(key, v)?,
            "weibull_k" => self.weibull_k = parse_num(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn weibull(&self) -> Result<WeibullParams, ConfigError> {
        WeibullParams::new(self.weibull_lambda, self.weibull_k)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn relay_strategy(&self) -> Result<RelayStrategy, ConfigError> {
        Ok(match self.strategy {
            StrategyKind::Proid => RelayStrategy::Proid { alpha: self.alpha },
            StrategyKind::ProidSafe => RelayStrategy::ProidSafe {
                alpha: self.alpha,
                weibull: self.weibull()?,
            },
            StrategyKind::Periodic => RelayStrategy::Periodic {
                period: self.period,
            },
            StrategyKind::FinalOnly => RelayStrategy::FinalOnly,
        })
    }

    pub fn predictor_kind(&self) -> Result<PredictorKind, ConfigError> {
        if !(0.0..=1.0).contains(&self.flip_fraction) {
            return Err(value_err(
                "flip_fraction",
                &self.flip_fraction.to_string(),
                "must lie in [0, 1]",
            ));
        }
        Ok(match self.predictor.as_str() {
            "null" => PredictorKind::Null,
            "heuristic" => PredictorKind::Heuristic,
            _ => PredictorKind::Oracle {
                reveal_radius: self.reveal_radius,
                flip_fraction: self.flip_fraction,
            },
        })
    }

    /// Loads or generates the ground-truth map.
    pub fn load_world(&self) -> Result<OccupancyGrid, ConfigError> {
        match &self.map {
            MapSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                OccupancyGrid::parse(&text).map_err(|source| ConfigError::Map {
                    path: path.clone(),
                    source,
                })
            }
            MapSource::Generated { seed, width, height } => {
                Ok(generate_map(*seed, *width, *height, &self.rooms)?)
            }
        }
    }

    /// Mission parameters in cells for a map of the given resolution.
    pub fn mission_config(&self, resolution: f64) -> Result<MissionConfig, ConfigError> {
        let cells = |m: f64| m / resolution;
        Ok(MissionConfig {
            n_robots: self.n_robots,
            horizon: self.horizon,
            speed: self.speed,
            sensor_range: cells(self.sensor_range),
            n_rays: self.n_rays,
            comm_range: cells(self.comm_range),
            strategy: self.relay_strategy()?,
            predictor: self.predictor_kind()?,
            ensemble_size: self.ensemble_size,
            vote_threshold: self.vote_threshold,
            path_sample_interval: self.path_sample_interval,
            min_frontier_region: self.min_frontier_region,
            penalty: PenaltyParams {
                eps_traj: cells(self.eps_traj),
                eps_plan: cells(self.eps_plan),
                gamma: self.penalty,
            },
            final_margin: self.final_margin,
            handoff: self.handoff,
            sharing: self.sharing,
            failures: if self.failures_enabled {
                Some(self.weibull()?)
            } else {
                None
            },
            failure_schedule: None,
            start: self.start,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let s = Settings::from_text(
            "# comment\nstrategy = periodic\nperiod = 200\n\nn_robots=4\nperiod = 300\nhandoff = off\n",
        )
        .unwrap();
        assert_eq!(s.strategy, StrategyKind::Periodic);
        assert_eq!(s.period, 300);
        assert_eq!(s.n_robots, 4);
        assert!(!s.handoff);
        assert_eq!(
            s.relay_strategy().unwrap(),
            RelayStrategy::Periodic { period: 300 }
        );
    }

    #[test]
    fn errors_name_the_problem() {
        assert!(matches!(
            Settings::from_text("bogus = 1"),
            Err(ConfigError::UnknownKey(k)) if k == "bogus"
        ));
        assert!(matches!(
            Settings::from_text("alpha 2"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            Settings::from_text("n_robots = three"),
            Err(ConfigError::Value { .. })
        ));
        assert!(Settings::from_text("start_x = 3").is_err());
    }

    #[test]
    fn meters_convert_with_resolution() {
        let s = Settings::default();
        let c = s.mission_config(0.5).unwrap();
        assert_eq!(c.comm_range, 20.0);
        assert_eq!(c.sensor_range, 40.0);
        assert_eq!(c.penalty.eps_plan, 20.0);
        let c = s.mission_config(1.0).unwrap();
        assert_eq!(c.comm_range, 10.0);
        assert!(c.failures.is_none());
    }

    #[test]
    fn every_key_is_accepted() {
        for (k, _) in KEYS {
            let v = match *k {
                "map" => "x.map",
                "strategy" => "final_only",
                "predictor" => "heuristic",
                "handoff" | "sharing" | "failures_enabled" => "true",
                "resolution" | "alpha" | "flip_fraction" | "vote_threshold" => "0.5",
                _ => "7",
            };
            let mut s = Settings::default();
            if *k == "map_width" || *k == "map_height" {
                s.apply(k, v).unwrap();
                continue;
            }
            s.apply_all([(k.to_string(), v.to_string()), ("start_x".into(), "1".into()), ("start_y".into(), "1".into())])
                .unwrap_or_else(|e| panic!("{k}: {e}"));
        }
    }
}
