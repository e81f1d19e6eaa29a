//! Experiment sweeps over the cross product of strategies, team sizes,
//! failure settings, alphas, seeds and maps.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{parse_bool, parse_num, parse_pairs, value_err, ConfigError, MapSource, Settings, StrategyKind};
use crate::grid::OccupancyGrid;
use crate::sim;

/// One entry of the `strategies` list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyChoice {
    pub kind: StrategyKind,
    /// Period override for periodic relay.
    pub period: Option<u32>,
}

impl StrategyChoice {
    pub fn parse(s: &str) -> Option<Self> {
        let (name, period) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p.trim().parse().ok()?)),
            None => (s, None),
        };
        let kind = StrategyKind::parse(name.trim())?;
        if period.is_some() && kind != StrategyKind::Periodic {
            return None;
        }
        Some(StrategyChoice { kind, period })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Settings shared by every run; list keys override per cell.
    pub base: Settings,
    pub strategies: Vec<StrategyChoice>,
    pub n_robots: Vec<usize>,
    /// `None` runs without failures.
    pub weibull: Vec<Option<(f64, f64)>>,
    pub alphas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub maps: Vec<MapSource>,
    pub workers: usize,
    /// Wall time is left at zero unless set, so repeated sweeps write
    /// identical bytes.
    pub record_wall_time: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let base = Settings::default();
        SweepSpec {
            strategies: vec![StrategyChoice {
                kind: base.strategy,
                period: None,
            }],
            n_robots: vec![base.n_robots],
            weibull: vec![None],
            alphas: vec![base.alpha],
            seeds: vec![base.seed],
            maps: vec![base.map.clone()],
            base,
            workers: 0,
            record_wall_time: false,
        }
    }
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

// `a..b` (exclusive) or a single number
fn parse_range(key: &str, item: &str) -> Result<Vec<u64>, ConfigError> {
    match item.split_once("..") {
        Some((a, b)) => {
            let (a, b): (u64, u64) = (parse_num(key, a.trim())?, parse_num(key, b.trim())?);
            if b <= a {
                return Err(value_err(key, item, "empty range"));
            }
            Ok((a..b).collect())
        }
        None => Ok(vec![parse_num(key, item)?]),
    }
}

impl SweepSpec {
    /// Parses a sweep file: list keys take comma-separated values, every
    /// other key is a run setting.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut spec = SweepSpec::default();
        let mut lists: BTreeMap<String, String> = BTreeMap::new();
        let mut rest = Vec::new();
        for (k, v) in parse_pairs(text)? {
            match k.as_str() {
                "strategies" | "n_robots" | "weibull" | "alphas" | "seeds" | "maps" => {
                    lists.insert(k, v);
                }
                "workers" => spec.workers = parse_num(&k, &v)?,
                "record_wall_time" => spec.record_wall_time = parse_bool(&k, &v)?,
                _ => rest.push((k, v)),
            }
        }
        spec.base.apply_all(rest)?;
        let base = &spec.base;
        spec.strategies = vec![StrategyChoice {
            kind: base.strategy,
            period: None,
        }];
        spec.n_robots = vec![base.n_robots];
        spec.weibull = vec![base
            .failures_enabled
            .then_some((base.weibull_lambda, base.weibull_k))];
        spec.alphas = vec![base.alpha];
        spec.seeds = vec![base.seed];
        spec.maps = vec![base.map.clone()];

        for (k, v) in &lists {
            let bad = |item: &str, why: &str| value_err(k, item, why);
            match k.as_str() {
                "strategies" => {
                    spec.strategies = list(v)
                        .map(|s| StrategyChoice::parse(s).ok_or_else(|| bad(s, "unknown strategy")))
                        .collect::<Result<_, _>>()?
                }
                "n_robots" => {
                    spec.n_robots = list(v).map(|s| parse_num(k, s)).collect::<Result<_, _>>()?
                }
                "alphas" => {
                    spec.alphas = list(v).map(|s| parse_num(k, s)).collect::<Result<_, _>>()?
                }
                "weibull" => {
                    spec.weibull = list(v)
                        .map(|s| {
                            if s.eq_ignore_ascii_case("none") {
                                return Ok(None);
                            }
                            let (l, kk) = s.split_once(':').ok_or_else(|| bad(s, "expected none or lambda:k"))?;
                            Ok(Some((parse_num(k, l)?, parse_num(k, kk)?)))
                        })
                        .collect::<Result<_, ConfigError>>()?
                }
                "seeds" => {
                    let mut seeds = Vec::new();
                    for item in list(v) {
                        seeds.extend(parse_range(k, item)?);
                    }
                    spec.seeds = seeds;
                }
                "maps" => {
                    let (w, h) = match spec.base.map {
                        MapSource::Generated { width, height, .. } => (width, height),
                        MapSource::File(_) => (60, 40),
                    };
                    let mut maps = Vec::new();
                    for item in list(v) {
                        match item.strip_prefix("gen:") {
                            Some(r) => maps.extend(parse_range(k, r)?.into_iter().map(|seed| {
                                MapSource::Generated {
                                    seed,
                                    width: w,
                                    height: h,
                                }
                            })),
                            None => maps.push(MapSource::File(PathBuf::from(item))),
                        }
                    }
                    spec.maps = maps;
                }
                _ => unreachable!(),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let empty = [
            ("strategies", self.strategies.is_empty()),
            ("n_robots", self.n_robots.is_empty()),
            ("weibull", self.weibull.is_empty()),
            ("alphas", self.alphas.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("maps", self.maps.is_empty()),
        ];
        match empty.iter().find(|(_, e)| *e) {
            Some((k, _)) => Err(ConfigError::Invalid(format!("sweep list `{k}` is empty"))),
            None => Ok(()),
        }
    }

    /// Settings of every run, in output order. Strategies without an alpha
    /// run once rather than once per alpha.
    pub fn cells(&self) -> Vec<Settings> {
        let mut out = Vec::new();
        for s in &self.strategies {
            let alphas: &[f64] = if s.kind.uses_alpha() {
                &self.alphas
            } else {
                &self.alphas[..1]
            };
            for &n in &self.n_robots {
                for w in &self.weibull {
                    for &alpha in alphas {
                        for map in &self.maps {
                            for &seed in &self.seeds {
                                let mut c = self.base.clone();
                                c.strategy = s.kind;
                                if let Some(p) = s.period {
                                    c.period = p;
                                }
                                c.n_robots = n;
                                c.alpha = alpha;
                                c.failures_enabled = w.is_some();
                                if let Some((l, k)) = *w {
                                    c.weibull_lambda = l;
                                    c.weibull_k = k;
                                }
                                c.map = map.clone();
                                c.seed = seed;
                                out.push(c);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: usize,
    pub strategy: String,
    pub n: usize,
    pub lambda: Option<f64>,
    pub k: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub map_id: String,
    pub coverage_ratio: f64,
    pub relay_count: usize,
    pub handoff_count: usize,
    pub failure_count: usize,
    pub wall_time_ms: u64,
    pub error: Option<String>,
}

/// Label of a strategy in result tables, e.g. `periodic:100`.
pub fn strategy_label(s: &Settings) -> String {
    match s.strategy {
        StrategyKind::Periodic => format!("periodic:{}", s.period),
        k => k.name().to_string(),
    }
}

fn blank_row(run_id: usize, s: &Settings) -> ResultRow {
    ResultRow {
        run_id,
        strategy: strategy_label(s),
        n: s.n_robots,
        lambda: s.failures_enabled.then_some(s.weibull_lambda),
        k: s.failures_enabled.then_some(s.weibull_k),
        alpha: s.strategy.uses_alpha().then_some(s.alpha),
        seed: s.seed,
        map_id: s.map.id(),
        coverage_ratio: 0.0,
        relay_count: 0,
        handoff_count: 0,
        failure_count: 0,
        wall_time_ms: 0,
        error: None,
    }
}

/// Runs one cell against an already loaded world. Failures become an error
/// row.
pub fn run_cell(
    run_id: usize,
    s: &Settings,
    world: &OccupancyGrid,
    record_wall_time: bool,
) -> ResultRow {
    let mut row = blank_row(run_id, s);
    let started = Instant::now();
    let outcome = s
        .mission_config(world.resolution())
        .map_err(|e| e.to_string())
        .and_then(|cfg| sim::run(&cfg, world, s.seed).map_err(|e| e.to_string()));
    match outcome {
        Ok(r) => {
            row.coverage_ratio = r.coverage_ratio;
            row.relay_count = r.relay_count;
            row.handoff_count = r.handoff_count;
            row.failure_count = r.failure_count;
        }
        Err(e) => row.error = Some(e),
    }
    if record_wall_time {
        row.wall_time_ms = started.elapsed().as_millis() as u64;
    }
    row
}

/// Executes every cell of `spec`. Rows come back in cell order whatever the
/// scheduling; individual failures are recorded, not fatal.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>, ConfigError> {
    spec.validate()?;
    let cells = spec.cells();
    let mut worlds: Vec<(MapSource, Result<OccupancyGrid, String>)> = Vec::new();
    for m in &spec.maps {
        if !worlds.iter().any(|(k, _)| k == m) {
            let probe = Settings {
                map: m.clone(),
                ..spec.base.clone()
            };
            worlds.push((m.clone(), probe.load_world().map_err(|e| e.to_string())));
        }
    }
    let world_of = |m: &MapSource| &worlds.iter().find(|(k, _)| k == m).expect("loaded").1;
    log::info!("sweep: {} runs", cells.len());
    let job = |(i, c): (usize, &Settings)| match world_of(&c.map) {
        Ok(w) => run_cell(i, c, w, spec.record_wall_time),
        Err(e) => ResultRow {
            error: Some(e.clone()),
            ..blank_row(i, c)
        },
    };
    let rows = if spec.workers == 1 {
        cells.iter().enumerate().map(job).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        pool.install(|| cells.par_iter().enumerate().map(job).collect())
    };
    Ok(rows)
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ResultRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect()
}
