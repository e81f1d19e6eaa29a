//! `relaysim` command-line front end.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relaysim::grid::{CellState, OccupancyGrid, Pose};
use relaysim::harness::{
    aggregate, aggregate_to_csv, format_table, generate_map, rows_to_csv, run_sweep, strategy_label,
    ConfigError, ResultRow, Settings, SweepSpec,
};
use relaysim::policy::RobotMode;
use relaysim::sim::{self, parse_jsonl, Event, SimError};

#[derive(Parser)]
#[command(name = "relaysim", version, about = "Multi-robot exploration and relay simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single mission.
    Run(RunArgs),
    /// Run a parameter sweep from a spec file.
    Sweep(SweepArgs),
    /// Write a generated floorplan in the map file format.
    Genmap(GenmapArgs),
    /// Turn an event log into per-tick text and SVG frames.
    Render(RenderArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "gen_seed")]
    map: Option<PathBuf>,
    #[arg(long)]
    gen_seed: Option<u64>,
    /// proid, proid_safe, periodic or final_only.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    period: Option<u32>,
    /// Weibull scale; setting it enables failures.
    #[arg(long)]
    lambda: Option<f64>,
    /// Weibull shape; setting it enables failures.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Mission horizon in ticks.
    #[arg(long)]
    ticks: Option<u32>,
    /// Directory for result.csv, coverage.csv and base_map.txt.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Event log destination (JSON lines).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Extra `key=value` settings, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GenmapArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 60)]
    width: usize,
    #[arg(long, default_value_t = 40)]
    height: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    log: PathBuf,
    /// Emit a frame every K ticks.
    #[arg(long, default_value_t = 1)]
    every: u32,
    #[arg(long)]
    out_dir: PathBuf,
    /// World map drawn underneath the robots.
    #[arg(long)]
    map: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Sim(_) => 2,
            _ => 1,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run_settings(a: &RunArgs) -> Result<Settings, CliError> {
    let mut s = match &a.config {
        Some(p) => Settings::from_text(&read(p)?)?,
        None => Settings::default(),
    };
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| pairs.push((k.to_string(), v));
    if let Some(m) = &a.map {
        put("map", m.display().to_string());
    }
    if let Some(g) = a.gen_seed {
        put("gen_seed", g.to_string());
    }
    if let Some(v) = &a.strategy {
        put("strategy", v.clone());
    }
    if let Some(v) = a.n {
        put("n_robots", v.to_string());
    }
    if let Some(v) = a.alpha {
        put("alpha", v.to_string());
    }
    if let Some(v) = a.period {
        put("period", v.to_string());
    }
    if let Some(v) = a.lambda {
        put("weibull_lambda", v.to_string());
        put("failures_enabled", "true".into());
    }
    if let Some(v) = a.k {
        put("weibull_k", v.to_string());
        put("failures_enabled", "true".into());
    }
    if let Some(v) = a.seed {
        put("seed", v.to_string());
    }
    if let Some(v) = a.ticks {
        put("horizon", v.to_string());
    }
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        put(k.trim(), v.trim().to_string());
    }
    s.apply_all(pairs)?;
    Ok(s)
}

fn cmd_run(a: RunArgs) -> Result<(), CliError> {
    let s = run_settings(&a)?;
    let world = s.load_world()?;
    let cfg = s.mission_config(world.resolution())?;
    let r = sim::run(&cfg, &world, s.seed)?;
    println!(
        "coverage {:.4}  relays {}  handoffs {}  failures {}  ticks {}",
        r.coverage_ratio, r.relay_count, r.handoff_count, r.failure_count, r.ticks_run
    );
    if let Some(p) = &a.log {
        write(p, &r.event_log())?;
    }
    if let Some(dir) = &a.out {
        let row = ResultRow {
            run_id: 0,
            strategy: strategy_label(&s),
            n: s.n_robots,
            lambda: s.failures_enabled.then_some(s.weibull_lambda),
            k: s.failures_enabled.then_some(s.weibull_k),
            alpha: s.strategy.uses_alpha().then_some(s.alpha),
            seed: s.seed,
            map_id: s.map.id(),
            coverage_ratio: r.coverage_ratio,
            relay_count: r.relay_count,
            handoff_count: r.handoff_count,
            failure_count: r.failure_count,
            wall_time_ms: 0,
            error: None,
        };
        write(&dir.join("result.csv"), &rows_to_csv(&[row]))?;
        write(&dir.join("coverage.csv"), &r.coverage_csv())?;
        write(&dir.join("base_map.txt"), &r.base_map.to_map_text())?;
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<(), CliError> {
    let mut spec = SweepSpec::from_text(&read(&a.spec)?)?;
    if let Some(w) = a.workers {
        spec.workers = w;
    }
    let rows = run_sweep(&spec)?;
    let aggs = aggregate(&rows);
    write(&a.out_dir.join("results.csv"), &rows_to_csv(&rows))?;
    write(&a.out_dir.join("summary.csv"), &aggregate_to_csv(&aggs))?;
    let table = format_table(&aggs);
    write(&a.out_dir.join("summary.txt"), &table)?;
    print!("{table}");
    let errors = rows.iter().filter(|r| r.error.is_some()).count();
    if errors > 0 {
        eprintln!("{errors} of {} runs failed; see the error column", rows.len());
    }
    Ok(())
}

fn cmd_genmap(a: GenmapArgs) -> Result<(), CliError> {
    let grid = generate_map(a.seed, a.width, a.height, &Default::default())
        .map_err(ConfigError::from)?;
    match &a.out {
        Some(p) => write(p, &grid.to_map_text()),
        None => {
            print!("{}", grid.to_map_text());
            Ok(())
        }
    }
}

#[derive(Clone, Copy)]
struct Marker {
    pos: Pose,
    mode: RobotMode,
    alive: bool,
}

fn cmd_render(a: RenderArgs) -> Result<(), CliError> {
    if a.every == 0 {
        return Err(CliError::Usage("--every must be at least 1".into()));
    }
    let events = parse_jsonl(&read(&a.log)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", a.log.display())))?;
    let world = match &a.map {
        Some(p) => Some(OccupancyGrid::parse(&read(p)?).map_err(|source| ConfigError::Map {
            path: p.clone(),
            source,
        })?),
        None => None,
    };

    // robot poses as seen at the start of each tick
    let mut frames: BTreeMap<u32, BTreeMap<usize, Marker>> = BTreeMap::new();
    let mut base_known: BTreeMap<u32, usize> = BTreeMap::new();
    let mut current: BTreeMap<usize, Marker> = BTreeMap::new();
    let mut base: Option<Pose> = None;
    for e in &events {
        match e {
            Event::ObserveSummary { tick, robot, pos, mode, .. } => {
                base.get_or_insert(*pos);
                current.insert(*robot, Marker { pos: *pos, mode: *mode, alive: true });
                frames.insert(*tick, current.clone());
            }
            Event::Failure { tick, robot, pos, .. } => {
                let m = current.entry(*robot).or_insert(Marker {
                    pos: *pos,
                    mode: RobotMode::Explore,
                    alive: false,
                });
                m.alive = false;
                frames.insert(*tick, current.clone());
            }
            Event::Report { tick, base_known: k, .. } => {
                base_known.insert(*tick, *k);
            }
            _ => {}
        }
    }
    let Some(base) = base else {
        return Err(CliError::Usage("event log has no robot positions".into()));
    };
    let (w, h) = match &world {
        Some(g) => (g.width(), g.height()),
        None => {
            let all = frames.values().flat_map(|f| f.values().map(|m| m.pos));
            let (mx, my) = all.fold((0, 0), |(x, y), p| (x.max(p.x), y.max(p.y)));
            (mx as usize + 1, my as usize + 1)
        }
    };

    let mut known = 0;
    let mut count = 0;
    for (&tick, robots) in &frames {
        if let Some((_, k)) = base_known.range(..=tick).next_back() {
            known = *k;
        }
        if tick % a.every != 0 {
            continue;
        }
        let stem = a.out_dir.join(format!("frame_{tick:06}"));
        write(&stem.with_extension("txt"), &text_frame(world.as_ref(), w, h, base, robots, tick, known))?;
        write(&stem.with_extension("svg"), &svg_frame(world.as_ref(), w, h, base, robots, tick, known))?;
        count += 1;
    }
    println!("{count} frames written to {}", a.out_dir.display());
    Ok(())
}

fn robot_glyph(id: usize, m: &Marker) -> char {
    if !m.alive {
        return 'x';
    }
    let c = char::from_digit((id % 36) as u32, 36).unwrap_or('?');
    match m.mode {
        RobotMode::Explore => c,
        RobotMode::Relay => c.to_ascii_uppercase(),
    }
}

fn text_frame(
    world: Option<&OccupancyGrid>,
    w: usize,
    h: usize,
    base: Pose,
    robots: &BTreeMap<usize, Marker>,
    tick: u32,
    known: usize,
) -> String {
    let mut rows: Vec<Vec<char>> = (0..h)
        .map(|y| {
            (0..w)
                .map(|x| match world.map(|g| g.get(Pose::new(x as i32, y as i32))) {
                    Some(Some(CellState::Occupied)) => '#',
                    Some(_) => '.',
                    None => ' ',
                })
                .collect()
        })
        .collect();
    let mut put = |p: Pose, c: char| {
        if let Some(cell) = rows.get_mut(p.y as usize).and_then(|r| r.get_mut(p.x as usize)) {
            *cell = c;
        }
    };
    put(base, 'B');
    for (id, m) in robots {
        put(m.pos, robot_glyph(*id, m));
    }
    let mut out = format!("tick {tick} base_known {known}\n");
    for r in rows {
        out.extend(r);
        out.push('\n');
    }
    out
}

fn svg_frame(
    world: Option<&OccupancyGrid>,
    w: usize,
    h: usize,
    base: Pose,
    robots: &BTreeMap<usize, Marker>,
    tick: u32,
    known: usize,
) -> String {
    const S: usize = 10;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        w * S,
        h * S + 20,
        w * S,
        h * S + 20
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(g) = world {
        for y in 0..h {
            for x in 0..w {
                if g.get(Pose::new(x as i32, y as i32)) == Some(CellState::Occupied) {
                    let _ = writeln!(
                        out,
                        r#"<rect x="{}" y="{}" width="{S}" height="{S}" fill="dimgray"/>"#,
                        x * S,
                        y * S
                    );
                }
            }
        }
    }
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{S}" height="{S}" fill="none" stroke="green" stroke-width="2"/>"#,
        base.x as usize * S,
        base.y as usize * S
    );
    for (id, m) in robots {
        let fill = match (m.alive, m.mode) {
            (false, _) => "gray",
            (true, RobotMode::Explore) => "royalblue",
            (true, RobotMode::Relay) => "orangered",
        };
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}"><title>robot {id}</title></circle>"#,
            m.pos.x as usize * S + S / 2,
            m.pos.y as usize * S + S / 2,
            S / 2 - 1
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="4" y="{}" font-family="monospace" font-size="14">tick {tick} base_known {known}</text>"#,
        h * S + 16
    );
    out.push_str("</svg>\n");
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Genmap(a) => cmd_genmap(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
