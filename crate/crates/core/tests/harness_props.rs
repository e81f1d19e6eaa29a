//! Generator, sweep and report behaviour seen from outside the crate.

use std::collections::VecDeque;

use relaysim::grid::{CellSet, CellState, OccupancyGrid};
use relaysim::harness::{
    aggregate, generate_floorplan, rows_from_csv, rows_to_csv, run_sweep, RoomParams, Settings,
    SweepSpec,
};
use relaysim::sim::{self, Mission};

fn all_free_connected(g: &OccupancyGrid) -> bool {
    let free = g.free_poses();
    let Some(&start) = free.first() else { return false };
    let mut seen = CellSet::for_grid(g);
    seen.insert(start);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        for q in p.neighbors4() {
            if g.get(q) == Some(CellState::Free) && seen.insert(q) {
                queue.push_back(q);
            }
        }
    }
    seen.len() == free.len()
}

#[test]
fn default_floorplans_over_many_seeds() {
    let p = RoomParams::default();
    let mut room_counts = std::collections::BTreeMap::new();
    for seed in 0..100 {
        let f = generate_floorplan(seed, 60, 40, &p).unwrap();
        assert!((6..=12).contains(&f.rooms), "seed {seed}: {} rooms", f.rooms);
        assert!(!f.door_widths.is_empty());
        assert!(f.door_widths.iter().all(|w| (1..=2).contains(w)), "seed {seed}: {:?}", f.door_widths);
        assert!(all_free_connected(&f.grid), "seed {seed} disconnected");
        assert_eq!(OccupancyGrid::parse(&f.grid.to_map_text()).unwrap(), f.grid);
        *room_counts.entry(f.rooms).or_insert(0) += 1;
    }
    // not one fixed layout in disguise
    assert!(room_counts.len() > 2, "{room_counts:?}");
}

fn small_spec(extra: &str) -> SweepSpec {
    let text = format!(
        "map_width = 40\nmap_height = 30\nhorizon = 200\nworkers = 1\n\
         strategies = proid, final_only, periodic:50\nseeds = 0..2\nmaps = gen:0..2\n{extra}"
    );
    SweepSpec::from_text(&text).unwrap()
}

#[test]
fn single_cell_sweep_equals_direct_run() {
    let spec = SweepSpec::from_text(
        "map_width = 40\nmap_height = 30\nhorizon = 200\nstrategies = proid\nseeds = 3\nmaps = gen:7\n",
    )
    .unwrap();
    let rows = run_sweep(&spec).unwrap();
    assert_eq!(rows.len(), 1);

    let mut s = Settings::default();
    for (k, v) in [("map_width", "40"), ("map_height", "30"), ("horizon", "200"), ("gen_seed", "7"), ("seed", "3")] {
        s.apply(k, v).unwrap();
    }
    let world = s.load_world().unwrap();
    let direct = sim::run(&s.mission_config(world.resolution()).unwrap(), &world, 3).unwrap();
    assert_eq!(rows[0].coverage_ratio, direct.coverage_ratio);
    assert_eq!(rows[0].relay_count, direct.relay_count);
    assert_eq!(rows[0].handoff_count, direct.handoff_count);
    assert!(rows[0].error.is_none());
}

#[test]
fn sweeps_are_reproducible_and_independent_of_workers() {
    let one = run_sweep(&small_spec("")).unwrap();
    assert_eq!(one.len(), 3 * 2 * 2);
    let again = rows_to_csv(&run_sweep(&small_spec("")).unwrap());
    assert_eq!(rows_to_csv(&one), again);
    let mut par = small_spec("");
    par.workers = 3;
    assert_eq!(rows_to_csv(&run_sweep(&par).unwrap()), again);

    // a cell run on its own matches the same cell inside the sweep
    let lone = SweepSpec::from_text(
        "map_width = 40\nmap_height = 30\nhorizon = 200\nstrategies = periodic:50\nseeds = 1\nmaps = gen:1\n",
    )
    .unwrap();
    let lone = &run_sweep(&lone).unwrap()[0];
    let inside = one
        .iter()
        .find(|r| r.strategy == "periodic:50" && r.seed == 1 && r.map_id == lone.map_id)
        .unwrap();
    assert_eq!(lone.coverage_ratio, inside.coverage_ratio);
    assert_eq!(lone.relay_count, inside.relay_count);
}

#[test]
fn csv_round_trip_and_plain_means() {
    let rows = run_sweep(&small_spec("")).unwrap();
    let text = rows_to_csv(&rows);
    assert_eq!(rows_from_csv(&text).unwrap(), rows);
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "run_id,strategy,n,lambda,k,alpha,seed,map_id,coverage_ratio,relay_count,handoff_count,failure_count,wall_time_ms,error"
    );
    for a in aggregate(&rows) {
        let xs: Vec<f64> = rows
            .iter()
            .filter(|r| r.strategy == a.strategy && r.n == a.n)
            .map(|r| r.coverage_ratio)
            .collect();
        assert_eq!(a.runs, xs.len());
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((a.mean_coverage - mean).abs() < 1e-12);
    }
}

#[test]
fn bad_map_becomes_an_error_row() {
    let spec = SweepSpec::from_text("strategies = proid\nseeds = 0\nmaps = /nonexistent/map.txt\n").unwrap();
    let rows = run_sweep(&spec).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].error.is_some());
    let aggs = aggregate(&rows);
    assert_eq!((aggs[0].runs, aggs[0].errors), (0, 1));
}

#[test]
fn sharing_off_never_records_commitments() {
    let mut s = Settings::default();
    for (k, v) in [("map_width", "40"), ("map_height", "30"), ("horizon", "200"), ("sharing", "false")] {
        s.apply(k, v).unwrap();
    }
    let world = s.load_world().unwrap();
    let mut m = Mission::new(s.mission_config(world.resolution()).unwrap(), world, 1).unwrap();
    while !m.is_over() {
        m.step().unwrap();
        assert!(m.robots().iter().all(|r| r.commitments.is_empty()), "tick {}", m.tick());
    }
}
