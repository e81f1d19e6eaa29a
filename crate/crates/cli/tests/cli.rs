//! End-to-end runs of the `relaysim` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn relaysim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaysim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn genmap_stdout_matches_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("m.txt");
    let shown = ok(&relaysim(&["genmap", "--seed", "3", "--width", "40", "--height", "30"]));
    ok(&relaysim(&["genmap", "--seed", "3", "--width", "40", "--height", "30", "--out", p(&file)]));
    assert_eq!(fs::read_to_string(&file).unwrap(), shown);
    assert!(shown.contains('#') && shown.contains('.'));
}

#[test]
fn run_writes_results_and_log_then_renders() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("m.txt");
    let out = dir.path().join("run");
    let log = dir.path().join("events.jsonl");
    ok(&relaysim(&["genmap", "--seed", "1", "--width", "40", "--height", "30", "--out", p(&map)]));
    let said = ok(&relaysim(&[
        "run", "--map", p(&map), "--strategy", "periodic", "--period", "50", "--n", "2",
        "--ticks", "120", "--seed", "4", "--out", p(&out), "--log", p(&log),
    ]));
    assert!(said.starts_with("coverage "));

    let result = fs::read_to_string(out.join("result.csv")).unwrap();
    assert_eq!(result.lines().count(), 2);
    assert!(result.lines().nth(1).unwrap().contains("periodic:50"));
    let coverage = fs::read_to_string(out.join("coverage.csv")).unwrap();
    assert!(coverage.lines().count() > 100);
    assert!(out.join("base_map.txt").exists());

    let events = fs::read_to_string(&log).unwrap();
    assert!(events.lines().all(|l| l.starts_with('{')));

    let frames = dir.path().join("frames");
    ok(&relaysim(&["render", "--log", p(&log), "--every", "40", "--out-dir", p(&frames), "--map", p(&map)]));
    let mut names: Vec<String> = fs::read_dir(&frames)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"frame_000000.txt".to_string()));
    assert!(names.contains(&"frame_000040.svg".to_string()));
    assert!(names.iter().all(|n| n.starts_with("frame_")));
}

#[test]
fn same_run_twice_gives_same_log() {
    let dir = tempfile::tempdir().unwrap();
    let logs: Vec<String> = (0..2)
        .map(|i| {
            let log = dir.path().join(format!("{i}.jsonl"));
            ok(&relaysim(&[
                "run", "--gen-seed", "2", "--set", "map_width=40", "--set", "map_height=30",
                "--ticks", "100", "--lambda", "200", "--strategy", "proid_safe", "--log", p(&log),
            ]));
            fs::read_to_string(log).unwrap()
        })
        .collect();
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn sweep_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sweep.cfg");
    fs::write(
        &spec,
        "map_width = 40\nmap_height = 30\nhorizon = 100\nstrategies = proid, final_only\nseeds = 0..2\nmaps = gen:0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let table = ok(&relaysim(&["sweep", "--spec", p(&spec), "--workers", "2", "--out-dir", p(&out)]));
    let rows = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 2);
    assert!(out.join("summary.csv").exists());
    assert_eq!(fs::read_to_string(out.join("summary.txt")).unwrap(), table);
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("bad.txt");
    fs::write(&map, "this is not a map\n").unwrap();
    for args in [
        vec!["run", "--map", p(&map)],
        vec!["run", "--set", "no_such_key=1"],
        vec!["run", "--set", "novalue"],
        vec!["run", "--strategy", "teleport"],
        vec!["run", "--map", "/nonexistent/map.txt"],
    ] {
        let out = relaysim(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
}

#[test]
fn unusable_mission_exits_with_two() {
    // generated maps are walled in, so the corner is never free
    let out = relaysim(&[
        "run", "--set", "map_width=40", "--set", "map_height=30", "--set", "start_x=0",
        "--set", "start_y=0", "--ticks", "10",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
