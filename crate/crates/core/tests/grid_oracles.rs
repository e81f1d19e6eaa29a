//! Sensing, search and frontier extraction against brute-force oracles.

use std::collections::VecDeque;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

use common::{dijkstra, los_oracle, line_oracle, random_grid};
use relaysim::grid::{
    astar, astar_known, bresenham, extract_frontiers, flood_fill, raycast, CellSet, CellState,
    OccupancyGrid, Pose,
};

#[test]
fn bresenham_matches_rational_line() {
    for dx in -12..=12 {
        for dy in -12..=12 {
            let a = Pose::new(20, 20);
            let b = Pose::new(20 + dx, 20 + dy);
            assert_eq!(bresenham(a, b), line_oracle(a, b), "{a} -> {b}");
        }
    }
}

#[test]
fn raycast_equals_line_of_sight_on_random_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..100 {
        let world = random_grid(&mut rng, 20, 20, 0.25, 0.05);
        let free = world.free_poses();
        let origin = free[rng.gen_range(0..free.len())];
        let (range, n_rays) = match case % 4 {
            0 => (8.0, 250),
            1 => (20.0, 250),
            2 => (6.5, 16),
            _ => (12.0, 64),
        };
        let got = raycast(&world, origin, range, n_rays).unwrap();
        let want = los_oracle(&world, origin, range, n_rays);
        assert_eq!(
            got.difference(&want).iter().chain(want.difference(&got).iter()).collect::<Vec<_>>(),
            Vec::<Pose>::new(),
            "case {case}, origin {origin}, range {range}, rays {n_rays} (got-only then oracle-only)"
        );
    }
}

fn check_path(map: &OccupancyGrid, path: &[Pose], start: Pose, goal: Pose, known_only: bool) {
    assert_eq!(path.first(), Some(&start));
    assert_eq!(path.last(), Some(&goal));
    for w in path.windows(2) {
        assert_eq!(w[0].manhattan(w[1]), 1, "non-adjacent step {} -> {}", w[0], w[1]);
    }
    for &p in path {
        let s = map.get(p).unwrap();
        assert!(s == CellState::Free || (!known_only && s == CellState::Unknown));
    }
}

#[test]
fn astar_cost_equals_dijkstra_on_random_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut reachable = 0;
    for case in 0..100 {
        let map = random_grid(&mut rng, 15, 15, 0.3, 0.15);
        let pick = |rng: &mut ChaCha8Rng| Pose::new(rng.gen_range(0..15), rng.gen_range(0..15));
        for _ in 0..5 {
            let (s, g) = (pick(&mut rng), pick(&mut rng));
            for known_only in [false, true] {
                let want = dijkstra(&map, s, g, known_only);
                let got = if known_only {
                    astar_known(&map, s, g)
                } else {
                    astar(&map, s, g)
                };
                match (want, got) {
                    (Some(d), Ok(path)) => {
                        check_path(&map, &path, s, g, known_only);
                        assert_eq!(path.len() as u32 - 1, d, "case {case}: {s} -> {g}");
                        reachable += 1;
                    }
                    (None, Err(_)) => {}
                    (w, g2) => panic!("case {case}: {s} -> {g}: dijkstra {w:?}, astar {g2:?}"),
                }
            }
        }
    }
    assert!(reachable > 200, "too few reachable pairs ({reachable}) to be meaningful");
}

fn bfs_fill(seed: &CellSet, map: &OccupancyGrid) -> CellSet {
    let mut out = CellSet::for_grid(map);
    let mut queue = VecDeque::new();
    let open = |p: Pose| matches!(map.get(p), Some(s) if s != CellState::Occupied);
    for p in seed.iter() {
        if open(p) && out.insert(p) {
            queue.push_back(p);
        }
    }
    while let Some(p) = queue.pop_front() {
        for q in p.neighbors4() {
            if open(q) && out.insert(q) {
                queue.push_back(q);
            }
        }
    }
    out
}

#[test]
fn flood_fill_equals_bfs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let map = random_grid(&mut rng, 18, 12, 0.35, 0.1);
        let mut seed = CellSet::for_grid(&map);
        for _ in 0..3 {
            seed.insert(Pose::new(rng.gen_range(0..18), rng.gen_range(0..12)));
        }
        assert_eq!(flood_fill(&seed, &map), bfs_fill(&seed, &map));
    }
}

fn brute_frontier_cells(map: &OccupancyGrid) -> Vec<Pose> {
    map.poses()
        .filter(|&p| {
            map.get(p) == Some(CellState::Free)
                && [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .any(|&(dx, dy)| map.get(Pose::new(p.x + dx, p.y + dy)) == Some(CellState::Unknown))
        })
        .collect()
}

#[test]
fn frontier_example_half_known_room() {
    let mut map = OccupancyGrid::filled(5, 5, 1.0, CellState::Unknown);
    for y in 0..5 {
        for x in 0..3 {
            map.set(Pose::new(x, y), CellState::Free);
        }
    }
    let fs = extract_frontiers(&map, 1);
    assert_eq!(fs.len(), 1);
    let column: Vec<Pose> = (0..5).map(|y| Pose::new(2, y)).collect();
    let mut cells = fs[0].cells.clone();
    cells.sort_by_key(|p| (p.y, p.x));
    assert_eq!(cells, column);
    assert_eq!(fs[0].centroid, Pose::new(2, 2));
    assert!(extract_frontiers(&map, 10).is_empty());
}

proptest! {
    #[test]
    fn frontiers_match_definition(seed in any::<u64>(), min_region in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_grid(&mut rng, 16, 12, 0.2, 0.35);
        let fs = extract_frontiers(&map, min_region);
        let all = brute_frontier_cells(&map);
        let mut seen = CellSet::for_grid(&map);
        for f in &fs {
            prop_assert!(f.cells.len() >= min_region);
            prop_assert!(f.cells.contains(&f.centroid));
            // centroid is a cluster cell nearest the mean
            let n = f.cells.len() as f64;
            let mx = f.cells.iter().map(|p| p.x as f64).sum::<f64>() / n;
            let my = f.cells.iter().map(|p| p.y as f64).sum::<f64>() / n;
            let d = |p: &Pose| (p.x as f64 - mx).powi(2) + (p.y as f64 - my).powi(2);
            let best = f.cells.iter().map(d).fold(f64::INFINITY, f64::min);
            prop_assert!((d(&f.centroid) - best).abs() < 1e-9);
            for &c in &f.cells {
                prop_assert!(all.contains(&c));
                prop_assert!(seen.insert(c), "cell in two clusters");
                // clusters are closed under 8-adjacency among frontier cells
                for q in c.neighbors8() {
                    if all.contains(&q) {
                        prop_assert!(f.cells.contains(&q));
                    }
                }
            }
        }
        if min_region == 1 {
            prop_assert_eq!(seen.len(), all.len());
        }
    }

    #[test]
    fn scans_never_include_unknown_or_far_cells(seed in any::<u64>(), range in 0.0f64..15.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let world = random_grid(&mut rng, 20, 20, 0.2, 0.1);
        let free = world.free_poses();
        prop_assume!(!free.is_empty());
        let origin = free[rng.gen_range(0..free.len())];
        let seen = raycast(&world, origin, range, 250).unwrap();
        prop_assert!(seen.contains(origin));
        for p in seen.iter() {
            prop_assert!(world.get(p) != Some(CellState::Unknown));
            prop_assert!(p.dist(origin) <= range + 1e-9);
        }
    }
}
