//! Brute-force oracles shared by the test targets.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use relaysim::grid::{CellSet, CellState, OccupancyGrid, Pose};

pub fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize, p_occ: f64, p_unknown: f64) -> OccupancyGrid {
    let mut g = OccupancyGrid::filled(w, h, 1.0, CellState::Free);
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            let u: f64 = rng.gen();
            let s = if u < p_occ {
                CellState::Occupied
            } else if u < p_occ + p_unknown {
                CellState::Unknown
            } else {
                CellState::Free
            };
            g.set(Pose::new(x, y), s);
        }
    }
    g
}

// Rounds num/den half away from zero; den > 0.
pub fn div_round(num: i32, den: i32) -> i32 {
    let q = (2 * num.abs() + den) / (2 * den);
    if num < 0 {
        -q
    } else {
        q
    }
}

/// Digital line by exact rational interpolation along the major axis.
pub fn line_oracle(a: Pose, b: Pose) -> Vec<Pose> {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let steps = dx.abs().max(dy.abs());
    if steps == 0 {
        return vec![a];
    }
    (0..=steps)
        .map(|i| Pose::new(a.x + div_round(dx * i, steps), a.y + div_round(dy * i, steps)))
        .collect()
}

/// Whether a ray from the origin cell centre at angle `theta` meets the closed
/// unit square around (dx, dy) (slab test). Touching a corner counts.
pub fn ray_hits_square(theta: f64, dx: i32, dy: i32) -> bool {
    let (cx, cy) = (theta.cos(), theta.sin());
    let mut t_lo = 0.0f64;
    let mut t_hi = f64::INFINITY;
    for (d, c) in [(cx, dx as f64), (cy, dy as f64)] {
        let (lo, hi) = (c - 0.5, c + 0.5);
        if d.abs() < 1e-15 {
            if lo > 0.0 || hi < 0.0 {
                return false;
            }
        } else {
            let (a, b) = ((lo / d).min(hi / d), (lo / d).max(hi / d));
            t_lo = t_lo.max(a);
            t_hi = t_hi.min(b);
        }
    }
    t_lo <= t_hi + 1e-9
}

pub fn los_oracle(world: &OccupancyGrid, origin: Pose, range: f64, n_rays: usize) -> CellSet {
    let mut out = CellSet::for_grid(world);
    if world.get(origin) != Some(CellState::Free) {
        return out;
    }
    for target in world.poses() {
        let (dx, dy) = (target.x - origin.x, target.y - origin.y);
        if ((dx * dx + dy * dy) as f64) > range * range {
            continue;
        }
        if world.get(target) == Some(CellState::Unknown) {
            continue;
        }
        let covered = (dx == 0 && dy == 0)
            || (0..n_rays).any(|k| {
                ray_hits_square(std::f64::consts::TAU * k as f64 / n_rays as f64, dx, dy)
            });
        if !covered {
            continue;
        }
        let line = line_oracle(origin, target);
        let inner = if line.len() > 2 { &line[1..line.len() - 1] } else { &[][..] };
        let clear = inner.iter().all(|&p| world.get(p) == Some(CellState::Free));
        if clear {
            out.insert(target);
        }
    }
    out
}

pub fn dijkstra(map: &OccupancyGrid, start: Pose, goal: Pose, known_only: bool) -> Option<u32> {
    let ok = |p: Pose| match map.get(p) {
        Some(CellState::Free) => true,
        Some(CellState::Unknown) => !known_only,
        _ => false,
    };
    if !ok(start) || !ok(goal) {
        return None;
    }
    let mut dist = vec![u32::MAX; map.len()];
    let mut heap = BinaryHeap::new();
    dist[map.index(start)] = 0;
    heap.push(Reverse((0u32, start.y, start.x)));
    while let Some(Reverse((d, y, x))) = heap.pop() {
        let p = Pose::new(x, y);
        if p == goal {
            return Some(d);
        }
        if d > dist[map.index(p)] {
            continue;
        }
        for q in p.neighbors4() {
            if ok(q) && d + 1 < dist[map.index(q)] {
                dist[map.index(q)] = d + 1;
                heap.push(Reverse((d + 1, q.y, q.x)));
            }
        }
    }
    None
}

