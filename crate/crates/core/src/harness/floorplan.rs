//! Seeded indoor floorplans: recursive room subdivision with doors, and
//! corridors along the top-level cuts.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

use crate::grid::{flood_fill, CellSet, CellState, OccupancyGrid, Pose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FloorplanError {
    #[error("map must be at least 20x20 cells, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("invalid room parameters: {0}")]
    Params(String),
    #[error("no connected layout found for seed {0}")]
    NoLayout(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomParams {
    /// Smallest room side, in free cells.
    pub min_room: i32,
    /// Rooms with a side longer than this are always split.
    pub max_room: i32,
    pub door_min: i32,
    pub door_max: i32,
    pub corridor_width: i32,
    /// Number of subdivision levels whose cuts become corridors.
    pub corridor_levels: u32,
    /// Preferred room count range. Layouts outside it are redrawn; when no
    /// draw lands inside (maps much larger or smaller than the default),
    /// the first connected draw is kept.
    pub rooms_lo: usize,
    pub rooms_hi: usize,
    pub resolution: f64,
}

impl Default for RoomParams {
    fn default() -> Self {
        RoomParams {
            min_room: 7,
            max_room: 26,
            door_min: 1,
            door_max: 2,
            corridor_width: 2,
            corridor_levels: 1,
            rooms_lo: 6,
            rooms_hi: 12,
            resolution: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rect {
    x0: i32,
    y0: i32,
    x1: i32,
    y1: i32,
}

impl Rect {
    fn w(&self) -> i32 {
        self.x1 - self.x0 + 1
    }
    fn h(&self) -> i32 {
        self.y1 - self.y0 + 1
    }
}

/// Generated layout with its room and door bookkeeping.
#[derive(Debug, Clone)]
pub struct Floorplan {
    pub grid: OccupancyGrid,
    pub rooms: usize,
    pub door_widths: Vec<i32>,
}

struct Builder<'a> {
    grid: OccupancyGrid,
    params: &'a RoomParams,
    rooms: usize,
    doors: Vec<i32>,
}

impl Builder<'_> {
    fn carve(&mut self, r: Rect) {
        for y in r.y0..=r.y1 {
            for x in r.x0..=r.x1 {
                self.grid.set(Pose::new(x, y), CellState::Free);
            }
        }
    }

    fn door<R: Rng>(&mut self, rng: &mut R, vertical_wall: bool, at: i32, lo: i32, hi: i32) -> Vec<i32> {
        let p = self.params;
        let width = rng.gen_range(p.door_min..=p.door_max).min(hi - lo + 1);
        let start = rng.gen_range(lo..=hi - width + 1);
        for k in start..start + width {
            let cell = if vertical_wall {
                Pose::new(at, k)
            } else {
                Pose::new(k, at)
            };
            self.grid.set(cell, CellState::Free);
        }
        self.doors.push(width);
        (start..start + width).collect()
    }

    // `no_cols` / `no_rows`: coordinates where a cut would block a door in
    // an enclosing wall.
    fn split<R: Rng>(&mut self, rng: &mut R, r: Rect, depth: u32, no_cols: &[i32], no_rows: &[i32]) {
        let p = self.params;
        let corridor = depth < p.corridor_levels;
        let extra = if corridor { p.corridor_width + 1 } else { 0 };
        let need = 2 * p.min_room + 1 + extra;
        let can_v = r.w() >= need;
        let can_h = r.h() >= need;
        let must = r.w() > p.max_room || r.h() > p.max_room;
        let want = must || (rng.gen_bool(0.25) && (can_v || can_h));
        if !(can_v || can_h) || !want {
            self.carve(r);
            self.rooms += 1;
            return;
        }
        let vertical = if can_v && can_h {
            if r.w() == r.h() {
                rng.gen_bool(0.5)
            } else {
                r.w() > r.h()
            }
        } else {
            can_v
        };
        let (lo, hi, forbidden) = if vertical {
            (r.x0 + p.min_room, r.x1 - p.min_room - extra, no_cols)
        } else {
            (r.y0 + p.min_room, r.y1 - p.min_room - extra, no_rows)
        };
        let options: Vec<i32> = (lo..=hi)
            .filter(|s| (*s..=*s + extra).all(|c| !forbidden.contains(&c)))
            .collect();
        if options.is_empty() {
            self.carve(r);
            self.rooms += 1;
            return;
        }
        let s = options[rng.gen_range(0..options.len())];
        let s2 = s + extra;
        if vertical {
            let left = Rect { x1: s - 1, ..r };
            let right = Rect { x0: s2 + 1, ..r };
            let mut rows = no_rows.to_vec();
            rows.extend(self.door(rng, true, s, r.y0, r.y1));
            if corridor {
                self.carve(Rect { x0: s + 1, x1: s2 - 1, ..r });
                rows.extend(self.door(rng, true, s2, r.y0, r.y1));
            }
            self.split(rng, left, depth + 1, no_cols, &rows);
            self.split(rng, right, depth + 1, no_cols, &rows);
        } else {
            let top = Rect { y1: s - 1, ..r };
            let bottom = Rect { y0: s2 + 1, ..r };
            let mut cols = no_cols.to_vec();
            cols.extend(self.door(rng, false, s, r.x0, r.x1));
            if corridor {
                self.carve(Rect { y0: s + 1, y1: s2 - 1, ..r });
                cols.extend(self.door(rng, false, s2, r.x0, r.x1));
            }
            self.split(rng, top, depth + 1, &cols, no_rows);
            self.split(rng, bottom, depth + 1, &cols, no_rows);
        }
    }
}

fn is_connected(grid: &OccupancyGrid) -> bool {
    let free = grid.free_poses();
    let Some(&first) = free.first() else {
        return false;
    };
    let mut seed = CellSet::for_grid(grid);
    seed.insert(first);
    flood_fill(&seed, grid).len() == free.len()
}

const ATTEMPTS: usize = 64;

/// Generates a connected layout for `seed`.
pub fn generate_floorplan(
    seed: u64,
    width: usize,
    height: usize,
    params: &RoomParams,
) -> Result<Floorplan, FloorplanError> {
    if width < 20 || height < 20 {
        return Err(FloorplanError::TooSmall { width, height });
    }
    let p = params;
    if p.min_room < 2 || p.max_room < 2 * p.min_room + 1 {
        return Err(FloorplanError::Params(format!(
            "need min_room >= 2 and max_room >= 2*min_room+1, got {} and {}",
            p.min_room, p.max_room
        )));
    }
    if p.door_min < 1 || p.door_max < p.door_min || p.corridor_width < 1 {
        return Err(FloorplanError::Params("door and corridor widths must be >= 1".into()));
    }
    if !(p.resolution > 0.0) {
        return Err(FloorplanError::Params("resolution must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fallback = None;
    for _ in 0..ATTEMPTS {
        let mut b = Builder {
            grid: OccupancyGrid::filled(width, height, p.resolution, CellState::Occupied),
            params: p,
            rooms: 0,
            doors: Vec::new(),
        };
        let interior = Rect {
            x0: 1,
            y0: 1,
            x1: width as i32 - 2,
            y1: height as i32 - 2,
        };
        b.split(&mut rng, interior, 0, &[], &[]);
        if !is_connected(&b.grid) {
            continue;
        }
        let plan = Floorplan {
            grid: b.grid,
            rooms: b.rooms,
            door_widths: b.doors,
        };
        if (p.rooms_lo..=p.rooms_hi).contains(&plan.rooms) {
            return Ok(plan);
        }
        fallback.get_or_insert(plan);
    }
    fallback.ok_or(FloorplanError::NoLayout(seed))
}

/// Just the grid of [`generate_floorplan`].
pub fn generate_map(
    seed: u64,
    width: usize,
    height: usize,
    params: &RoomParams,
) -> Result<OccupancyGrid, FloorplanError> {
    generate_floorplan(seed, width, height, params).map(|f| f.grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_loadable() {
        let p = RoomParams::default();
        let a = generate_map(4, 60, 40, &p).unwrap();
        assert_eq!(a, generate_map(4, 60, 40, &p).unwrap());
        assert_ne!(a, generate_map(5, 60, 40, &p).unwrap());
        let text = a.to_map_text();
        assert_eq!(OccupancyGrid::parse(&text).unwrap(), a);
        assert!(is_connected(&a));
    }

    #[test]
    fn rejects_small_or_bad_params() {
        let p = RoomParams::default();
        assert!(matches!(generate_map(0, 19, 40, &p), Err(FloorplanError::TooSmall { .. })));
        let bad = RoomParams { max_room: 6, ..p };
        assert!(matches!(generate_map(0, 60, 40, &bad), Err(FloorplanError::Params(_))));
    }
}
