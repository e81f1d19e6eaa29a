use std::f64::consts::TAU;

use super::{CellSet, CellState, GridError, OccupancyGrid, Pose};

/// Default number of rays per scan.
pub const DEFAULT_RAYS: usize = 250;

/// All-octant integer Bresenham line from `a` to `b`, both endpoints included.
pub fn bresenham(a: Pose, b: Pose) -> Vec<Pose> {
    let (mut x, mut y) = (a.x, a.y);
    let dx = (b.x - a.x).abs();
    let dy = -(b.y - a.y).abs();
    let sx = if a.x < b.x { 1 } else { -1 };
    let sy = if a.y < b.y { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        out.push(Pose::new(x, y));
        if x == b.x && y == b.y {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Target {
    dx: i32,
    dy: i32,
    // range into `RayStencil::between`
    start: u32,
    end: u32,
}

/// Translation-invariant scan pattern for a given sensing range and ray
/// count.
///
/// A cell is sensed from an origin when it lies within Euclidean `range`,
/// at least one of the `n_rays` evenly spaced ray directions passes through
/// the cell's square, and the Bresenham line from the origin to it crosses no
/// blocking cell. Occupied cells block but are themselves sensed; unknown
/// cells block and are never sensed.
#[derive(Debug, Clone)]
pub struct RayStencil {
    range: f64,
    n_rays: usize,
    targets: Vec<Target>,
    between: Vec<(i32, i32)>,
}

impl RayStencil {
    pub fn new(range: f64, n_rays: usize) -> Self {
        assert!(range >= 0.0 && range.is_finite(), "range must be finite and >= 0");
        assert!(n_rays >= 1, "need at least one ray");
        let r = range.floor() as i32;
        let r2 = range * range;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                let d2 = (dx * dx + dy * dy) as f64;
                if d2 <= r2 && angularly_covered(dx, dy, n_rays) {
                    offsets.push((dx, dy));
                }
            }
        }
        // nearest first keeps memory access local for small ranges
        offsets.sort_by_key(|&(dx, dy)| (dx * dx + dy * dy, dy, dx));

        let mut targets = Vec::with_capacity(offsets.len());
        let mut between = Vec::new();
        let origin = Pose::new(0, 0);
        for (dx, dy) in offsets {
            let line = bresenham(origin, Pose::new(dx, dy));
            let start = between.len() as u32;
            if line.len() > 2 {
                between.extend(line[1..line.len() - 1].iter().map(|p| (p.x, p.y)));
            }
            targets.push(Target {
                dx,
                dy,
                start,
                end: between.len() as u32,
            });
        }
        RayStencil {
            range,
            n_rays,
            targets,
            between,
        }
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn n_rays(&self) -> usize {
        self.n_rays
    }

    /// Calls `visit(index)` for every cell sensed from `origin`.
    ///
    /// An occupied or out-of-bounds origin is rejected; an unknown origin
    /// senses nothing.
    pub fn scan(
        &self,
        grid: &OccupancyGrid,
        origin: Pose,
        mut visit: impl FnMut(usize),
    ) -> Result<(), GridError> {
        match grid.get(origin) {
            None => {
                return Err(GridError::InvalidOrigin {
                    x: origin.x,
                    y: origin.y,
                    reason: "out of bounds",
                })
            }
            Some(CellState::Occupied) => {
                return Err(GridError::InvalidOrigin {
                    x: origin.x,
                    y: origin.y,
                    reason: "occupied",
                })
            }
            Some(CellState::Unknown) => return Ok(()),
            Some(CellState::Free) => {}
        }
        let (w, h) = (grid.width() as i32, grid.height() as i32);
        let cells = grid.cells();
        'targets: for t in &self.targets {
            let (x, y) = (origin.x + t.dx, origin.y + t.dy);
            if x < 0 || y < 0 || x >= w || y >= h {
                continue;
            }
            let idx = (y * w + x) as usize;
            if cells[idx] == CellState::Unknown {
                continue;
            }
            // Bresenham stays inside the endpoints' bounding box, so every
            // intermediate cell is in bounds.
            for &(bx, by) in &self.between[t.start as usize..t.end as usize] {
                let bi = ((origin.y + by) * w + origin.x + bx) as usize;
                if cells[bi] != CellState::Free {
                    continue 'targets;
                }
            }
            visit(idx);
        }
        Ok(())
    }
}

// Whether one of the `n` ray directions 2πk/n passes through the unit square
// centred on (dx, dy) as seen from the origin cell's centre.
fn angularly_covered(dx: i32, dy: i32, n: usize) -> bool {
    if dx == 0 && dy == 0 {
        return true;
    }
    let centre = (dy as f64).atan2(dx as f64);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (cx, cy) in [(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)] {
        let a = (dy as f64 + cy).atan2(dx as f64 + cx);
        let mut d = a - centre;
        while d > std::f64::consts::PI {
            d -= TAU;
        }
        while d <= -std::f64::consts::PI {
            d += TAU;
        }
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let step = TAU / n as f64;
    let k_lo = ((centre + lo) / step).ceil();
    let k_hi = ((centre + hi) / step).floor();
    k_hi >= k_lo
}

/// Cells sensed from `origin` (see [`RayStencil`] for the visibility rule).
pub fn raycast(
    world: &OccupancyGrid,
    origin: Pose,
    range: f64,
    n_rays: usize,
) -> Result<CellSet, GridError> {
    raycast_with(&RayStencil::new(range, n_rays), world, origin)
}

pub fn raycast_with(
    stencil: &RayStencil,
    world: &OccupancyGrid,
    origin: Pose,
) -> Result<CellSet, GridError> {
    let mut out = CellSet::for_grid(world);
    stencil.scan(world, origin, |i| {
        out.insert_index(i);
    })?;
    Ok(out)
}

/// Copies ground-truth labels of every cell sensed from `pose` into `local`
/// and returns the cells that were previously unknown there.
pub fn observe(
    local: &mut OccupancyGrid,
    world: &OccupancyGrid,
    pose: Pose,
    stencil: &RayStencil,
) -> Result<CellSet, GridError> {
    local.same_shape(world)?;
    let mut fresh = CellSet::for_grid(world);
    stencil.scan(world, pose, |i| {
        if local.at(i) == CellState::Unknown {
            fresh.insert_index(i);
        }
        local.set_at(i, world.at(i));
    })?;
    Ok(fresh)
}
