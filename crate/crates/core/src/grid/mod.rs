//! Occupancy-grid world model: cell labels, map files, sensing, frontiers and
//! grid search.
//!
//! All distances inside this module are in cells; movement is 4-connected
//! with unit step cost.

mod frontier;
mod raycast;
mod search;

use std::cmp::Ordering;
use std::fmt;

use fixedbitset::FixedBitSet;
use thiserror::Error;

pub(crate) use frontier::is_frontier;
pub(crate) use search::flood_fill_by;
pub use frontier::{extract_frontiers, Frontier};
pub use raycast::{bresenham, observe, raycast, raycast_with, RayStencil, DEFAULT_RAYS};
pub use search::{
    astar, astar_known, flood_fill, path_sample, travel_time, DistanceField, Passability,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("map parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid ray origin ({x}, {y}): {reason}")]
    InvalidOrigin { x: i32, y: i32, reason: &'static str },
    #[error("grid dimensions differ: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("no path from ({}, {}) to ({}, {})", .from.x, .from.y, .to.x, .to.y)]
    Unreachable { from: Pose, to: Pose },
    #[error("endpoint ({}, {}) is not traversable", .0.x, .0.y)]
    BlockedEndpoint(Pose),
}

/// Label of a single grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CellState {
    #[default]
    Unknown,
    Free,
    Occupied,
}

impl CellState {
    pub fn is_known(self) -> bool {
        self != CellState::Unknown
    }

    pub fn glyph(self) -> char {
        match self {
            CellState::Unknown => '?',
            CellState::Free => '.',
            CellState::Occupied => '#',
        }
    }
}

/// A cell coordinate. `x` grows to the right, `y` grows downwards (row index).
///
/// Ordering is row-major: by `y` first, then `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Pose {
    pub x: i32,
    pub y: i32,
}

impl Pose {
    pub const fn new(x: i32, y: i32) -> Self {
        Pose { x, y }
    }

    pub fn dist(self, other: Pose) -> f64 {
        (self.dist_sq(other) as f64).sqrt()
    }

    pub fn dist_sq(self, other: Pose) -> i64 {
        let dx = (self.x - other.x) as i64;
        let dy = (self.y - other.y) as i64;
        dx * dx + dy * dy
    }

    pub fn manhattan(self, other: Pose) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn neighbors4(self) -> [Pose; 4] {
        [
            Pose::new(self.x + 1, self.y),
            Pose::new(self.x - 1, self.y),
            Pose::new(self.x, self.y + 1),
            Pose::new(self.x, self.y - 1),
        ]
    }

    pub fn neighbors8(self) -> [Pose; 8] {
        [
            Pose::new(self.x + 1, self.y),
            Pose::new(self.x - 1, self.y),
            Pose::new(self.x, self.y + 1),
            Pose::new(self.x, self.y - 1),
            Pose::new(self.x + 1, self.y + 1),
            Pose::new(self.x + 1, self.y - 1),
            Pose::new(self.x - 1, self.y + 1),
            Pose::new(self.x - 1, self.y - 1),
        ]
    }
}

impl Ord for Pose {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Pose {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Ordered sequence of 4-adjacent poses from start to goal.
pub type Path = Vec<Pose>;

/// Row-major 2D occupancy grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    /// A grid with every cell set to `fill`.
    ///
    /// Panics on zero dimensions or a non-positive resolution.
    pub fn filled(width: usize, height: usize, resolution: f64, fill: CellState) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        assert!(resolution > 0.0, "resolution must be positive");
        OccupancyGrid {
            width,
            height,
            resolution,
            cells: vec![fill; width * height],
        }
    }

    pub fn unknown_like(other: &OccupancyGrid) -> Self {
        Self::filled(other.width, other.height, other.resolution, CellState::Unknown)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn contains(&self, p: Pose) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    /// Row-major index; caller guarantees `contains(p)`.
    #[inline]
    pub fn index(&self, p: Pose) -> usize {
        debug_assert!(self.contains(p));
        p.y as usize * self.width + p.x as usize
    }

    #[inline]
    pub fn pose_of(&self, idx: usize) -> Pose {
        Pose::new((idx % self.width) as i32, (idx / self.width) as i32)
    }

    /// Label at `p`, or `None` when out of bounds.
    #[inline]
    pub fn get(&self, p: Pose) -> Option<CellState> {
        if self.contains(p) {
            Some(self.cells[self.index(p)])
        } else {
            None
        }
    }

    #[inline]
    pub fn at(&self, idx: usize) -> CellState {
        self.cells[idx]
    }

    pub fn set(&mut self, p: Pose, state: CellState) {
        let idx = self.index(p);
        self.cells[idx] = state;
    }

    #[inline]
    pub fn set_at(&mut self, idx: usize, state: CellState) {
        self.cells[idx] = state;
    }

    pub fn same_shape(&self, other: &OccupancyGrid) -> Result<(), GridError> {
        if self.width != other.width
            || self.height != other.height
            || self.resolution != other.resolution
        {
            return Err(GridError::DimensionMismatch {
                a: (self.width, self.height),
                b: (other.width, other.height),
            });
        }
        Ok(())
    }

    pub fn poses(&self) -> impl Iterator<Item = Pose> + '_ {
        (0..self.cells.len()).map(|i| self.pose_of(i))
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }

    pub fn known_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_known()).count()
    }

    pub fn known_cells(&self) -> CellSet {
        let mut set = CellSet::for_grid(self);
        for (i, c) in self.cells.iter().enumerate() {
            if c.is_known() {
                set.insert_index(i);
            }
        }
        set
    }

    pub fn free_poses(&self) -> Vec<Pose> {
        self.poses()
            .filter(|&p| self.get(p) == Some(CellState::Free))
            .collect()
    }

    /// Parse the text map format: a `width height resolution` header followed
    /// by `height` rows of `width` glyphs (`#` occupied, `.` free, `?` unknown).
    ///
    /// Ground-truth maps must not contain `?`; use [`OccupancyGrid::parse_snapshot`]
    /// for saved robot maps.
    pub fn parse(text: &str) -> Result<Self, GridError> {
        let grid = Self::parse_inner(text, false)?;
        if grid.count(CellState::Free) == 0 {
            return Err(GridError::Parse {
                line: 1,
                column: 1,
                message: "map contains no free cell".into(),
            });
        }
        Ok(grid)
    }

    /// Like [`OccupancyGrid::parse`] but accepts `?` for unknown cells.
    pub fn parse_snapshot(text: &str) -> Result<Self, GridError> {
        Self::parse_inner(text, true)
    }

    fn parse_inner(text: &str, allow_unknown: bool) -> Result<Self, GridError> {
        let err = |line: usize, column: usize, message: String| GridError::Parse {
            line,
            column,
            message,
        };
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| err(1, 1, "empty map file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(1, 1, format!("expected `width height resolution`, got {header:?}")));
        }
        let width: usize = fields[0]
            .parse()
            .map_err(|_| err(1, 1, format!("bad width {:?}", fields[0])))?;
        let height: usize = fields[1]
            .parse()
            .map_err(|_| err(1, 1, format!("bad height {:?}", fields[1])))?;
        let resolution: f64 = fields[2]
            .parse()
            .map_err(|_| err(1, 1, format!("bad resolution {:?}", fields[2])))?;
        if width == 0 || height == 0 {
            return Err(err(1, 1, "width and height must be positive".into()));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(err(1, 1, "resolution must be a positive number".into()));
        }

        let mut cells = Vec::with_capacity(width * height);
        for row in 0..height {
            let line_no = row + 2;
            let line = lines
                .next()
                .ok_or_else(|| err(line_no, 1, format!("expected {height} rows, found {row}")))?;
            let mut n = 0;
            for (col, ch) in line.chars().enumerate() {
                let state = match ch {
                    '#' => CellState::Occupied,
                    '.' => CellState::Free,
                    '?' if allow_unknown => CellState::Unknown,
                    other => {
                        return Err(err(line_no, col + 1, format!("unknown glyph {other:?}")))
                    }
                };
                if col >= width {
                    return Err(err(line_no, col + 1, format!("row longer than width {width}")));
                }
                cells.push(state);
                n += 1;
            }
            if n != width {
                return Err(err(line_no, n + 1, format!("row has {n} cells, expected {width}")));
            }
        }
        if let Some((extra, _)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
            return Err(err(height + 2 + extra, 1, "trailing content after last row".into()));
        }
        Ok(OccupancyGrid {
            width,
            height,
            resolution,
            cells,
        })
    }

    /// Serialize in the map file format. Unknown cells are written as `?`.
    pub fn to_map_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * (self.height + 1) + 32);
        out.push_str(&format!("{} {} {}\n", self.width, self.height, self.resolution));
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|c| c.glyph()));
            out.push('\n');
        }
        out
    }
}

/// Set of in-bounds cells of one grid, stored as a dense bitmask over
/// row-major cell indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    width: usize,
    height: usize,
    bits: FixedBitSet,
}

impl CellSet {
    pub fn new(width: usize, height: usize) -> Self {
        CellSet {
            width,
            height,
            bits: FixedBitSet::with_capacity(width * height),
        }
    }

    pub fn for_grid(grid: &OccupancyGrid) -> Self {
        Self::new(grid.width(), grid.height())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn index(&self, p: Pose) -> Option<usize> {
        if p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height {
            Some(p.y as usize * self.width + p.x as usize)
        } else {
            None
        }
    }

    /// Inserts `p`; returns `true` if it was not already present.
    ///
    /// Panics if `p` is out of bounds.
    pub fn insert(&mut self, p: Pose) -> bool {
        let idx = self
            .index(p)
            .unwrap_or_else(|| panic!("cell {p} outside {}x{} set", self.width, self.height));
        !self.bits.put(idx)
    }

    #[inline]
    pub fn insert_index(&mut self, idx: usize) -> bool {
        !self.bits.put(idx)
    }

    pub fn remove(&mut self, p: Pose) -> bool {
        match self.index(p) {
            Some(idx) if self.bits.contains(idx) => {
                self.bits.set(idx, false);
                true
            }
            _ => false,
        }
    }

    pub fn contains(&self, p: Pose) -> bool {
        self.index(p).is_some_and(|i| self.bits.contains(i))
    }

    #[inline]
    pub fn contains_index(&self, idx: usize) -> bool {
        self.bits.contains(idx)
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn clear(&mut self) {
        self.bits.clear();
    }

    pub fn union_with(&mut self, other: &CellSet) {
        debug_assert_eq!(self.dims(), other.dims());
        self.bits.union_with(&other.bits);
    }

    pub fn difference_with(&mut self, other: &CellSet) {
        debug_assert_eq!(self.dims(), other.dims());
        self.bits.difference_with(&other.bits);
    }

    pub fn intersect_with(&mut self, other: &CellSet) {
        debug_assert_eq!(self.dims(), other.dims());
        self.bits.intersect_with(&other.bits);
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn difference(&self, other: &CellSet) -> CellSet {
        let mut out = self.clone();
        out.difference_with(other);
        out
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    pub fn difference_count(&self, other: &CellSet) -> usize {
        self.bits.difference_count(&other.bits)
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    /// Members in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = Pose> + '_ {
        let w = self.width;
        self.bits
            .ones()
            .map(move |i| Pose::new((i % w) as i32, (i / w) as i32))
    }

    /// Stable 64-bit digest of the membership (FNV-1a over set indices).
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for i in self.bits.ones() {
            for b in (i as u64).to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

/// Per-cell fusion of two maps of the same shape.
///
/// Known beats unknown; a free/occupied disagreement resolves to occupied and
/// is logged, since it cannot arise from observations of one ground truth.
pub fn fuse(a: &OccupancyGrid, b: &OccupancyGrid) -> Result<OccupancyGrid, GridError> {
    let mut out = a.clone();
    fuse_into(&mut out, b)?;
    Ok(out)
}

/// In-place variant of [`fuse`]; returns the number of cells of `dst` that
/// changed.
pub fn fuse_into(dst: &mut OccupancyGrid, src: &OccupancyGrid) -> Result<usize, GridError> {
    dst.same_shape(src)?;
    let mut changed = 0;
    for (i, (d, &s)) in dst.cells.iter_mut().zip(src.cells.iter()).enumerate() {
        let merged = match (*d, s) {
            (x, CellState::Unknown) => x,
            (CellState::Unknown, y) => y,
            (x, y) if x == y => x,
            _ => {
                log::warn!("fusion conflict at cell index {i}: free vs occupied");
                CellState::Occupied
            }
        };
        if merged != *d {
            *d = merged;
            changed += 1;
        }
    }
    Ok(changed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_all_free() {
        let g = OccupancyGrid::parse("3 3 1\n...\n...\n...\n").unwrap();
        assert_eq!(g.count(CellState::Free), 9);
        assert_eq!(g.count(CellState::Unknown), 0);
    }

    #[test]
    fn parse_border() {
        let g = OccupancyGrid::parse("4 4 0.5\n####\n#..#\n#..#\n####\n").unwrap();
        assert_eq!(g.count(CellState::Occupied), 12);
        assert_eq!(g.get(Pose::new(1, 1)), Some(CellState::Free));
        assert_eq!(g.resolution(), 0.5);
    }

    #[test]
    fn parse_ragged_row_names_line() {
        let e = OccupancyGrid::parse("3 2 1\n...\n..\n").unwrap_err();
        match e {
            GridError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_bad_glyph_and_no_free() {
        let e = OccupancyGrid::parse("2 1 1\n.x\n").unwrap_err();
        assert!(matches!(e, GridError::Parse { line: 2, column: 2, .. }));
        assert!(OccupancyGrid::parse("2 1 1\n##\n").is_err());
        assert!(OccupancyGrid::parse("2 1 1\n.?\n").is_err());
        assert!(OccupancyGrid::parse("2 1\n..\n").is_err());
        assert!(OccupancyGrid::parse("2 2 1\n..\n").is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let text = "3 2 1\n.?#\n??.\n";
        let g = OccupancyGrid::parse_snapshot(text).unwrap();
        assert_eq!(g.to_map_text(), text);
    }

    #[test]
    fn fuse_conflict_is_occupied() {
        let mut a = OccupancyGrid::filled(2, 1, 1.0, CellState::Unknown);
        let mut b = a.clone();
        a.set(Pose::new(0, 0), CellState::Free);
        b.set(Pose::new(0, 0), CellState::Occupied);
        b.set(Pose::new(1, 0), CellState::Free);
        let f = fuse(&a, &b).unwrap();
        assert_eq!(f.get(Pose::new(0, 0)), Some(CellState::Occupied));
        assert_eq!(f.get(Pose::new(1, 0)), Some(CellState::Free));
    }

    #[test]
    fn fuse_dimension_mismatch() {
        let a = OccupancyGrid::filled(2, 1, 1.0, CellState::Free);
        let b = OccupancyGrid::filled(1, 2, 1.0, CellState::Free);
        assert!(matches!(fuse(&a, &b), Err(GridError::DimensionMismatch { .. })));
    }

    #[test]
    fn cellset_ops() {
        let mut s = CellSet::new(4, 3);
        assert!(s.insert(Pose::new(3, 2)));
        assert!(!s.insert(Pose::new(3, 2)));
        assert!(s.contains(Pose::new(3, 2)));
        assert!(!s.contains(Pose::new(4, 2)));
        let mut t = CellSet::new(4, 3);
        t.insert(Pose::new(0, 0));
        let u = s.union(&t);
        assert_eq!(u.len(), 2);
        assert_eq!(u.iter().collect::<Vec<_>>(), vec![Pose::new(0, 0), Pose::new(3, 2)]);
        assert_eq!(u.difference(&t).len(), 1);
        assert!(t.is_subset(&u));
    }

    fn arb_grid() -> impl Strategy<Value = OccupancyGrid> {
        (1usize..8, 1usize..8).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0u8..3, w * h).prop_map(move |v| {
                let mut g = OccupancyGrid::filled(w, h, 1.0, CellState::Unknown);
                for (i, c) in v.into_iter().enumerate() {
                    g.set_at(
                        i,
                        match c {
                            0 => CellState::Unknown,
                            1 => CellState::Free,
                            _ => CellState::Occupied,
                        },
                    );
                }
                g
            })
        })
    }

    proptest! {
        #[test]
        fn fuse_commutative_idempotent((a, b) in arb_grid().prop_flat_map(|a| {
            let (w, h) = (a.width(), a.height());
            let b = proptest::collection::vec(0u8..3, w * h).prop_map(move |v| {
                let mut g = OccupancyGrid::filled(w, h, 1.0, CellState::Unknown);
                for (i, c) in v.into_iter().enumerate() {
                    g.set_at(i, [CellState::Unknown, CellState::Free, CellState::Occupied][c as usize]);
                }
                g
            });
            (Just(a), b)
        })) {
            prop_assert_eq!(fuse(&a, &b).unwrap(), fuse(&b, &a).unwrap());
            prop_assert_eq!(fuse(&a, &a).unwrap(), a.clone());
            let unknown = OccupancyGrid::unknown_like(&a);
            prop_assert_eq!(fuse(&a, &unknown).unwrap(), a);
        }
    }
}
