//! Map-completion predictors and ensemble visibility estimation.
//!
//! A predictor turns a partially known robot map into one or more completed
//! hypotheses. Expected information gain along a path is estimated by
//! raycasting from sampled path poses over every hypothesis, filling the
//! swept region, and keeping cells that a threshold fraction of hypotheses
//! agree are visible.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::grid::{flood_fill_by, CellSet, CellState, OccupancyGrid, Pose, RayStencil};
use crate::seed;

/// Fraction of revealed cells whose label an oracle ensemble member flips.
pub const ORACLE_FLIP_FRACTION: f64 = 0.05;

const WALL_EXTENSION_MAX: u32 = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictionError {
    #[error("the oracle predictor needs the ground-truth map")]
    MissingWorld,
    #[error("ensemble size must be at least 1")]
    EmptyEnsemble,
    #[error("vote threshold must lie in (0, 1], got {0}")]
    BadThreshold(f64),
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
}

/// Which completion model to use.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum PredictorKind {
    /// No prediction: unknown stays unknown.
    Null,
    /// Ground truth revealed within `reveal_radius` cells of known space,
    /// with `flip_fraction` of revealed labels flipped per member.
    Oracle { reveal_radius: u32, flip_fraction: f64 },
    /// Structural completion: wall continuation, room closure and a short
    /// free-space extrapolation.
    Heuristic,
}

impl PredictorKind {
    pub fn oracle(reveal_radius: u32) -> Self {
        PredictorKind::Oracle {
            reveal_radius,
            flip_fraction: ORACLE_FLIP_FRACTION,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PredictorKind::Null => "null",
            PredictorKind::Oracle { .. } => "oracle",
            PredictorKind::Heuristic => "heuristic",
        }
    }
}

/// One completed-map hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedMap {
    pub grid: OccupancyGrid,
    pub predictor: &'static str,
    pub member_seed: u64,
}

#[derive(Debug, Clone)]
pub struct PredictionEnsemble {
    members: Vec<PredictedMap>,
    input_fingerprint: u64,
}

impl PredictionEnsemble {
    pub fn members(&self) -> &[PredictedMap] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn input_fingerprint(&self) -> u64 {
        self.input_fingerprint
    }

    /// Per-cell vote: occupied when at least `threshold` of the members say
    /// so, otherwise free when any member knows the cell, else unknown.
    pub fn consensus(&self, threshold: f64) -> OccupancyGrid {
        let m = self.members.len() as f64;
        let mut out = self.members[0].grid.clone();
        for i in 0..out.len() {
            let mut occ = 0usize;
            let mut known = false;
            for member in &self.members {
                match member.grid.at(i) {
                    CellState::Occupied => {
                        occ += 1;
                        known = true
                    }
                    CellState::Free => known = true,
                    CellState::Unknown => {}
                }
            }
            let label = if occ as f64 >= threshold * m {
                CellState::Occupied
            } else if known {
                CellState::Free
            } else {
                CellState::Unknown
            };
            out.set_at(i, label);
        }
        out
    }
}

fn fingerprint(grid: &OccupancyGrid) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &c in grid.cells() {
        h ^= c as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Builds an ensemble of `ensemble_size` completed maps from `local`.
///
/// Member `m` draws from a stream derived from `(rng_seed, m)`, so members
/// are independent of evaluation order. Every member keeps the label of
/// every cell already known in `local`.
pub fn predict(
    kind: PredictorKind,
    local: &OccupancyGrid,
    world: Option<&OccupancyGrid>,
    ensemble_size: usize,
    rng_seed: u64,
) -> Result<PredictionEnsemble, PredictionError> {
    if ensemble_size == 0 {
        return Err(PredictionError::EmptyEnsemble);
    }
    let reveal = match kind {
        PredictorKind::Oracle { reveal_radius, .. } => {
            let world = world.ok_or(PredictionError::MissingWorld)?;
            local.same_shape(world)?;
            Some(reveal_band(local, reveal_radius))
        }
        _ => None,
    };
    let members = (0..ensemble_size)
        .map(|m| {
            let member_seed = seed::derive(rng_seed, seed::Stream::Prediction, m as u64);
            let mut rng = seed::substream(rng_seed, seed::Stream::Prediction, m as u64);
            let grid = match kind {
                PredictorKind::Null => local.clone(),
                PredictorKind::Oracle { flip_fraction, .. } => oracle_member(
                    local,
                    world.expect("checked above"),
                    reveal.as_ref().expect("computed above"),
                    flip_fraction,
                    &mut rng,
                ),
                PredictorKind::Heuristic => heuristic_member(local, &mut rng),
            };
            PredictedMap {
                grid,
                predictor: kind.name(),
                member_seed,
            }
        })
        .collect();
    Ok(PredictionEnsemble {
        members,
        input_fingerprint: fingerprint(local),
    })
}

/// Unknown cells of `local` within Euclidean distance `radius` of a known
/// cell, in row-major order.
pub fn reveal_band(local: &OccupancyGrid, radius: u32) -> Vec<usize> {
    let mut band = CellSet::for_grid(local);
    if radius == 0 {
        return Vec::new();
    }
    let r = radius as i32;
    let r2 = (radius * radius) as i32;
    let disk: Vec<(i32, i32)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| dx * dx + dy * dy <= r2)
        .collect();
    // The nearest known cell to any unknown cell borders unknown space, so
    // stamping disks from boundary cells suffices.
    for p in local.poses() {
        let c = local.get(p).expect("in bounds");
        if !c.is_known()
            || !p
                .neighbors4()
                .iter()
                .any(|&q| local.get(q) == Some(CellState::Unknown))
        {
            continue;
        }
        for &(dx, dy) in &disk {
            let q = Pose::new(p.x + dx, p.y + dy);
            if local.get(q) == Some(CellState::Unknown) {
                band.insert(q);
            }
        }
    }
    band.indices().collect()
}

fn oracle_member(
    local: &OccupancyGrid,
    world: &OccupancyGrid,
    band: &[usize],
    flip_fraction: f64,
    rng: &mut impl Rng,
) -> OccupancyGrid {
    let mut grid = local.clone();
    for &i in band {
        grid.set_at(i, world.at(i));
    }
    let flips = (band.len() as f64 * flip_fraction).floor() as usize;
    if flips > 0 {
        for k in index::sample(rng, band.len(), flips).into_iter() {
            let i = band[k];
            let flipped = match grid.at(i) {
                CellState::Free => CellState::Occupied,
                _ => CellState::Free,
            };
            grid.set_at(i, flipped);
        }
    }
    grid
}

const DIRS: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

fn heuristic_member(local: &OccupancyGrid, rng: &mut impl Rng) -> OccupancyGrid {
    let mut grid = local.clone();

    // 1. continue observed wall segments into unknown space
    let reach = rng.gen_range(4..=WALL_EXTENSION_MAX) as i32;
    for p in local.poses() {
        if local.get(p) != Some(CellState::Occupied) {
            continue;
        }
        for (dx, dy) in DIRS {
            let behind = Pose::new(p.x - dx, p.y - dy);
            let ahead = Pose::new(p.x + dx, p.y + dy);
            if local.get(behind) != Some(CellState::Occupied)
                || local.get(ahead) != Some(CellState::Unknown)
            {
                continue;
            }
            for step in 1..=reach {
                let q = Pose::new(p.x + dx * step, p.y + dy * step);
                if local.get(q) != Some(CellState::Unknown) {
                    break;
                }
                grid.set(q, CellState::Occupied);
            }
        }
    }

    // 2. close rectangles bounded on three sides by walls
    close_rectangles(&mut grid, local, false);
    close_rectangles(&mut grid, local, true);

    // 3. short free-space extrapolation from known free cells
    let depth = rng.gen_range(3..=8u32);
    let mut frontier: Vec<Pose> = grid
        .poses()
        .filter(|&p| grid.get(p) == Some(CellState::Free))
        .collect();
    for _ in 0..depth {
        let mut next = Vec::new();
        for p in frontier {
            for q in p.neighbors4() {
                if grid.get(q) == Some(CellState::Unknown) {
                    grid.set(q, CellState::Free);
                    next.push(q);
                }
            }
        }
        frontier = next;
    }
    grid
}

// Looks for a wall run (horizontal, or vertical when `transpose`) with two
// perpendicular arms of similar length on the same side, and seals the open
// fourth side. Only unknown cells of `local` are written.
fn close_rectangles(grid: &mut OccupancyGrid, local: &OccupancyGrid, transpose: bool) {
    let (major, minor) = if transpose {
        (grid.width() as i32, grid.height() as i32)
    } else {
        (grid.height() as i32, grid.width() as i32)
    };
    let at = |a: i32, b: i32| -> Pose {
        if transpose {
            Pose::new(a, b)
        } else {
            Pose::new(b, a)
        }
    };
    let snapshot = grid.clone();
    let occ = |p: Pose| snapshot.get(p) == Some(CellState::Occupied);
    for line in 0..major {
        let mut b = 0;
        while b < minor {
            if !occ(at(line, b)) {
                b += 1;
                continue;
            }
            let start = b;
            while b < minor && occ(at(line, b)) {
                b += 1;
            }
            let end = b - 1;
            if end - start < 2 {
                continue;
            }
            for side in [1, -1] {
                let arm = |pos: i32| {
                    let mut len = 0;
                    while occ(at(line + side * (len + 1), pos)) {
                        len += 1;
                    }
                    len
                };
                let (l0, l1) = (arm(start), arm(end));
                if l0 < 2 || l1 < 2 || (l0 - l1).abs() > 1 {
                    continue;
                }
                let depth = l0.max(l1);
                let seal = line + side * depth;
                for pos in start..=end {
                    let p = at(seal, pos);
                    if local.get(p) == Some(CellState::Unknown) {
                        grid.set(p, CellState::Occupied);
                    }
                }
                for k in 1..depth {
                    for pos in start + 1..end {
                        let p = at(line + side * k, pos);
                        if local.get(p) == Some(CellState::Unknown) {
                            grid.set(p, CellState::Free);
                        }
                    }
                }
            }
        }
    }
}

/// Ensemble raycaster with a per-(member, pose) scan cache.
///
/// Keep one estimator for as long as the ensemble is fixed; frontier paths
/// and successive path samples share poses, so most scans are reused.
pub struct VisibilityEstimator {
    ensemble: PredictionEnsemble,
    stencil: Arc<RayStencil>,
    threshold: f64,
    disk: Vec<(i32, i32)>,
    scans: HashMap<(usize, Pose), Vec<u32>>,
}

impl VisibilityEstimator {
    pub fn new(
        ensemble: PredictionEnsemble,
        stencil: Arc<RayStencil>,
        threshold: f64,
    ) -> Result<Self, PredictionError> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(PredictionError::BadThreshold(threshold));
        }
        let r = stencil.range();
        let ri = r.floor() as i32;
        let disk = (-ri..=ri)
            .flat_map(|dy| (-ri..=ri).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| ((dx * dx + dy * dy) as f64) <= r * r)
            .collect();
        Ok(VisibilityEstimator {
            ensemble,
            stencil,
            threshold,
            disk,
            scans: HashMap::new(),
        })
    }

    pub fn ensemble(&self) -> &PredictionEnsemble {
        &self.ensemble
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    fn scan(&mut self, member: usize, p: Pose) -> &[u32] {
        let grid = &self.ensemble.members[member].grid;
        let stencil = &self.stencil;
        self.scans.entry((member, p)).or_insert_with(|| {
            let mut hits = Vec::new();
            // an occupied origin (a wall in this hypothesis) sees nothing
            let _ = stencil.scan(grid, p, |i| hits.push(i as u32));
            hits
        })
    }

    /// Visibility mask of one member: flood fill of the union of scans from
    /// `waypoints`, confined to known-free cells within sensing range of some
    /// waypoint.
    pub fn member_mask(&mut self, member: usize, waypoints: &[Pose]) -> CellSet {
        let grid = &self.ensemble.members[member].grid;
        let mut seed = CellSet::for_grid(grid);
        let mut envelope = CellSet::for_grid(grid);
        for &p in waypoints {
            for &(dx, dy) in &self.disk {
                let q = Pose::new(p.x + dx, p.y + dy);
                if grid.contains(q) {
                    envelope.insert_index(grid.index(q));
                }
            }
        }
        for &p in waypoints {
            for &i in self.scan(member, p) {
                seed.insert_index(i as usize);
            }
        }
        let grid = &self.ensemble.members[member].grid;
        flood_fill_by(&seed, grid, |i| {
            grid.at(i) == CellState::Free && envelope.contains_index(i)
        })
    }

    /// Cells visible in at least `threshold` of the members.
    pub fn visibility(&mut self, waypoints: &[Pose]) -> CellSet {
        let proto = &self.ensemble.members[0].grid;
        let mut out = CellSet::for_grid(proto);
        if waypoints.is_empty() {
            return out;
        }
        let m = self.ensemble.len();
        let mut votes = vec![0u16; proto.len()];
        for member in 0..m {
            for i in self.member_mask(member, waypoints).indices() {
                votes[i] += 1;
            }
        }
        let need = self.threshold * m as f64;
        for (i, &v) in votes.iter().enumerate() {
            if v > 0 && v as f64 >= need {
                out.insert_index(i);
            }
        }
        out
    }

    /// Number of voted-visible cells not in `already_known`.
    pub fn expected_gain(&mut self, waypoints: &[Pose], already_known: &CellSet) -> usize {
        self.visibility(waypoints).difference_count(already_known)
    }
}

/// Cells visible along `waypoints` in at least `threshold` of the ensemble
/// members.
pub fn probabilistic_visibility(
    ensemble: &PredictionEnsemble,
    waypoints: &[Pose],
    range: f64,
    n_rays: usize,
    threshold: f64,
) -> Result<CellSet, PredictionError> {
    let stencil = Arc::new(RayStencil::new(range, n_rays));
    Ok(VisibilityEstimator::new(ensemble.clone(), stencil, threshold)?.visibility(waypoints))
}

/// `|probabilistic_visibility(..) \ already_known|`.
pub fn expected_info_gain(
    ensemble: &PredictionEnsemble,
    waypoints: &[Pose],
    range: f64,
    n_rays: usize,
    threshold: f64,
    already_known: &CellSet,
) -> Result<usize, PredictionError> {
    let stencil = Arc::new(RayStencil::new(range, n_rays));
    Ok(VisibilityEstimator::new(ensemble.clone(), stencil, threshold)?
        .expected_gain(waypoints, already_known))
}
