use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use super::{CellSet, CellState, GridError, OccupancyGrid, Path, Pose};

/// Which cells a planner may step onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Passability {
    /// Free and unknown cells (optimistic planning towards frontiers).
    Optimistic,
    /// Only cells known to be free.
    KnownFree,
}

impl Passability {
    #[inline]
    fn allows(self, c: CellState) -> bool {
        match self {
            Passability::Optimistic => c != CellState::Occupied,
            Passability::KnownFree => c == CellState::Free,
        }
    }
}

const UNREACHED: u32 = u32::MAX;

/// Minimum-step 4-connected path over free and unknown cells.
pub fn astar(plan_map: &OccupancyGrid, start: Pose, goal: Pose) -> Result<Path, GridError> {
    astar_with(plan_map, start, goal, Passability::Optimistic)
}

/// Minimum-step path restricted to cells known to be free.
pub fn astar_known(plan_map: &OccupancyGrid, start: Pose, goal: Pose) -> Result<Path, GridError> {
    astar_with(plan_map, start, goal, Passability::KnownFree)
}

fn astar_with(
    map: &OccupancyGrid,
    start: Pose,
    goal: Pose,
    pass: Passability,
) -> Result<Path, GridError> {
    for p in [start, goal] {
        if !map.get(p).is_some_and(|c| pass.allows(c)) {
            return Err(GridError::BlockedEndpoint(p));
        }
    }
    if start == goal {
        return Ok(vec![start]);
    }
    let n = map.len();
    let mut g = vec![UNREACHED; n];
    let mut parent = vec![UNREACHED; n];
    let mut open = BinaryHeap::new();
    let s = map.index(start);
    let t = map.index(goal);
    g[s] = 0;
    // (f, prefer deeper nodes on ties, index)
    open.push(Reverse((start.manhattan(goal), Reverse(0u32), s)));
    while let Some(Reverse((_, Reverse(gc), cur))) = open.pop() {
        if gc > g[cur] {
            continue;
        }
        if cur == t {
            return Ok(walk_back(map, &parent, s, t));
        }
        let p = map.pose_of(cur);
        for q in p.neighbors4() {
            let Some(c) = map.get(q) else { continue };
            if !pass.allows(c) {
                continue;
            }
            let qi = map.index(q);
            let ng = gc + 1;
            if ng < g[qi] {
                g[qi] = ng;
                parent[qi] = cur as u32;
                open.push(Reverse((ng + q.manhattan(goal), Reverse(ng), qi)));
            }
        }
    }
    Err(GridError::Unreachable {
        from: start,
        to: goal,
    })
}

fn walk_back(map: &OccupancyGrid, parent: &[u32], s: usize, t: usize) -> Path {
    let mut path = vec![map.pose_of(t)];
    let mut cur = t;
    while cur != s {
        cur = parent[cur] as usize;
        path.push(map.pose_of(cur));
    }
    path.reverse();
    path
}

/// Breadth-first step distances from one source, with a shortest-path tree.
#[derive(Debug, Clone)]
pub struct DistanceField {
    width: usize,
    source: usize,
    dist: Vec<u32>,
    parent: Vec<u32>,
}

impl DistanceField {
    pub fn new(map: &OccupancyGrid, source: Pose, pass: Passability) -> Self {
        let n = map.len();
        let mut dist = vec![UNREACHED; n];
        let mut parent = vec![UNREACHED; n];
        let s = map.index(source);
        let mut queue = VecDeque::new();
        if map.get(source).is_some_and(|c| pass.allows(c)) {
            dist[s] = 0;
            queue.push_back(s);
        }
        while let Some(cur) = queue.pop_front() {
            let p = map.pose_of(cur);
            for q in p.neighbors4() {
                let Some(c) = map.get(q) else { continue };
                if !pass.allows(c) {
                    continue;
                }
                let qi = map.index(q);
                if dist[qi] == UNREACHED {
                    dist[qi] = dist[cur] + 1;
                    parent[qi] = cur as u32;
                    queue.push_back(qi);
                }
            }
        }
        DistanceField {
            width: map.width(),
            source: s,
            dist,
            parent,
        }
    }

    fn idx(&self, p: Pose) -> Option<usize> {
        let h = self.dist.len() / self.width;
        if p.x < 0 || p.y < 0 || p.x as usize >= self.width || p.y as usize >= h {
            None
        } else {
            Some(p.y as usize * self.width + p.x as usize)
        }
    }

    /// Step count from the source, `None` when unreachable.
    pub fn distance(&self, p: Pose) -> Option<u32> {
        self.idx(p)
            .map(|i| self.dist[i])
            .filter(|&d| d != UNREACHED)
    }

    /// Shortest path from the source to `p`.
    pub fn path_to(&self, p: Pose) -> Option<Path> {
        let t = self.idx(p)?;
        if self.dist[t] == UNREACHED {
            return None;
        }
        let mut path = Vec::with_capacity(self.dist[t] as usize + 1);
        let mut cur = t;
        path.push(p);
        while cur != self.source {
            cur = self.parent[cur] as usize;
            path.push(Pose::new(
                (cur % self.width) as i32,
                (cur / self.width) as i32,
            ));
        }
        path.reverse();
        Some(path)
    }
}

/// 4-connected closure of `seed` through non-occupied cells of `domain`.
/// Occupied seed cells are dropped.
pub fn flood_fill(seed: &CellSet, domain: &OccupancyGrid) -> CellSet {
    flood_fill_by(seed, domain, |i| domain.at(i) != CellState::Occupied)
}

/// Flood fill over the cells of `shape` for which `passable(index)` holds.
pub(crate) fn flood_fill_by(
    seed: &CellSet,
    shape: &OccupancyGrid,
    passable: impl Fn(usize) -> bool,
) -> CellSet {
    let mut out = CellSet::for_grid(shape);
    let mut queue: VecDeque<usize> = VecDeque::new();
    for i in seed.indices() {
        if passable(i) && out.insert_index(i) {
            queue.push_back(i);
        }
    }
    while let Some(cur) = queue.pop_front() {
        for q in shape.pose_of(cur).neighbors4() {
            if shape.contains(q) {
                let qi = shape.index(q);
                if passable(qi) && out.insert_index(qi) {
                    queue.push_back(qi);
                }
            }
        }
    }
    out
}

/// Ticks to traverse `path` at `speed` cells per tick: ceil(steps / speed).
pub fn travel_time(path: &[Pose], speed: u32) -> u32 {
    assert!(speed > 0, "speed must be positive");
    let steps = path.len().saturating_sub(1) as u32;
    steps.div_ceil(speed)
}

/// Every `interval`-th pose of `path`, always including the first and last.
pub fn path_sample(path: &[Pose], interval: usize) -> Vec<Pose> {
    assert!(interval >= 1, "interval must be at least 1");
    let mut out: Vec<Pose> = path.iter().step_by(interval).copied().collect();
    if let Some(&last) = path.last() {
        if (path.len() - 1) % interval != 0 {
            out.push(last);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(w: usize, h: usize) -> OccupancyGrid {
        OccupancyGrid::filled(w, h, 1.0, CellState::Free)
    }

    fn is_valid_path(map: &OccupancyGrid, path: &[Pose]) -> bool {
        path.windows(2).all(|w| w[0].manhattan(w[1]) == 1)
            && path.iter().all(|&p| map.get(p).is_some_and(|c| c != CellState::Occupied))
    }

    #[test]
    fn astar_trivial_and_open() {
        let g = open(5, 5);
        assert_eq!(astar(&g, Pose::new(1, 1), Pose::new(1, 1)).unwrap(), vec![Pose::new(1, 1)]);
        let p = astar(&g, Pose::new(0, 0), Pose::new(4, 4)).unwrap();
        assert_eq!(p.len() - 1, 8);
        assert!(is_valid_path(&g, &p));
        assert_eq!(p[0], Pose::new(0, 0));
        assert_eq!(*p.last().unwrap(), Pose::new(4, 4));
    }

    #[test]
    fn astar_unreachable_and_unknown() {
        let mut g = open(5, 3);
        for y in 0..3 {
            g.set(Pose::new(2, y), CellState::Occupied);
        }
        assert!(matches!(
            astar(&g, Pose::new(0, 0), Pose::new(4, 0)),
            Err(GridError::Unreachable { .. })
        ));
        g.set(Pose::new(2, 1), CellState::Unknown);
        assert_eq!(astar(&g, Pose::new(0, 1), Pose::new(4, 1)).unwrap().len(), 5);
        assert!(astar_known(&g, Pose::new(0, 1), Pose::new(4, 1)).is_err());
    }

    #[test]
    fn distance_field_matches_astar() {
        let mut g = open(8, 6);
        for y in 0..5 {
            g.set(Pose::new(4, y), CellState::Occupied);
        }
        let f = DistanceField::new(&g, Pose::new(0, 0), Passability::Optimistic);
        let goal = Pose::new(7, 0);
        let a = astar(&g, Pose::new(0, 0), goal).unwrap();
        assert_eq!(f.distance(goal), Some(a.len() as u32 - 1));
        let p = f.path_to(goal).unwrap();
        assert_eq!(p.len(), a.len());
        assert!(is_valid_path(&g, &p));
    }

    #[test]
    fn flood_fill_rooms() {
        let g = OccupancyGrid::parse(
            "9 5 1\n#########\n#...#...#\n#...#...#\n#...#...#\n#########\n",
        )
        .unwrap();
        let mut seed = CellSet::for_grid(&g);
        assert!(flood_fill(&seed, &g).is_empty());
        seed.insert(Pose::new(1, 1));
        assert_eq!(flood_fill(&seed, &g).len(), 9);
        seed.insert(Pose::new(7, 3));
        seed.insert(Pose::new(0, 0));
        let both = flood_fill(&seed, &g);
        assert_eq!(both.len(), 18);
        assert!(!both.contains(Pose::new(0, 0)));
    }

    #[test]
    fn travel_time_ceil() {
        let p = |n: usize| vec![Pose::new(0, 0); n + 1];
        assert_eq!(travel_time(&p(0), 1), 0);
        assert_eq!(travel_time(&p(8), 1), 8);
        assert_eq!(travel_time(&p(9), 2), 5);
    }

    #[test]
    fn path_sampling() {
        let path: Vec<Pose> = (0..=50).map(|x| Pose::new(x, 0)).collect();
        let s = path_sample(&path, 25);
        assert_eq!(s, vec![Pose::new(0, 0), Pose::new(25, 0), Pose::new(50, 0)]);
        assert_eq!(path_sample(&path[..10], 25), vec![Pose::new(0, 0), Pose::new(9, 0)]);
        assert_eq!(path_sample(&path, 1), path);
        assert_eq!(path_sample(&path[..1], 25), vec![Pose::new(0, 0)]);
    }
}
