use super::{CellSet, CellState, OccupancyGrid, Pose};

/// One frontier cluster with its goal cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    /// Cluster cell nearest to the arithmetic mean of the cluster.
    pub centroid: Pose,
    /// Cluster cells in row-major order.
    pub cells: Vec<Pose>,
}

fn is_frontier_cell(map: &OccupancyGrid, p: Pose) -> bool {
    map.get(p) == Some(CellState::Free)
        && p
            .neighbors4()
            .iter()
            .any(|&q| map.get(q) == Some(CellState::Unknown))
}

/// Free cells 4-adjacent to unknown space, grouped into 8-connected clusters.
/// Clusters smaller than `min_region` cells are dropped. Output is ordered by
/// each cluster's first cell in row-major order.
pub fn extract_frontiers(local: &OccupancyGrid, min_region: usize) -> Vec<Frontier> {
    assert!(min_region >= 1, "min_region must be at least 1");
    let mut mask = CellSet::for_grid(local);
    for p in local.poses() {
        if is_frontier_cell(local, p) {
            mask.insert(p);
        }
    }

    let mut seen = CellSet::for_grid(local);
    let mut out = Vec::new();
    for start in mask.iter().collect::<Vec<_>>() {
        if !seen.insert(start) {
            continue;
        }
        let mut cluster = vec![start];
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            for q in p.neighbors8() {
                if mask.contains(q) && seen.insert(q) {
                    cluster.push(q);
                    stack.push(q);
                }
            }
        }
        if cluster.len() < min_region {
            continue;
        }
        cluster.sort();
        let n = cluster.len() as f64;
        let mx = cluster.iter().map(|p| p.x as f64).sum::<f64>() / n;
        let my = cluster.iter().map(|p| p.y as f64).sum::<f64>() / n;
        let centroid = *cluster
            .iter()
            .min_by(|a, b| {
                let da = (a.x as f64 - mx).powi(2) + (a.y as f64 - my).powi(2);
                let db = (b.x as f64 - mx).powi(2) + (b.y as f64 - my).powi(2);
                da.total_cmp(&db).then(a.cmp(b))
            })
            .expect("cluster is non-empty");
        out.push(Frontier {
            centroid,
            cells: cluster,
        });
    }
    out
}

/// Whether `p` is still a frontier cell of `map`.
pub(crate) fn is_frontier(map: &OccupancyGrid, p: Pose) -> bool {
    is_frontier_cell(map, p)
}
