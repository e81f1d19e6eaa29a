use std::collections::BTreeMap;

use crate::grid::{CellSet, OccupancyGrid, Path, Pose};
use crate::policy::{CommitmentKind, RobotMode};
use crate::prediction::VisibilityEstimator;

/// Last trajectory and plan another robot shared, keyed by its id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Commitments {
    entries: BTreeMap<usize, SharedIntent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharedIntent {
    pub trajectory: Vec<Pose>,
    pub plan: Vec<Pose>,
}

impl Commitments {
    pub fn record(&mut self, robot: usize, trajectory: &[Pose], plan: &[Pose]) {
        self.entries.insert(
            robot,
            SharedIntent {
                trajectory: trajectory.to_vec(),
                plan: plan.to_vec(),
            },
        );
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn robots(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn get(&self, robot: usize) -> Option<&SharedIntent> {
        self.entries.get(&robot)
    }

    /// Every shared pose list with its kind.
    pub fn iter(&self) -> impl Iterator<Item = (CommitmentKind, &[Pose])> + Clone + '_ {
        self.entries.values().flat_map(|s| {
            [
                (CommitmentKind::Trajectory, s.trajectory.as_slice()),
                (CommitmentKind::Plan, s.plan.as_slice()),
            ]
        })
    }

    pub fn contains_pose(&self, p: Pose) -> bool {
        self.iter().any(|(_, poses)| poses.contains(&p))
    }
}

/// Context of the frontier an exploring robot is heading to.
pub(crate) struct Target {
    pub centroid: Pose,
    pub estimator: VisibilityEstimator,
    /// Sample poses of the current plan, with their offset along it.
    pub samples: Vec<(usize, Pose)>,
    /// Steps taken along the current plan.
    pub progress: usize,
    pub t_front_to_base: u32,
}

impl std::fmt::Debug for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Target")
            .field("centroid", &self.centroid)
            .field("progress", &self.progress)
            .field("t_front_to_base", &self.t_front_to_base)
            .finish_non_exhaustive()
    }
}

#[derive(Debug)]
pub struct RobotState {
    pub id: usize,
    pub pose: Pose,
    pub mode: RobotMode,
    pub local_map: OccupancyGrid,
    /// Observed cells this robot is still responsible for delivering.
    pub unreported: CellSet,
    /// Cells known to have reached the base.
    pub reported: CellSet,
    /// Cells whose delivery is some other robot's responsibility.
    pub delegated: CellSet,
    /// Remaining path; `plan[0] == pose` when non-empty.
    pub plan: Path,
    pub trajectory: Vec<Pose>,
    pub commitments: Commitments,
    pub alive: bool,
    pub last_relay_start: u32,
    /// Committed to the end-of-mission trip home; stays in relay mode.
    pub final_return: bool,
    /// Robot that last handed this one its relay duty; the duty is never
    /// handed straight back to it.
    pub relay_from: Option<usize>,
    pub(crate) target: Option<Target>,
}

impl RobotState {
    pub fn new(id: usize, start: Pose, blank: &OccupancyGrid) -> Self {
        RobotState {
            id,
            pose: start,
            mode: RobotMode::Explore,
            local_map: blank.clone(),
            unreported: CellSet::for_grid(blank),
            reported: CellSet::for_grid(blank),
            delegated: CellSet::for_grid(blank),
            plan: Vec::new(),
            trajectory: vec![start],
            commitments: Commitments::default(),
            alive: true,
            last_relay_start: 0,
            final_return: false,
            relay_from: None,
            target: None,
        }
    }

    pub fn target_centroid(&self) -> Option<Pose> {
        self.target.as_ref().map(|t| t.centroid)
    }

    pub(crate) fn clear_target(&mut self) {
        self.target = None;
    }
}
