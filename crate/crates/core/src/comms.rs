//! Range-gated communication between robots and with the base station.
//!
//! Robots within range fuse maps, merge their reported and delegated views
//! and swap trajectories and plans. A relaying robot may hand its payload to
//! a teammate strictly closer to the base. Reporting uploads the robot map
//! to the base and downloads the base map in return.

use thiserror::Error;

use crate::grid::{astar_known, fuse_into, CellSet, GridError, OccupancyGrid, Pose};
use crate::policy::RobotMode;
use crate::sim::RobotState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommsError {
    #[error("robots {a} and {b} are {distance:.3} cells apart, out of range {range}")]
    OutOfRange {
        a: usize,
        b: usize,
        distance: f64,
        range: f64,
    },
    #[error("robot {0} is not alive")]
    Dead(usize),
    #[error("robot {robot} at {pose} is out of base range")]
    BaseOutOfRange { robot: usize, pose: Pose },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Strictly closer than `range` (Euclidean).
pub fn in_range(a: Pose, b: Pose, range: f64) -> bool {
    a.dist(b) < range
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeSummary {
    pub distance: f64,
    /// Cells both robots carried; the one farther from base delegated them.
    pub overlap_moved: usize,
}

/// Records `from`'s trajectory and plan in `to`'s commitments. Only a plan
/// toward a frontier claims territory; a trip home is shared as empty.
pub fn share_intent(from: &RobotState, to: &mut RobotState) {
    let plan: &[Pose] = if from.mode == RobotMode::Explore && from.target_centroid().is_some() {
        &from.plan
    } else {
        &[]
    };
    to.commitments.record(from.id, &from.trajectory, plan);
}

/// Pairwise exchange between two alive robots in range.
///
/// Cells carried by both are kept by the robot closer to `base` (lower id on
/// ties) and marked delegated by the other. Commitments are only recorded
/// when `share_commitments` is set.
pub fn exchange(
    a: &mut RobotState,
    b: &mut RobotState,
    base: Pose,
    range: f64,
    share_commitments: bool,
) -> Result<ExchangeSummary, CommsError> {
    for r in [&*a, &*b] {
        if !r.alive {
            return Err(CommsError::Dead(r.id));
        }
    }
    let distance = a.pose.dist(b.pose);
    if !in_range(a.pose, b.pose, range) {
        return Err(CommsError::OutOfRange {
            a: a.id,
            b: b.id,
            distance,
            range,
        });
    }

    let overlap = a.unreported.intersection(&b.unreported);
    let overlap_moved = overlap.len();
    if overlap_moved > 0 {
        let (da, db) = (a.pose.dist_sq(base), b.pose.dist_sq(base));
        let a_keeps = da < db || (da == db && a.id < b.id);
        let giver = if a_keeps { &mut *b } else { &mut *a };
        giver.unreported.difference_with(&overlap);
        giver.delegated.union_with(&overlap);
    }

    fuse_into(&mut a.local_map, &b.local_map)?;
    b.local_map.clone_from(&a.local_map);

    a.reported.union_with(&b.reported);
    b.reported.clone_from(&a.reported);
    a.delegated.union_with(&b.delegated);
    b.delegated.clone_from(&a.delegated);
    for r in [&mut *a, &mut *b] {
        r.unreported.difference_with(&r.reported);
        // a robot's own payload is never delegated away in its own view
        r.delegated.difference_with(&r.unreported);
        r.delegated.difference_with(&r.reported);
    }

    if share_commitments {
        share_intent(b, a);
        share_intent(a, b);
    }
    Ok(ExchangeSummary {
        distance,
        overlap_moved,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandoffOutcome {
    pub payload: usize,
    /// The receiver was exploring and now relays.
    pub receiver_switched: bool,
}

/// Hands `giver`'s payload to `receiver` when the giver is relaying and the
/// receiver is strictly closer to `base`. A giver already on its final trip
/// home keeps its payload, and a duty never goes straight back to the robot
/// it came from.
pub fn try_handoff(
    giver: &mut RobotState,
    receiver: &mut RobotState,
    base: Pose,
) -> Result<Option<HandoffOutcome>, CommsError> {
    if giver.mode != RobotMode::Relay || giver.final_return || !giver.alive || !receiver.alive {
        return Ok(None);
    }
    if receiver.pose.dist_sq(base) >= giver.pose.dist_sq(base)
        || giver.relay_from == Some(receiver.id)
    {
        return Ok(None);
    }
    let payload = std::mem::replace(&mut giver.unreported, CellSet::for_grid(&giver.local_map));
    receiver.unreported.union_with(&payload);
    receiver.delegated.difference_with(&payload);
    giver.delegated.union_with(&payload);
    giver.mode = RobotMode::Explore;
    giver.relay_from = None;
    giver.plan.clear();
    giver.clear_target();

    receiver.relay_from = Some(giver.id);
    let receiver_switched = receiver.mode != RobotMode::Relay;
    if receiver_switched {
        receiver.mode = RobotMode::Relay;
        receiver.clear_target();
        receiver.plan = astar_known(&receiver.local_map, receiver.pose, base)?;
    }
    Ok(Some(HandoffOutcome {
        payload: payload.len(),
        receiver_switched,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportSummary {
    /// Cells the base learned from this report.
    pub delivered: usize,
    pub mode_reset: bool,
}

/// Upload to and download from the base map. The robot returns to explore
/// mode unless it is on its final trip home.
pub fn report_to_base(
    robot: &mut RobotState,
    base_map: &mut OccupancyGrid,
    base: Pose,
    range: f64,
) -> Result<ReportSummary, CommsError> {
    if !robot.alive {
        return Err(CommsError::Dead(robot.id));
    }
    if !in_range(robot.pose, base, range) {
        return Err(CommsError::BaseOutOfRange {
            robot: robot.id,
            pose: robot.pose,
        });
    }
    let delivered = fuse_into(base_map, &robot.local_map)?;
    fuse_into(&mut robot.local_map, base_map)?;
    robot.reported = base_map.known_cells();
    robot.unreported.clear();
    robot.delegated.difference_with(&robot.reported);
    let mode_reset = robot.mode == RobotMode::Relay && !robot.final_return;
    if mode_reset {
        robot.mode = RobotMode::Explore;
        robot.relay_from = None;
        robot.plan.clear();
    }
    Ok(ReportSummary {
        delivered,
        mode_reset,
    })
}
