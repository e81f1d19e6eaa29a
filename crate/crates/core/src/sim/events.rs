use serde::{Deserialize, Serialize};

use crate::grid::Pose;
use crate::policy::RobotMode;

/// Why a robot entered relay mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelayReason {
    Criterion,
    Periodic,
    FinalReturn,
    HandoffReceived,
}

impl RelayReason {
    /// Relays chosen by the strategy itself rather than forced by the
    /// horizon or a teammate.
    pub fn is_voluntary(self) -> bool {
        matches!(self, RelayReason::Criterion | RelayReason::Periodic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeReason {
    Relay(RelayReason),
    HandoffGiven,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    ObserveSummary {
        tick: u32,
        robot: usize,
        pos: Pose,
        mode: RobotMode,
        new_cells: usize,
        unreported: usize,
    },
    Exchange {
        tick: u32,
        a: usize,
        b: usize,
        a_pos: Pose,
        b_pos: Pose,
        distance: f64,
        overlap_moved: usize,
    },
    Handoff {
        tick: u32,
        from: usize,
        to: usize,
        from_pos: Pose,
        to_pos: Pose,
        payload: usize,
        union_before: usize,
        union_after: usize,
        digest_before: u64,
        digest_after: u64,
    },
    RelayStart {
        tick: u32,
        robot: usize,
        pos: Pose,
        reason: RelayReason,
        unreported: usize,
        t_to_base: u32,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        rate_now: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        rate_pred: Option<f64>,
    },
    Report {
        tick: u32,
        robot: usize,
        pos: Pose,
        delivered: usize,
        base_known: usize,
    },
    Failure {
        tick: u32,
        robot: usize,
        pos: Pose,
        lost: usize,
    },
    Waypoint {
        tick: u32,
        robot: usize,
        target: Pose,
        gain: usize,
        travel_time: u32,
        score: f64,
        t_front_to_base: u32,
    },
    ModeChange {
        tick: u32,
        robot: usize,
        from: RobotMode,
        to: RobotMode,
        reason: ModeReason,
    },
}

impl Event {
    pub fn tick(&self) -> u32 {
        match *self {
            Event::ObserveSummary { tick, .. }
            | Event::Exchange { tick, .. }
            | Event::Handoff { tick, .. }
            | Event::RelayStart { tick, .. }
            | Event::Report { tick, .. }
            | Event::Failure { tick, .. }
            | Event::Waypoint { tick, .. }
            | Event::ModeChange { tick, .. } => tick,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Event::ObserveSummary { .. } => "observe_summary",
            Event::Exchange { .. } => "exchange",
            Event::Handoff { .. } => "handoff",
            Event::RelayStart { .. } => "relay_start",
            Event::Report { .. } => "report",
            Event::Failure { .. } => "failure",
            Event::Waypoint { .. } => "waypoint",
            Event::ModeChange { .. } => "mode_change",
        }
    }
}

/// One JSON object per line.
pub fn to_jsonl(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str) -> Result<Vec<Event>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
