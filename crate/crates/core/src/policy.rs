//! Frontier scoring and relay decision rules.
//!
//! A robot in explore mode compares two delivery rates every tick:
//!
//! ```text
//! rate_now  = unreported / t_to_base
//! rate_pred = (unreported + expected_gain) / (t_to_front + t_front_to_base)
//! ```
//!
//! and relays when `rate_now > alpha * rate_pred`. The survival-aware
//! variant weights each side by the probability of living long enough to
//! complete that delivery.

use std::cmp::Ordering;

use thiserror::Error;

use crate::failure::WeibullParams;
use crate::grid::Pose;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("predicted delivery time is zero")]
    ZeroDenominator,
    #[error("survival weights must satisfy 0 <= s_pred <= s_now <= 1, got s_now={s_now}, s_pred={s_pred}")]
    SurvivalOrder { s_now: f64, s_pred: f64 },
    #[error("alpha must be >= 1, got {0}")]
    Alpha(f64),
    #[error("period must be >= 1")]
    Period,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotMode {
    Explore,
    Relay,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum RelayStrategy {
    Proid { alpha: f64 },
    ProidSafe { alpha: f64, weibull: WeibullParams },
    Periodic { period: u32 },
    FinalOnly,
}

impl RelayStrategy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        match *self {
            RelayStrategy::Proid { alpha } | RelayStrategy::ProidSafe { alpha, .. } => {
                if alpha >= 1.0 {
                    Ok(())
                } else {
                    Err(PolicyError::Alpha(alpha))
                }
            }
            RelayStrategy::Periodic { period } if period < 1 => Err(PolicyError::Period),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RelayStrategy::Proid { .. } => "proid",
            RelayStrategy::ProidSafe { .. } => "proid_safe",
            RelayStrategy::Periodic { .. } => "periodic",
            RelayStrategy::FinalOnly => "final_only",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            RelayStrategy::Proid { alpha } | RelayStrategy::ProidSafe { alpha, .. } => Some(alpha),
            _ => None,
        }
    }
}

/// Delivery rate in cells per tick. Infinite when the payload is positive
/// and the delivery time is zero.
pub type Rate = f64;

pub fn roid_now(unreported: usize, t_to_base: u32) -> Rate {
    if t_to_base == 0 {
        if unreported == 0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        unreported as f64 / t_to_base as f64
    }
}

pub fn proid(
    unreported: usize,
    expected_gain: usize,
    t_to_front: u32,
    t_front_to_base: u32,
) -> Result<Rate, PolicyError> {
    let t = t_to_front as u64 + t_front_to_base as u64;
    if t == 0 {
        return Err(PolicyError::ZeroDenominator);
    }
    Ok((unreported + expected_gain) as f64 / t as f64)
}

/// `rate_now > alpha * rate_pred`.
pub fn relay_decision(rate_now: Rate, rate_pred: Rate, alpha: f64) -> bool {
    if rate_now <= 0.0 {
        return false;
    }
    rate_now > alpha * rate_pred
}

/// `rate_now * s_now > alpha * rate_pred * s_pred`.
pub fn relay_decision_safe(
    rate_now: Rate,
    rate_pred: Rate,
    s_now: f64,
    s_pred: f64,
    alpha: f64,
) -> Result<bool, PolicyError> {
    if !(0.0 <= s_pred && s_pred <= s_now && s_now <= 1.0) {
        return Err(PolicyError::SurvivalOrder { s_now, s_pred });
    }
    if s_pred == s_now {
        return Ok(relay_decision(rate_now, rate_pred, alpha));
    }
    if rate_now <= 0.0 {
        return Ok(false);
    }
    // Both sides share the factor s_now; dividing it out keeps the decision
    // exactly invariant to a common rescaling of the survival weights.
    Ok(rate_now > alpha * rate_pred * (s_pred / s_now))
}

pub fn final_return_due(t: u32, horizon: u32, t_to_base: u32, margin: u32) -> bool {
    horizon.saturating_sub(t) <= t_to_base.saturating_add(margin)
}

pub fn periodic_due(t: u32, period: u32, last_relay_start: u32, mode: RobotMode) -> bool {
    mode == RobotMode::Explore && t.saturating_sub(last_relay_start) >= period
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitmentKind {
    Trajectory,
    Plan,
}

/// Penalty radii (cells) and magnitude for frontiers near other robots'
/// commitments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    pub eps_traj: f64,
    pub eps_plan: f64,
    pub gamma: f64,
}

/// A reachable frontier candidate before penalties.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub centroid: Pose,
    pub gain: usize,
    pub travel_time: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredFrontier {
    pub centroid: Pose,
    pub gain: usize,
    pub travel_time: u32,
    pub penalized: bool,
    pub score: f64,
}

/// Scores candidates by `gain / (1 + travel_time)`, minus `gamma` when a
/// commitment of the matching kind lies within its radius of the centroid.
pub fn score_frontiers<'a>(
    candidates: &[Candidate],
    commitments: impl Iterator<Item = (CommitmentKind, &'a [Pose])> + Clone,
    penalty: &PenaltyParams,
) -> Vec<ScoredFrontier> {
    candidates
        .iter()
        .map(|c| {
            let penalized = commitments.clone().any(|(kind, poses)| {
                let eps = match kind {
                    CommitmentKind::Trajectory => penalty.eps_traj,
                    CommitmentKind::Plan => penalty.eps_plan,
                };
                let eps2 = eps * eps;
                poses
                    .iter()
                    .any(|p| (p.dist_sq(c.centroid) as f64) <= eps2)
            });
            let base = c.gain as f64 / (1.0 + c.travel_time as f64);
            ScoredFrontier {
                centroid: c.centroid,
                gain: c.gain,
                travel_time: c.travel_time,
                penalized,
                score: if penalized { base - penalty.gamma } else { base },
            }
        })
        .collect()
}

/// Highest score; ties go to the shorter trip, then the smaller `(y, x)`.
pub fn select_frontier(scored: &[ScoredFrontier]) -> Option<&ScoredFrontier> {
    scored.iter().min_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then(a.travel_time.cmp(&b.travel_time))
            .then(a.centroid.cmp(&b.centroid))
    })
}

/// Inputs to the per-tick relay check of an exploring robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayInputs {
    pub now: u32,
    pub unreported: usize,
    pub expected_gain: usize,
    pub t_to_base: u32,
    pub t_to_front: u32,
    pub t_front_to_base: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayVerdict {
    pub relay: bool,
    pub rate_now: Rate,
    pub rate_pred: Rate,
    pub s_now: f64,
    pub s_pred: f64,
}

/// Evaluates the voluntary relay criterion of `strategy`. Returns `None`
/// for strategies without one, or when the predicted delivery time is zero.
pub fn evaluate_criterion(strategy: &RelayStrategy, x: &RelayInputs) -> Option<RelayVerdict> {
    let (alpha, weibull) = match *strategy {
        RelayStrategy::Proid { alpha } => (alpha, None),
        RelayStrategy::ProidSafe { alpha, weibull } => (alpha, Some(weibull)),
        _ => return None,
    };
    let rate_now = roid_now(x.unreported, x.t_to_base);
    let rate_pred = proid(x.unreported, x.expected_gain, x.t_to_front, x.t_front_to_base).ok()?;
    match weibull {
        None => Some(RelayVerdict {
            relay: relay_decision(rate_now, rate_pred, alpha),
            rate_now,
            rate_pred,
            s_now: 1.0,
            s_pred: 1.0,
        }),
        Some(w) => {
            let (s_now, s_pred) = w
                .survival_weights(
                    x.now as f64,
                    x.t_to_base as f64,
                    x.t_to_front as f64,
                    x.t_front_to_base as f64,
                )
                .expect("travel times are non-negative");
            // A detour through the frontier can be shorter than the known
            // route home; survival is then ordered the other way round.
            let relay = if s_pred <= s_now {
                relay_decision_safe(rate_now, rate_pred, s_now, s_pred, alpha)
                    .expect("ordered weights")
            } else {
                rate_now > 0.0 && rate_now * s_now > alpha * rate_pred * s_pred
            };
            Some(RelayVerdict {
                relay,
                rate_now,
                rate_pred,
                s_now,
                s_pred,
            })
        }
    }
}
