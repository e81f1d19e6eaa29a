//! Relay criteria and frontier selection properties.

use proptest::prelude::*;

use relaysim::grid::Pose;
use relaysim::policy::{
    relay_decision, relay_decision_safe, score_frontiers, select_frontier, Candidate,
    PenaltyParams, ScoredFrontier,
};

fn rate() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), 0.0f64..50.0, Just(f64::INFINITY)]
}

proptest! {
    #[test]
    fn equal_survival_reduces_to_plain(now in rate(), pred in 0.0f64..50.0, s in 0.0f64..=1.0, alpha in 1.0f64..10.0) {
        prop_assert_eq!(relay_decision_safe(now, pred, s, s, alpha).unwrap(), relay_decision(now, pred, alpha));
    }

    #[test]
    fn common_survival_factor_never_flips(
        now in rate(), pred in 0.0f64..50.0,
        a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 1e-6f64..=1.0, alpha in 1.0f64..10.0,
    ) {
        let (s_pred, s_now) = if a <= b { (a, b) } else { (b, a) };
        prop_assert_eq!(
            relay_decision_safe(now, pred, c * s_now, c * s_pred, alpha).unwrap(),
            relay_decision_safe(now, pred, s_now, s_pred, alpha).unwrap()
        );
    }

    #[test]
    fn more_now_or_less_pred_never_unrelays(
        now in 0.0f64..50.0, pred in 0.0f64..50.0, up in 0.0f64..20.0, down in 0.0f64..1.0, alpha in 1.0f64..10.0,
    ) {
        if relay_decision(now, pred, alpha) {
            prop_assert!(relay_decision(now + up, pred, alpha));
            prop_assert!(relay_decision(now, pred * down, alpha));
        }
    }

    #[test]
    fn larger_alpha_relays_on_a_subset(now in rate(), pred in 0.0f64..50.0, a1 in 1.0f64..10.0, extra in 0.0f64..10.0) {
        if relay_decision(now, pred, a1 + extra) {
            prop_assert!(relay_decision(now, pred, a1));
        }
    }

    #[test]
    fn unordered_survival_is_rejected(s_now in 0.0f64..0.99, gap in 1e-6f64..0.01) {
        prop_assert!(relay_decision_safe(1.0, 1.0, s_now, s_now + gap, 2.0).is_err());
    }

    #[test]
    fn selection_survives_positive_rescaling(
        items in prop::collection::vec((0usize..200, 0u32..60, 0i32..30, 0i32..30), 1..12),
        scale in 0.01f64..100.0,
    ) {
        let cands: Vec<Candidate> = items
            .iter()
            .map(|&(gain, travel_time, x, y)| Candidate { centroid: Pose::new(x, y), gain, travel_time })
            .collect();
        let none: [(relaysim::policy::CommitmentKind, &[Pose]); 0] = [];
        let penalty = PenaltyParams { eps_traj: 3.0, eps_plan: 3.0, gamma: 0.5 };
        let scored = score_frontiers(&cands, none.iter().copied(), &penalty);
        let scaled: Vec<ScoredFrontier> = scored
            .iter()
            .map(|s| ScoredFrontier { score: s.score * scale, ..s.clone() })
            .collect();
        let a = select_frontier(&scored).unwrap();
        let b = select_frontier(&scaled).unwrap();
        // the winner is a maximal-score candidate either way
        prop_assert!(scored.iter().all(|s| s.score <= a.score));
        prop_assert!(scaled.iter().all(|s| s.score <= b.score));
        if scored.iter().filter(|s| s.score == a.score).count() == 1 {
            prop_assert_eq!(&a.centroid, &b.centroid);
        }
    }
}

#[test]
fn survival_weighting_flips_a_decision() {
    assert!(!relay_decision(10.0, 5.5, 2.0));
    assert!(relay_decision_safe(10.0, 5.5, 0.95, 0.80, 2.0).unwrap());
    assert!(relay_decision_safe(1.0, 3.0, 0.5, 0.0, 2.0).unwrap());
}

#[test]
fn ties_prefer_shorter_trip_then_smaller_row() {
    let s = |x, y, t, score| ScoredFrontier {
        centroid: Pose::new(x, y),
        gain: 1,
        travel_time: t,
        penalized: false,
        score,
    };
    let list = [s(0, 0, 9, 1.0), s(5, 5, 5, 1.0), s(9, 9, 1, 0.5)];
    assert_eq!(select_frontier(&list).unwrap().centroid, Pose::new(5, 5));
    let list = [s(1, 4, 5, 1.0), s(7, 2, 5, 1.0)];
    assert_eq!(select_frontier(&list).unwrap().centroid, Pose::new(7, 2));
    assert!(select_frontier(&[]).is_none());
}
