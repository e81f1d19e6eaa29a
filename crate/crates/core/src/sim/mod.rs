//! Deterministic tick engine.
//!
//! Each tick runs the same phases for the whole team, in order: failures,
//! observation, pairwise communication (ascending id pairs), the final
//! return guard, explore decisions, movement, base reporting. Runs are a
//! pure function of `(config, world, seed)`.

mod events;
mod robot;

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

pub use events::{parse_jsonl, to_jsonl, Event, ModeReason, RelayReason};
pub use robot::{Commitments, RobotState, SharedIntent};
pub(crate) use robot::Target;

use crate::comms::{self, in_range, CommsError};
use crate::failure::{FailureSchedule, WeibullParams};
use crate::grid::{
    astar, astar_known, extract_frontiers, is_frontier, observe, path_sample, travel_time,
    CellSet, CellState, DistanceField, GridError, OccupancyGrid, Passability, Pose, RayStencil,
    DEFAULT_RAYS,
};
use crate::policy::{self, Candidate, CommitmentKind, PenaltyParams, RelayInputs, RelayStrategy, RobotMode};
use crate::prediction::{self, PredictionError, PredictorKind, VisibilityEstimator};
use crate::seed;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid mission config: {0}")]
    Config(String),
    #[error("invariant breach at tick {tick}: {message}")]
    Invariant { tick: u32, message: String },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Comms(#[from] CommsError),
    #[error(transparent)]
    Prediction(#[from] PredictionError),
}

/// Mission parameters. Distances are in cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionConfig {
    pub n_robots: usize,
    pub horizon: u32,
    /// Cells advanced per tick.
    pub speed: u32,
    pub sensor_range: f64,
    pub n_rays: usize,
    pub comm_range: f64,
    pub strategy: RelayStrategy,
    pub predictor: PredictorKind,
    pub ensemble_size: usize,
    pub vote_threshold: f64,
    pub path_sample_interval: usize,
    pub min_frontier_region: usize,
    pub penalty: PenaltyParams,
    pub final_margin: u32,
    pub handoff: bool,
    pub sharing: bool,
    /// Lifetime model; `None` disables failures.
    pub failures: Option<WeibullParams>,
    /// Explicit lifetimes overriding sampling from `failures`.
    pub failure_schedule: Option<FailureSchedule>,
    /// Common start and base cell; sampled from the seed when absent.
    pub start: Option<Pose>,
}

impl Default for MissionConfig {
    fn default() -> Self {
        MissionConfig {
            n_robots: 3,
            horizon: 1000,
            speed: 1,
            sensor_range: 20.0,
            n_rays: DEFAULT_RAYS,
            comm_range: 10.0,
            strategy: RelayStrategy::Proid { alpha: 2.0 },
            predictor: PredictorKind::oracle(8),
            ensemble_size: 3,
            vote_threshold: 0.5,
            path_sample_interval: 3,
            min_frontier_region: 1,
            penalty: PenaltyParams {
                eps_traj: 5.0,
                eps_plan: 10.0,
                gamma: 1e6,
            },
            final_margin: 2,
            handoff: true,
            sharing: true,
            failures: None,
            failure_schedule: None,
            start: None,
        }
    }
}

impl MissionConfig {
    pub fn validate(&self, world: &OccupancyGrid) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.n_robots == 0 {
            return bad("n_robots must be at least 1".into());
        }
        if self.speed == 0 {
            return bad("speed must be at least 1".into());
        }
        if !(self.sensor_range >= 1.0 && self.sensor_range.is_finite()) {
            return bad(format!("sensor_range must be >= 1, got {}", self.sensor_range));
        }
        if self.n_rays == 0 {
            return bad("n_rays must be at least 1".into());
        }
        if !(self.comm_range > 0.0) {
            return bad(format!("comm_range must be positive, got {}", self.comm_range));
        }
        if self.ensemble_size == 0 {
            return bad("ensemble_size must be at least 1".into());
        }
        if !(self.vote_threshold > 0.0 && self.vote_threshold <= 1.0) {
            return bad(format!("vote_threshold must lie in (0, 1], got {}", self.vote_threshold));
        }
        if self.path_sample_interval == 0 || self.min_frontier_region == 0 {
            return bad("path_sample_interval and min_frontier_region must be >= 1".into());
        }
        self.strategy
            .validate()
            .map_err(|e| SimError::Config(e.to_string()))?;
        if let Some(s) = &self.failure_schedule {
            if s.len() != self.n_robots {
                return bad(format!(
                    "failure schedule has {} entries for {} robots",
                    s.len(),
                    self.n_robots
                ));
            }
        }
        if let Some(p) = self.start {
            if world.get(p) != Some(CellState::Free) {
                return bad(format!("start {p} is not a free cell"));
            }
        }
        if world.known_count() != world.len() {
            return bad("ground truth must not contain unknown cells".into());
        }
        if world.count(CellState::Free) == 0 {
            return bad("ground truth has no free cell".into());
        }
        Ok(())
    }
}

/// Free cells plus walls 4-adjacent to a free cell.
pub fn observable_set(world: &OccupancyGrid) -> CellSet {
    let mut out = CellSet::for_grid(world);
    for p in world.poses() {
        match world.get(p) {
            Some(CellState::Free) => {
                out.insert(p);
            }
            Some(CellState::Occupied)
                if p
                    .neighbors4()
                    .iter()
                    .any(|&q| world.get(q) == Some(CellState::Free)) =>
            {
                out.insert(p);
            }
            _ => {}
        }
    }
    out
}

/// Fraction of the observable cells of `world` known in `base_map`.
pub fn coverage_ratio(base_map: &OccupancyGrid, world: &OccupancyGrid) -> Result<f64, GridError> {
    base_map.same_shape(world)?;
    let observable = observable_set(world);
    Ok(coverage_with(base_map, &observable))
}

fn coverage_with(base_map: &OccupancyGrid, observable: &CellSet) -> f64 {
    if observable.is_empty() {
        return 0.0;
    }
    let known = observable
        .indices()
        .filter(|&i| base_map.at(i).is_known())
        .count();
    known as f64 / observable.len() as f64
}

/// Uniformly sampled free start cell for `seed`.
pub fn sample_start(world: &OccupancyGrid, seed: u64) -> Pose {
    let free = world.free_poses();
    let mut rng = seed::substream(seed, seed::Stream::StartPose, 0);
    free[rng.gen_range(0..free.len())]
}

#[derive(Debug, Clone)]
pub struct MissionResult {
    pub coverage_ratio: f64,
    /// Every entry into relay mode, whatever the cause.
    pub relay_count: usize,
    /// Relays chosen by the strategy (criterion or schedule).
    pub voluntary_relay_count: usize,
    pub handoff_count: usize,
    pub failure_count: usize,
    /// Coverage after each executed tick.
    pub coverage_series: Vec<f64>,
    pub events: Vec<Event>,
    pub ticks_run: u32,
    pub start: Pose,
    pub final_unreported: Vec<usize>,
    pub alive: Vec<bool>,
    pub base_map: OccupancyGrid,
}

impl MissionResult {
    pub fn event_log(&self) -> String {
        to_jsonl(&self.events)
    }

    /// Two-column `tick,coverage` table.
    pub fn coverage_csv(&self) -> String {
        let mut out = String::from("tick,coverage\n");
        for (t, c) in self.coverage_series.iter().enumerate() {
            out.push_str(&format!("{},{:.6}\n", t + 1, c));
        }
        out
    }
}

/// A mission in progress.
pub struct Mission {
    config: MissionConfig,
    world: OccupancyGrid,
    observable: CellSet,
    stencil: Arc<RayStencil>,
    schedule: FailureSchedule,
    seed: u64,
    base: Pose,
    base_map: OccupancyGrid,
    robots: Vec<RobotState>,
    tick: u32,
    events: Vec<Event>,
    coverage_series: Vec<f64>,
    selections: Vec<u64>,
}

impl Mission {
    pub fn new(config: MissionConfig, world: OccupancyGrid, seed: u64) -> Result<Self, SimError> {
        config.validate(&world)?;
        let base = config.start.unwrap_or_else(|| sample_start(&world, seed));
        let schedule = match (&config.failure_schedule, &config.failures) {
            (Some(s), _) => s.clone(),
            (None, Some(w)) => FailureSchedule::sample(w, config.n_robots, seed),
            (None, None) => FailureSchedule::disabled(config.n_robots),
        };
        let blank = OccupancyGrid::unknown_like(&world);
        let robots = (0..config.n_robots)
            .map(|i| RobotState::new(i, base, &blank))
            .collect();
        Ok(Mission {
            stencil: Arc::new(RayStencil::new(config.sensor_range, config.n_rays)),
            observable: observable_set(&world),
            selections: vec![0; config.n_robots],
            config,
            world,
            schedule,
            seed,
            base,
            base_map: blank,
            robots,
            tick: 0,
            events: Vec::new(),
            coverage_series: Vec::new(),
        })
    }

    pub fn tick(&self) -> u32 {
        self.tick
    }

    pub fn base(&self) -> Pose {
        self.base
    }

    pub fn base_map(&self) -> &OccupancyGrid {
        &self.base_map
    }

    pub fn robots(&self) -> &[RobotState] {
        &self.robots
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn config(&self) -> &MissionConfig {
        &self.config
    }

    pub fn schedule(&self) -> &FailureSchedule {
        &self.schedule
    }

    pub fn is_over(&self) -> bool {
        self.tick >= self.config.horizon || self.robots.iter().all(|r| !r.alive)
    }

    pub fn coverage(&self) -> f64 {
        coverage_with(&self.base_map, &self.observable)
    }

    /// Base-known cells together with every alive robot's payload.
    pub fn delivery_union(&self) -> CellSet {
        let mut u = self.base_map.known_cells();
        for r in self.robots.iter().filter(|r| r.alive) {
            u.union_with(&r.unreported);
        }
        u
    }

    pub fn run_to_end(mut self) -> Result<MissionResult, SimError> {
        while !self.is_over() {
            self.step()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> MissionResult {
        let mut relay_count = 0;
        let mut voluntary = 0;
        let mut handoffs = 0;
        let mut failures = 0;
        for e in &self.events {
            match e {
                Event::RelayStart { reason, .. } => {
                    relay_count += 1;
                    if reason.is_voluntary() {
                        voluntary += 1;
                    }
                }
                Event::Handoff { .. } => handoffs += 1,
                Event::Failure { .. } => failures += 1,
                _ => {}
            }
        }
        MissionResult {
            coverage_ratio: coverage_with(&self.base_map, &self.observable),
            relay_count,
            voluntary_relay_count: voluntary,
            handoff_count: handoffs,
            failure_count: failures,
            coverage_series: self.coverage_series,
            events: self.events,
            ticks_run: self.tick,
            start: self.base,
            final_unreported: self.robots.iter().map(|r| r.unreported.len()).collect(),
            alive: self.robots.iter().map(|r| r.alive).collect(),
            base_map: self.base_map,
        }
    }

    fn breach(&self, message: String) -> SimError {
        SimError::Invariant {
            tick: self.tick,
            message,
        }
    }

    /// Advances one tick.
    pub fn step(&mut self) -> Result<(), SimError> {
        if self.tick >= self.config.horizon {
            return Err(self.breach("step past the horizon".into()));
        }
        let t = self.tick;

        // failures
        for r in self.robots.iter_mut().filter(|r| r.alive) {
            if self.schedule.failure_time(r.id) <= t as f64 {
                r.alive = false;
                self.events.push(Event::Failure {
                    tick: t,
                    robot: r.id,
                    pos: r.pose,
                    lost: r.unreported.len(),
                });
            }
        }

        // observation
        for r in self.robots.iter_mut().filter(|r| r.alive) {
            let mut new = observe(&mut r.local_map, &self.world, r.pose, &self.stencil)?;
            new.difference_with(&r.reported);
            new.difference_with(&r.delegated);
            r.unreported.union_with(&new);
            self.events.push(Event::ObserveSummary {
                tick: t,
                robot: r.id,
                pos: r.pose,
                mode: r.mode,
                new_cells: new.len(),
                unreported: r.unreported.len(),
            });
        }

        self.communicate()?;

        // return-trip times over known free space
        let mut to_base: Vec<Option<u32>> = vec![None; self.robots.len()];
        for r in self.robots.iter().filter(|r| r.alive) {
            let path = astar_known(&r.local_map, r.pose, self.base)?;
            to_base[r.id] = Some(travel_time(&path, self.config.speed));
        }

        // final return guard
        for i in 0..self.robots.len() {
            let Some(ttb) = to_base[i] else { continue };
            let r = &self.robots[i];
            if r.final_return
                || !policy::final_return_due(t, self.config.horizon, ttb, self.config.final_margin)
            {
                continue;
            }
            self.robots[i].final_return = true;
            if self.robots[i].mode == RobotMode::Relay {
                // already heading home; the plan ends at base
                continue;
            }
            self.start_relay(i, RelayReason::FinalReturn, ttb, None)?;
        }

        // explore decisions
        for i in 0..self.robots.len() {
            let Some(ttb) = to_base[i] else { continue };
            if self.robots[i].mode != RobotMode::Explore {
                continue;
            }
            self.decide(i, ttb)?;
        }

        self.advance()?;

        // base reporting
        for i in 0..self.robots.len() {
            let r = &self.robots[i];
            if !r.alive || !in_range(r.pose, self.base, self.config.comm_range) {
                continue;
            }
            let had_payload = !r.unreported.is_empty();
            let s = comms::report_to_base(
                &mut self.robots[i],
                &mut self.base_map,
                self.base,
                self.config.comm_range,
            )?;
            let r = &mut self.robots[i];
            if s.mode_reset {
                r.clear_target();
                self.events.push(Event::ModeChange {
                    tick: t,
                    robot: i,
                    from: RobotMode::Relay,
                    to: RobotMode::Explore,
                    reason: ModeReason::Report,
                });
            }
            if s.delivered > 0 || had_payload || s.mode_reset {
                self.events.push(Event::Report {
                    tick: t,
                    robot: i,
                    pos: r.pose,
                    delivered: s.delivered,
                    base_known: self.base_map.known_count(),
                });
            }
        }

        self.check_invariants()?;
        self.tick += 1;
        self.coverage_series.push(self.coverage());
        Ok(())
    }

    fn communicate(&mut self) -> Result<(), SimError> {
        let t = self.tick;
        let n = self.robots.len();
        for i in 0..n {
            for j in i + 1..n {
                let (lo, hi) = self.robots.split_at_mut(j);
                let (a, b) = (&mut lo[i], &mut hi[0]);
                if !a.alive || !b.alive || !in_range(a.pose, b.pose, self.config.comm_range) {
                    continue;
                }
                let s = comms::exchange(a, b, self.base, self.config.comm_range, self.config.sharing)?;
                self.events.push(Event::Exchange {
                    tick: t,
                    a: i,
                    b: j,
                    a_pos: a.pose,
                    b_pos: b.pose,
                    distance: s.distance,
                    overlap_moved: s.overlap_moved,
                });
                if !self.config.handoff {
                    continue;
                }
                for (giver, receiver) in [(i, j), (j, i)] {
                    let g = &self.robots[giver];
                    if g.mode != RobotMode::Relay || g.final_return {
                        continue;
                    }
                    let before = self.delivery_union();
                    let (from_pos, to_pos) = (self.robots[giver].pose, self.robots[receiver].pose);
                    let (g, r) = pair_mut(&mut self.robots, giver, receiver);
                    let Some(h) = comms::try_handoff(g, r, self.base)? else {
                        continue;
                    };
                    let after = self.delivery_union();
                    self.events.push(Event::Handoff {
                        tick: t,
                        from: giver,
                        to: receiver,
                        from_pos,
                        to_pos,
                        payload: h.payload,
                        union_before: before.len(),
                        union_after: after.len(),
                        digest_before: before.digest(),
                        digest_after: after.digest(),
                    });
                    if before != after {
                        return Err(self.breach(format!(
                            "handoff {giver}->{receiver} changed the delivery union"
                        )));
                    }
                    self.events.push(Event::ModeChange {
                        tick: t,
                        robot: giver,
                        from: RobotMode::Relay,
                        to: RobotMode::Explore,
                        reason: ModeReason::HandoffGiven,
                    });
                    if h.receiver_switched {
                        let r = &mut self.robots[receiver];
                        r.last_relay_start = t;
                        let ttb = travel_time(&r.plan, self.config.speed);
                        self.events.push(Event::RelayStart {
                            tick: t,
                            robot: receiver,
                            pos: r.pose,
                            reason: RelayReason::HandoffReceived,
                            unreported: r.unreported.len(),
                            t_to_base: ttb,
                            rate_now: None,
                            rate_pred: None,
                        });
                        self.events.push(Event::ModeChange {
                            tick: t,
                            robot: receiver,
                            from: RobotMode::Explore,
                            to: RobotMode::Relay,
                            reason: ModeReason::Relay(RelayReason::HandoffReceived),
                        });
                    }
                    // at most one handoff per pair per tick
                    break;
                }
            }
        }
        Ok(())
    }

    fn start_relay(
        &mut self,
        i: usize,
        reason: RelayReason,
        t_to_base: u32,
        rates: Option<(f64, f64)>,
    ) -> Result<(), SimError> {
        let t = self.tick;
        let r = &mut self.robots[i];
        let from = r.mode;
        r.plan = astar_known(&r.local_map, r.pose, self.base)?;
        r.mode = RobotMode::Relay;
        r.clear_target();
        r.last_relay_start = t;
        self.events.push(Event::RelayStart {
            tick: t,
            robot: i,
            pos: r.pose,
            reason,
            unreported: r.unreported.len(),
            t_to_base,
            rate_now: rates.map(|x| x.0),
            rate_pred: rates.map(|x| x.1),
        });
        if from != RobotMode::Relay {
            self.events.push(Event::ModeChange {
                tick: t,
                robot: i,
                from,
                to: RobotMode::Relay,
                reason: ModeReason::Relay(reason),
            });
        }
        Ok(())
    }

    fn decide(&mut self, i: usize, t_to_base: u32) -> Result<(), SimError> {
        let t = self.tick;
        if let RelayStrategy::Periodic { period } = self.config.strategy {
            let r = &self.robots[i];
            if policy::periodic_due(t, period, r.last_relay_start, r.mode) {
                return self.start_relay(i, RelayReason::Periodic, t_to_base, None);
            }
        }

        let r = &self.robots[i];
        let need_target = match &r.target {
            None => true,
            Some(tg) => r.plan.len() <= 1 || !is_frontier(&r.local_map, tg.centroid),
        };
        if need_target {
            self.select_target(i)?;
        }

        let strategy = self.config.strategy;
        if !matches!(
            strategy,
            RelayStrategy::Proid { .. } | RelayStrategy::ProidSafe { .. }
        ) {
            return Ok(());
        }
        let speed = self.config.speed;
        let r = &mut self.robots[i];
        // within base range the payload is delivered this tick anyway
        if in_range(r.pose, self.base, self.config.comm_range) {
            return Ok(());
        }
        let Some(tg) = r.target.as_mut() else {
            return Ok(());
        };
        let mut waypoints = vec![r.pose];
        waypoints.extend(
            tg.samples
                .iter()
                .filter(|(k, _)| *k > tg.progress)
                .map(|&(_, p)| p),
        );
        let known = r.local_map.known_cells();
        let gain = tg.estimator.expected_gain(&waypoints, &known);
        let inputs = RelayInputs {
            now: t,
            unreported: r.unreported.len(),
            expected_gain: gain,
            t_to_base,
            t_to_front: travel_time(&r.plan, speed),
            t_front_to_base: tg.t_front_to_base,
        };
        if let Some(v) = policy::evaluate_criterion(&strategy, &inputs) {
            if v.relay {
                self.start_relay(
                    i,
                    RelayReason::Criterion,
                    t_to_base,
                    Some((v.rate_now, v.rate_pred)),
                )?;
            }
        }
        Ok(())
    }

    fn select_target(&mut self, i: usize) -> Result<(), SimError> {
        let t = self.tick;
        let selection = self.selections[i];
        self.selections[i] += 1;
        let cfg = &self.config;
        let r = &self.robots[i];
        let frontiers = extract_frontiers(&r.local_map, cfg.min_frontier_region);
        let field = DistanceField::new(&r.local_map, r.pose, Passability::Optimistic);
        let reachable: Vec<_> = frontiers
            .iter()
            .filter_map(|f| field.path_to(f.centroid).map(|p| (f.centroid, p)))
            .collect();
        if reachable.len() < frontiers.len() {
            log::debug!(
                "robot {i} tick {t}: {} unreachable frontiers skipped",
                frontiers.len() - reachable.len()
            );
        }
        if reachable.is_empty() {
            // nothing left to explore: head home and keep checking
            let r = &mut self.robots[i];
            r.clear_target();
            r.plan = astar_known(&r.local_map, r.pose, self.base)?;
            return Ok(());
        }

        let member_seed = seed::derive(
            self.seed,
            seed::Stream::Prediction,
            ((i as u64) << 32) | selection,
        );
        let ensemble = prediction::predict(
            cfg.predictor,
            &r.local_map,
            Some(&self.world),
            cfg.ensemble_size,
            member_seed,
        )?;
        let mut estimator =
            VisibilityEstimator::new(ensemble, self.stencil.clone(), cfg.vote_threshold)?;
        let known = r.local_map.known_cells();
        let candidates: Vec<Candidate> = reachable
            .iter()
            .map(|(c, path)| Candidate {
                centroid: *c,
                gain: estimator.expected_gain(&path_sample(path, cfg.path_sample_interval), &known),
                travel_time: travel_time(path, cfg.speed),
            })
            .collect();
        // a plan whose goal is no longer a frontier here claims nothing
        let live = r.commitments.iter().filter(|(kind, poses)| {
            *kind == CommitmentKind::Trajectory
                || poses.last().is_some_and(|&g| is_frontier(&r.local_map, g))
        });
        let scored = policy::score_frontiers(&candidates, live, &cfg.penalty);
        let best = policy::select_frontier(&scored)
            .expect("candidates are non-empty")
            .clone();
        let plan = reachable
            .into_iter()
            .find(|(c, _)| *c == best.centroid)
            .expect("selected from candidates")
            .1;

        let consensus = estimator.ensemble().consensus(cfg.vote_threshold);
        let t_front_to_base = match astar(&consensus, best.centroid, self.base) {
            Ok(p) => travel_time(&p, cfg.speed),
            Err(_) => travel_time(&astar(&r.local_map, best.centroid, self.base)?, cfg.speed),
        };
        let samples = sample_offsets(&plan, cfg.path_sample_interval);
        self.events.push(Event::Waypoint {
            tick: t,
            robot: i,
            target: best.centroid,
            gain: best.gain,
            travel_time: best.travel_time,
            score: best.score,
            t_front_to_base,
        });
        let r = &mut self.robots[i];
        r.plan = plan;
        r.target = Some(Target {
            centroid: best.centroid,
            estimator,
            samples,
            progress: 0,
            t_front_to_base,
        });
        // teammates in range hear the new plan before their own decisions
        if self.config.sharing {
            for j in 0..self.robots.len() {
                if j == i {
                    continue;
                }
                let (me, other) = pair_mut(&mut self.robots, i, j);
                if other.alive && in_range(me.pose, other.pose, self.config.comm_range) {
                    comms::share_intent(me, other);
                }
            }
        }
        Ok(())
    }

    fn advance(&mut self) -> Result<(), SimError> {
        for i in 0..self.robots.len() {
            if !self.robots[i].alive {
                continue;
            }
            for _ in 0..self.config.speed {
                let r = &mut self.robots[i];
                if r.plan.len() <= 1 {
                    break;
                }
                let next = r.plan[1];
                match r.local_map.get(next) {
                    Some(CellState::Free) => {}
                    Some(CellState::Occupied) => {
                        let goal = *r.plan.last().expect("non-empty");
                        let replanned = match r.mode {
                            RobotMode::Relay => astar_known(&r.local_map, r.pose, goal),
                            RobotMode::Explore => astar(&r.local_map, r.pose, goal),
                        };
                        match replanned {
                            Ok(p) => {
                                if let Some(tg) = r.target.as_mut() {
                                    tg.samples = sample_offsets(&p, self.config.path_sample_interval);
                                    tg.progress = 0;
                                }
                                r.plan = p;
                                continue;
                            }
                            Err(_) => {
                                r.plan.clear();
                                r.clear_target();
                                break;
                            }
                        }
                    }
                    // not yet observed; wait for the next scan
                    _ => break,
                }
                if self.world.get(next) != Some(CellState::Free) {
                    return Err(self.breach(format!("robot {i} stepping into wall at {next}")));
                }
                let r = &mut self.robots[i];
                r.plan.remove(0);
                r.pose = next;
                r.trajectory.push(next);
                if let Some(tg) = r.target.as_mut() {
                    tg.progress += 1;
                }
            }
        }
        Ok(())
    }

    fn check_invariants(&self) -> Result<(), SimError> {
        for r in &self.robots {
            if self.world.get(r.pose) != Some(CellState::Free) {
                return Err(self.breach(format!("robot {} off free space at {}", r.id, r.pose)));
            }
            if !r.alive {
                continue;
            }
            if r.mode == RobotMode::Relay && r.plan.last().is_some_and(|&p| p != self.base) {
                return Err(self.breach(format!("robot {} relays towards {:?}", r.id, r.plan.last())));
            }
            if r.plan.first().is_some_and(|&p| p != r.pose) {
                return Err(self.breach(format!("robot {} plan does not start at its pose", r.id)));
            }
            if r.unreported.intersection(&r.reported).len() != 0 {
                return Err(self.breach(format!("robot {} carries reported cells", r.id)));
            }
        }
        Ok(())
    }
}

fn pair_mut<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = v.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

fn sample_offsets(plan: &[Pose], interval: usize) -> Vec<(usize, Pose)> {
    let mut out: Vec<(usize, Pose)> = plan
        .iter()
        .copied()
        .enumerate()
        .step_by(interval)
        .collect();
    if let Some(&last) = plan.last() {
        if (plan.len() - 1) % interval != 0 {
            out.push((plan.len() - 1, last));
        }
    }
    out
}

/// Runs a whole mission.
pub fn run(config: &MissionConfig, world: &OccupancyGrid, seed: u64) -> Result<MissionResult, SimError> {
    Mission::new(config.clone(), world.clone(), seed)?.run_to_end()
}
