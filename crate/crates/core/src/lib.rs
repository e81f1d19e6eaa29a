//! Multi-robot exploration with relay to a fixed base station.
//!
//! Robots explore an unknown occupancy grid, share maps when in radio range,
//! and must physically carry what they observed back within range of a base
//! station before the mission horizon. The crate provides the world model
//! ([`grid`]), pluggable map predictors ([`prediction`]), the communication
//! protocol ([`comms`]), relay decision rules ([`policy`]), a Weibull
//! lifetime model ([`failure`]), the deterministic tick engine ([`sim`]) and
//! an experiment harness ([`harness`]).

pub mod comms;
pub mod failure;
pub mod grid;
pub mod harness;
pub mod policy;
pub mod prediction;
pub mod seed;
pub mod sim;
