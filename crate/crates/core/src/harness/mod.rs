//! Experiment harness: floorplan generation, run settings, sweeps and
//! result tables.

pub mod config;
pub mod floorplan;
pub mod report;
pub mod sweep;

pub use config::{parse_pairs, ConfigError, MapSource, Settings, StrategyKind, KEYS};
pub use floorplan::{generate_floorplan, generate_map, Floorplan, FloorplanError, RoomParams};
pub use report::{aggregate, aggregate_to_csv, format_table, mean_std, AggregateRow};
pub use sweep::{rows_from_csv, rows_to_csv, run_cell, run_sweep, strategy_label, ResultRow, StrategyChoice, SweepSpec};
