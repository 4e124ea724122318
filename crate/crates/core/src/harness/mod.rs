//! File formats, synthetic scenarios and command dispatch.

pub mod bundle;
pub mod io;
pub mod run;
pub mod synthetic;

pub use bundle::{read_plan, read_table, read_trajectory, write_bundle, BUNDLE_FILES};
pub use io::{parse_scenario, parse_timeseries, scenario_from_str, write_scenario, write_timeseries, IoError};
pub use run::{dispatch, Command, HarnessError, Method, Preset, RunConfig, WeightOverride};
