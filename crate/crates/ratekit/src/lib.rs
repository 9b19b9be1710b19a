//! File formats, parameter sweeps and figure presets on top of
//! [`ratekit_core`].

pub mod presets;
pub mod report;
pub mod scenario;
pub mod sweep;
pub mod table;

pub use scenario::{load_json, load_scenario, AlgorithmName, LoadError, OverheadFile, ScenarioFile};
pub use sweep::{run_sweep, threads_from_env, SpecError, SweepSpec};
pub use table::{SweepRow, SweepTable, TableError};
