//! Config files and CSV output.

mod config;
mod csv_out;

pub use config::{ConfigError, RunConfig, SweepConfig};
pub use csv_out::{
    write_results, write_results_csv, write_snapshots, write_snapshots_csv, RESULTS_HEADER,
    SNAPSHOTS_HEADER,
};
