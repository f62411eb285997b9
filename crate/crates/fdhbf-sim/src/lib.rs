//! Monte Carlo harness for the `fdhbf` full-duplex link model: TOML
//! configuration, per-realization metric records, parameter sweeps and
//! long-format CSV output.
//!
//! Each realization draws its channels from a seed that depends only on the
//! master seed and the realization index, so every mode and sweep point
//! sees the same channel ensemble and results do not depend on the worker
//! count.

pub mod beams;
pub mod config;
pub mod error;
pub mod figures;
pub mod output;
pub mod realization;
pub mod sweep;

pub use config::{Mode, SimConfig};
pub use error::{SimError, SimResult};
pub use figures::{figure_sweeps, FigureKind};
pub use output::{read_csv, write_csv, CsvSink};
pub use realization::{run_realization, Prepared, RealizationOutput};
pub use sweep::{run_sweep, run_sweep_with, Record, Sweep, SweepParam, SweepResult};
