//! Configuration-driven experiments and the file formats they emit.

pub mod comparison;
pub mod config;
pub mod double_slit;
pub mod io;

pub use comparison::{run_oracle_comparison, selection_pipeline, ComparisonReport, PairError, SelectionSummary};
pub use config::{EndpointMode, ExperimentConfig, GridConfig, PotentialConfig, RunConfig};
pub use double_slit::{run_double_slit, ArrivalHistogram, DoubleSlitOutcome, FringeReport};
