//! Configuration, orchestration and persistence of experiments.
//!
//! Replicates are the unit of parallelism. Each one owns the random stream
//! derived from `(master_seed, replicate_index)`, results are collected in
//! replicate order and every aggregate is a sequential reduction over that
//! order, so output does not depend on the worker count.

pub mod config;
pub mod output;
pub mod run;

pub use config::{
    DimensionSpec, ExperimentConfig, Mode, OutputFormat, DEFAULT_ATOM_CAP, DEFAULT_R_MAX,
};
pub use run::{
    aggregate, oracle_for, parse_box_spec, parse_proj_spec, run_oracle, run_simulation,
    run_stein_chen, run_sweep, simulate_records, Aggregates, BoxOracle, ExperimentSummary,
    LayerMean, ReplicateRecord, SteinChenReport, SweepReplicate, SweepRow, SweepSummary,
};
