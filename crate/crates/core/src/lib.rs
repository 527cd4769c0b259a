//! Pareto-minimal points of uniform samples in `[0,1]^d` when `d` grows with `n`.
//!
//! A point `X_i` dominates `X_j` when it is at least as large in every
//! coordinate. `D(i)` counts the points `X_i` dominates, `K` the points with
//! `D(i) = 0` (the Pareto-minimal points) and `K^(r)` those with `D(i) = r`.
//!
//! The crate pairs exact finite-`n` oracles for these quantities with a
//! deterministic Monte Carlo harness:
//!
//! * [`dominance`]: exact dominance counts, layer histograms and box statistics;
//! * [`sampling`]: per-replicate random streams, nested dimension couplings
//!   and poissonized sample sizes;
//! * [`oracle`]: exact expectations by Gamma-weighted quadrature, limit
//!   constants, critical dimensions and Poisson approximation bounds;
//! * [`diagnostics`]: goodness-of-fit verdicts and jackknife errors;
//! * [`experiment`]: configurations, parallel runs and JSON/CSV output.

pub mod diagnostics;
pub mod dominance;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod quadrature;
pub mod region;
pub mod sample;
pub mod sampling;

pub use dominance::{
    dominance_counts, dominates, BoxStatistics, DominanceSummary, LayerHistogram, Strategy,
};
pub use error::{Error, Result};
pub use region::{BoxRegion, ProjectionSpec};
pub use sample::{Provenance, SampleMatrix, SampleView};
pub use sampling::{
    coupled_samples, poissonized_sample, sample_uniform, CoupledSample, StreamSpec,
};
