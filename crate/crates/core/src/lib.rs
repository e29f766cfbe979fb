//! Hybrid filter/wrapper feature selection for high-dimension, small-sample
//! classification problems such as microarray expression data.
//!
//! The pipeline scales every feature to `[0,1]`, ranks features by information
//! gain and drops those at or below a threshold, then runs a wrapper search
//! (binary PSO, its stagnation-escaping IBPSO variant, or a genetic
//! algorithm) over the surviving subspace. Candidate subsets are scored by
//! classifier accuracy: leave-one-out 1-NN or one-vs-rest linear SVM under
//! stratified k-fold.
//!
//! Everything is deterministic given the configured seeds, including runs
//! that evaluate fitness on multiple threads.

pub mod classify;
pub mod dataset;
pub mod error;
pub mod gasearch;
pub mod igfilter;
pub mod pipeline;
pub mod swarm;

pub use classify::{BinarySvmModel, Evaluator, FitnessSpec};
pub use dataset::{Dataset, FeatureMask, FoldPlan, LabelColumn};
pub use error::{Error, Result};
pub use gasearch::{GaParams, MutationMode};
pub use igfilter::{DiscretizedColumn, IgRanking};
pub use pipeline::{
    generate_synthetic, ExperimentConfig, ExperimentReport, IgConfig, Method, ReportRow,
    SuiteConfig, Synthetic,
};
pub use swarm::{Particle, SearchRun, SwarmParams, SwarmState, TraceRow, Variant};
