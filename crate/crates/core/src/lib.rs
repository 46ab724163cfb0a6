//! Privacy-preserving process mining on event logs: model discovery and
//! simplification, graph distances, microaggregation, the u-PPPM and k-PPPM
//! anonymizers, utility scores and re-identification attack simulators.

pub mod anonymize;
pub mod attack;
pub mod clustering;
pub mod discovery;
pub mod error;
pub mod evaluate;
pub mod eventlog;
pub mod similarity;
pub mod synth;

pub use anonymize::{
    k_pppm, pseudonymize, u_pppm, GroupAssignment, KpppmConfig, PseudonymMap, Strategy, UpppmConfig,
};
pub use clustering::{ClusterAssignment, ClusterMethod, DistanceMatrix};
pub use discovery::{discover_dfg, skip_miner, ProcessModel, SkipConfig, StructuralMetrics};
pub use error::{Error, Result};
pub use eventlog::{Event, EventLog, Trace};
pub use similarity::{distance, Distance, Measure};

/// Version stamped into every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;
