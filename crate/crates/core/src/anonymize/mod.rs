//! Privacy-preserving transformations of an event log.

mod kpppm;
mod pseudonym;
mod upppm;

pub use kpppm::{
    cluster_individuals, individual_models, k_pppm, k_pppm_with_clusters, sample_size, KpppmConfig,
    KpppmOutput, Representative,
};
pub use pseudonym::{pseudonym, pseudonymize, PseudonymMap};
pub use upppm::{
    form_groups, select_pair, u_pppm, uniformise, GroupAssignment, GroupRecord, GroupState,
    Strategy, UpppmConfig, UpppmOutput, ITERATIONS_PER_CASE, MAX_FAILED_DRAWS,
};
