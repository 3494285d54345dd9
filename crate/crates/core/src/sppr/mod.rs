//! Supervised-PPR kernels.
//!
//! Two routes to the same quantity: [`exact::exact_sppr`] materializes the
//! full proximity matrix by dense iteration (training subgraphs, test
//! oracles), while [`push::generalized_push`] approximates single-source
//! rows in time independent of the graph size (large-graph embedding).

pub mod exact;
pub mod push;

pub use exact::{exact_sppr, exact_sppr_with_cap, DenseMatrix, DEFAULT_DENSE_CAP};
pub use push::{
    generalized_push, generalized_push_audited, push_all_sources, push_all_sources_with_stats,
    PushState, PushStats,
};
