//! Detection of critical clique-like structures in colored graphs fused from
//! multi-function system models.
//!
//! The pipeline: a [`model::SystemModel`] lists components, functions (sets of
//! components) and function clusters. For the cluster active at a tick,
//! [`fusion::integrated_graph`] unions the complete graphs of its functions and
//! colors every component with its worst level. [`reveal`] finds cliques and
//! quasi-cliques among low-level components, [`stream`] tracks them over a
//! scenario with the k-of-m rule, and [`plan`] computes the cheapest component
//! improvements that break them. [`gen`] produces synthetic state streams.
//!
//! Plan costs are generic over the scalar type ([`plan::Cost`]) and stream
//! probabilities over any [`num_traits::Float`]; the aliases below fix the
//! common choices.

pub mod cli;
pub mod fusion;
pub mod gen;
pub mod model;
pub mod plan;
pub mod reveal;
pub mod stream;

#[cfg(test)]
pub(crate) mod testutil;

pub use fusion::{function_graph, integrated_graph, merge_color, ColoredGraph};
pub use model::{
    cluster_components, parse_model, validate, ClusterId, ComponentId, Document, FunctionId, Level,
    OrdinalScale, Scenario, StateAssignment, SystemModel,
};
pub use plan::{apply_plan, destruction_plan, destruction_targets, ImprovementAction, ImprovementPlan};
pub use reveal::{
    canonical_id, classify, find_cliques, find_quasi, oracle, reveal, Kind, MinSize, RevealedStructure,
    StructureSpec,
};
pub use stream::{k_of_m, run, tick_graph, Track, TrackConfig, TrackLog, TrackStatus};

/// Plan with integer level-step costs, as used by the command line.
pub type Plan = ImprovementPlan<u32>;
/// Plan with floating-point costs.
pub type PlanF64 = ImprovementPlan<f64>;
/// Plan with exact rational costs.
pub type ExactPlan = ImprovementPlan<num_rational::Ratio<i64>>;

pub type StreamModelF64 = gen::StreamModel<f64>;
pub type StreamModelF32 = gen::StreamModel<f32>;
