//! Fairness-aware neighborhood graphs for spectral clustering.
//!
//! Builds kNN and epsilon-neighborhood graphs whose neighbor lists satisfy a
//! per-node group-balance constraint, clusters them spectrally, and scores
//! the result.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fair_eps;
pub mod fair_knn;
pub mod graph;
pub mod ingest;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod spectral;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use graph::{WeightedGraph, Laplacian, LaplacianMode, SigmaRule, Symmetrize};
pub use types::{Dataset, FairnessParams, Neighbor, NeighborList};
