//! Spatially-aware concept discovery from weakly labeled image/description pairs.
//!
//! The pipeline, in data-flow order:
//!
//! * [`corpus`] builds (or validates) a dataset of convolutional feature maps
//!   paired with attribute descriptions, plus query pairs for evaluation.
//! * [`word2vec`] trains skip-gram vectors over descriptions: the semantic
//!   representation of every attribute.
//! * [`embedding`] learns the joint visual-semantic space with a bidirectional
//!   hinge loss.
//! * [`activation`] distributes image/attribute scores over spatial cells and
//!   averages them into per-attribute activation maps.
//! * [`concepts`] concatenates spatial and semantic representations, runs
//!   k-means and scores the result with homogeneity/completeness/V-measure.
//! * [`subspace`] trains a small classifier per concept on top of the frozen
//!   embedding.
//! * [`retrieval`] answers "this item, but with attribute X" queries, with or
//!   without automatic detection of the attribute being replaced.
//! * [`projection`] maps subspace features onto a plane and a browse grid.
//!
//! The crate is `no_std` and only needs `alloc`. Everything is deterministic
//! under explicit seeds.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod activation;
pub mod concepts;
pub mod corpus;
pub mod embedding;
mod error;
pub mod math;
pub mod projection;
pub mod retrieval;
pub mod subspace;
pub mod word2vec;

pub use error::{Error, Result};

/// Attribute identifier: index into the dataset vocabulary.
pub type AttrId = u32;
/// Item identifier: index into the dataset item list.
pub type ItemId = u32;
/// Cluster / concept identifier.
pub type ConceptId = u32;
