use alloc::string::String;

use crate::{AttrId, ConceptId, ItemId};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("empty description")]
    EmptyDescription,
    #[error("attribute {0} appears twice in one description")]
    DuplicateAttribute(AttrId),
    #[error("unknown attribute id {0}")]
    UnknownAttribute(AttrId),
    #[error("unknown item id {0}")]
    UnknownItem(ItemId),
    #[error("unknown concept id {0}")]
    UnknownConcept(ConceptId),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("batch of {0} has no in-batch negatives")]
    BatchTooSmall(usize),
    #[error("training diverged (non-finite loss) in epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("attribute {0} has no positive training items")]
    EmptySupport(AttrId),
    #[error("attribute {0} has a zero spatial or semantic representation")]
    DegenerateFeature(AttrId),
    #[error("cannot form {k} clusters from {n} points")]
    TooManyClusters { k: usize, n: usize },
    #[error("empty cluster assignment")]
    EmptyAssignment,
    #[error("concept {0} has no positive training items")]
    NoPositives(ConceptId),
    #[error("descriptions yield no skip-gram training pairs")]
    NoTrainingPairs,
    #[error("vocabulary is empty after frequency filtering")]
    EmptyVocab,
    #[error("no query pairs to evaluate")]
    NoQueryPairs,
    #[error("gallery is empty")]
    EmptyGallery,
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}
