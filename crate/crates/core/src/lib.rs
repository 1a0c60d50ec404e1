//! Grade-aware course recommendation.
//!
//! Learns temporal course-ordering embeddings from student transcripts,
//! recommends next-term courses while differentiating courses expected to
//! raise vs. lower a student's GPA, and evaluates recommendations with
//! grade-aware recall and GPA-impact metrics.
//!
//! The numeric core is generic over the scalar type (see [`scalar::Scalar`]);
//! the type aliases below pin the common `f64` instantiations.

pub mod baselines;
pub mod corpus;
pub mod course2vec;
pub mod error;
pub mod eval;
pub mod gradepred;
pub mod matrix;
pub mod model_io;
pub mod ranker;
pub mod scalar;
pub mod svd;
pub mod synthgen;
mod variant;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use variant::Variant;

/// Default scalar used by the CLI and the `f64` aliases below.
pub type Real = f64;

pub type SvdModel = svd::SvdEmbedding<Real>;
pub type Course2vecModel = course2vec::EmbeddingModel<Real>;
pub type KnowledgeModel = gradepred::KnowledgeModel<Real>;
pub type CooccurrenceMatrix = svd::CooccurrenceMatrix<Real>;
