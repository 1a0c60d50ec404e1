//! Previous->subsequent co-occurrence matrices and their truncated-SVD
//! course embeddings.

mod cooccur;
mod decompose;
mod embedding;

pub use cooccur::{build_cooccurrence, l1_scale_rows, CooccurrenceMatrix, PairCounts};
pub use decompose::{truncated_svd, Svd};
pub use embedding::{embed, svd_rank, SvdEmbedding};

pub(crate) use embedding::mean_rows;
