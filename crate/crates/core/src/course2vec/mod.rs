//! CBOW-style log-linear course embeddings trained by SGD over one
//! subsequent course at a time.

mod train;

pub use train::{diagnostics, train, EpochStats, TrainOutput};

use crate::corpus::CourseVocab;
use crate::error::{Error, Result};
use crate::matrix::{dot, Mat};
use crate::ranker::sort_ranked;
use crate::scalar::Scalar;
use crate::variant::Variant;

/// Two roles per course: rows of `w` are the previous-course vectors, rows
/// of `wp` the subsequent-course vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel<S: Scalar> {
    pub variant: Variant,
    pub vocab: CourseVocab,
    pub w: Mat<S>,
    pub wp: Mat<S>,
}

impl<S: Scalar> EmbeddingModel<S> {
    pub fn dim(&self) -> usize {
        self.w.cols()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub variant: Variant,
    pub dim: usize,
    /// Minimum number of subsequent courses in each step's denominator;
    /// padded with random negatives when fewer are known.
    pub samples: usize,
    /// Pairs seen fewer times than this enter the denominator only with
    /// probability frequency/threshold.
    pub freq_threshold: u32,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: Variant::PlusMinus,
            dim: 10,
            samples: 3,
            freq_threshold: 20,
            epochs: 50,
            learning_rate: 0.05,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dimension must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Average pooling of the previous-course vectors of the context.
/// Unseen courses are skipped; an empty effective context is an error.
pub fn context_profile<S: Scalar>(
    model: &EmbeddingModel<S>,
    context: &[String],
) -> Result<Vec<S>> {
    crate::svd::mean_rows(&model.w, &model.vocab, context)
}

/// Softmax probability of `target` given the aggregated profile `h`,
/// normalized over the full vocabulary with max-subtraction for stability.
pub fn softmax_prob<S: Scalar>(model: &EmbeddingModel<S>, h: &[S], target: &str) -> Result<S> {
    let target_idx = model
        .vocab
        .index_of(target)
        .ok_or_else(|| Error::Data(format!("course {target:?} not in the model vocabulary")))?;
    let logits: Vec<S> =
        (0..model.vocab.len()).map(|j| dot(model.wp.row(j), h)).collect();
    let max = logits.iter().copied().fold(S::neg_infinity(), S::max);
    let denom: S = logits.iter().map(|&l| (l - max).exp()).sum();
    Ok((logits[target_idx as usize] - max).exp() / denom)
}

/// Scores candidates by the dot product between their subsequent-course
/// vector and the context profile; equivalent to ranking by softmax
/// probability. Candidates unseen in training score zero.
pub fn c2v_rank<S: Scalar>(
    model: &EmbeddingModel<S>,
    context: &[String],
    candidates: &[String],
) -> Result<Vec<(String, S)>> {
    let h = context_profile(model, context)?;
    let mut ranked: Vec<(String, S)> = candidates
        .iter()
        .map(|c| {
            let score = match model.vocab.index_of(c) {
                Some(idx) => dot(model.wp.row(idx as usize), &h),
                None => S::zero(),
            };
            (c.clone(), score)
        })
        .collect();
    sort_ranked(&mut ranked);
    Ok(ranked)
}
