use crate::corpus::CourseVocab;
use crate::error::{Error, Result};
use crate::matrix::{dot, Mat};
use crate::ranker::sort_ranked;
use crate::scalar::Scalar;
use crate::svd::{truncated_svd, CooccurrenceMatrix};
use crate::variant::Variant;

/// Previous/subsequent course embeddings from the truncated SVD of a scaled
/// co-occurrence matrix: `prev = U_d sqrt(S_d)`, `subs = V_d sqrt(S_d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdEmbedding<S: Scalar> {
    pub variant: Variant,
    pub vocab: CourseVocab,
    /// |C| x d previous-course embeddings.
    pub prev: Mat<S>,
    /// |C| x d subsequent-course embeddings.
    pub subs: Mat<S>,
    /// Singular values, descending.
    pub sigma: Vec<S>,
}

impl<S: Scalar> SvdEmbedding<S> {
    pub fn dim(&self) -> usize {
        self.prev.cols()
    }

    /// Mean of the previous-course embeddings over the context courses.
    /// Context courses outside the vocabulary are skipped; an entirely
    /// unseen context is an empty-profile error.
    pub fn profile(&self, context: &[String]) -> Result<Vec<S>> {
        mean_rows(&self.prev, &self.vocab, context)
    }
}

/// Computes the rank-`d` embedding of a (scaled) co-occurrence matrix.
pub fn embed<S: Scalar>(matrix: &CooccurrenceMatrix<S>, d: usize) -> Result<SvdEmbedding<S>> {
    let dense = matrix.to_dense();
    let svd = truncated_svd(&dense, d)?;
    let n = matrix.n_courses();
    let mut prev = Mat::zeros(n, d);
    let mut subs = Mat::zeros(n, d);
    for k in 0..d {
        let root = svd.sigma[k].sqrt();
        for i in 0..n {
            prev.set(i, k, svd.u.get(i, k) * root);
            subs.set(i, k, svd.v.get(i, k) * root);
        }
    }
    Ok(SvdEmbedding { variant: matrix.variant, vocab: matrix.vocab.clone(), prev, subs, sigma: svd.sigma })
}

/// Scores candidates by the dot product between the student profile (mean of
/// context previous-embeddings) and each candidate's subsequent embedding,
/// ranked non-increasing with ties broken by ascending course id. Candidates
/// unseen in training score zero.
pub fn svd_rank<S: Scalar>(
    embedding: &SvdEmbedding<S>,
    context: &[String],
    candidates: &[String],
) -> Result<Vec<(String, S)>> {
    let profile = embedding.profile(context)?;
    let mut ranked: Vec<(String, S)> = candidates
        .iter()
        .map(|c| {
            let score = match embedding.vocab.index_of(c) {
                Some(idx) => dot(&profile, embedding.subs.row(idx as usize)),
                None => S::zero(),
            };
            (c.clone(), score)
        })
        .collect();
    sort_ranked(&mut ranked);
    Ok(ranked)
}

/// Mean of the rows of `mat` selected by the context course ids, counting
/// multiplicity. Unseen ids are skipped.
pub(crate) fn mean_rows<S: Scalar>(
    mat: &Mat<S>,
    vocab: &CourseVocab,
    context: &[String],
) -> Result<Vec<S>> {
    let mut sum = vec![S::zero(); mat.cols()];
    let mut seen = 0usize;
    for course in context {
        if let Some(idx) = vocab.index_of(course) {
            crate::matrix::axpy(&mut sum, S::one(), mat.row(idx as usize));
            seen += 1;
        }
    }
    if seen == 0 {
        return Err(Error::Data(
            "empty profile: no context course present in the model vocabulary".into(),
        ));
    }
    let inv = S::one() / S::from_f64(seen as f64);
    for x in sum.iter_mut() {
        *x *= inv;
    }
    Ok(sum)
}
