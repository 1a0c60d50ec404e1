use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::corpus::{CourseVocab, TrainingInstance};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;
use crate::variant::Variant;

/// Raw previous->subsequent pair counts from the training instances.
///
/// `plus[(i, j)]` counts the instances whose context contains course `i`
/// and whose good set contains course `j`; `minus` likewise for bad
/// targets. One instance contributes at most once per (i, j) pair, but a
/// student contributes across all their terms.
#[derive(Clone, Debug, Default)]
pub struct PairCounts {
    pub vocab: CourseVocab,
    pub plus: BTreeMap<(u32, u32), u32>,
    pub minus: BTreeMap<(u32, u32), u32>,
}

impl PairCounts {
    pub fn count(instances: &[TrainingInstance]) -> PairCounts {
        let vocab = CourseVocab::from_instances(instances);
        let mut counts = PairCounts { vocab, ..PairCounts::default() };
        for inst in instances {
            let context: BTreeSet<u32> =
                inst.context.iter().filter_map(|c| counts.vocab.index_of(c)).collect();
            for (set, target_counts) in
                [(&inst.good, &mut counts.plus), (&inst.bad, &mut counts.minus)]
            {
                for course in set {
                    let j = match counts.vocab.index_of(course) {
                        Some(j) => j,
                        None => continue,
                    };
                    for &i in &context {
                        *target_counts.entry((i, j)).or_insert(0) += 1;
                    }
                }
            }
        }
        counts
    }

    /// n+ + n- for a pair.
    pub fn total(&self, i: u32, j: u32) -> u32 {
        self.plus.get(&(i, j)).copied().unwrap_or(0) + self.minus.get(&(i, j)).copied().unwrap_or(0)
    }

    pub fn good_bad(&self, i: u32, j: u32) -> (u32, u32) {
        (
            self.plus.get(&(i, j)).copied().unwrap_or(0),
            self.minus.get(&(i, j)).copied().unwrap_or(0),
        )
    }
}

/// Sparse |C| x |C| previous->subsequent frequency matrix, one of the
/// (+), (+-) or (++) variants. Entries are integer-valued counts until the
/// rows are L1-scaled.
#[derive(Clone, Debug, PartialEq)]
pub struct CooccurrenceMatrix<S: Scalar> {
    pub variant: Variant,
    pub vocab: CourseVocab,
    entries: BTreeMap<(u32, u32), S>,
}

impl<S: Scalar> CooccurrenceMatrix<S> {
    pub fn n_courses(&self) -> usize {
        self.vocab.len()
    }

    pub fn entry(&self, i: u32, j: u32) -> S {
        self.entries.get(&(i, j)).copied().unwrap_or_else(S::zero)
    }

    pub fn entry_by_id(&self, i: &str, j: &str) -> S {
        match (self.vocab.index_of(i), self.vocab.index_of(j)) {
            (Some(i), Some(j)) => self.entry(i, j),
            _ => S::zero(),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, u32, S)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> Mat<S> {
        let n = self.n_courses();
        let mut dense = Mat::zeros(n, n);
        for (i, j, v) in self.entries() {
            dense.set(i as usize, j as usize, v);
        }
        dense
    }
}

/// Builds the co-occurrence matrix of the given variant from the training
/// instances: F+ = n+, F+- = n+ - n-, F++ = n+ + n-.
pub fn build_cooccurrence<S: Scalar>(
    instances: &[TrainingInstance],
    variant: Variant,
) -> Result<CooccurrenceMatrix<S>> {
    if instances.is_empty() {
        return Err(Error::Data("cannot build a co-occurrence matrix from an empty training set".into()));
    }
    let counts = PairCounts::count(instances);
    Ok(matrix_from_counts(&counts, variant))
}

pub(crate) fn matrix_from_counts<S: Scalar>(
    counts: &PairCounts,
    variant: Variant,
) -> CooccurrenceMatrix<S> {
    let mut entries: BTreeMap<(u32, u32), S> = BTreeMap::new();
    match variant {
        Variant::Plus => {
            for (&key, &n) in &counts.plus {
                entries.insert(key, S::from_f64(n as f64));
            }
        }
        Variant::PlusMinus => {
            for (&key, &n) in &counts.plus {
                entries.insert(key, S::from_f64(n as f64));
            }
            for (&key, &n) in &counts.minus {
                let v = entries.remove(&key).unwrap_or_else(S::zero) - S::from_f64(n as f64);
                if v != S::zero() {
                    entries.insert(key, v);
                }
            }
        }
        Variant::PlusPlus => {
            for (&key, &n) in &counts.plus {
                entries.insert(key, S::from_f64(n as f64));
            }
            for (&key, &n) in &counts.minus {
                let v = entries.remove(&key).unwrap_or_else(S::zero) + S::from_f64(n as f64);
                entries.insert(key, v);
            }
        }
    }
    CooccurrenceMatrix { variant, vocab: counts.vocab.clone(), entries }
}

/// Scales every row with a nonzero L1 norm by the sum of absolute entries;
/// all-zero rows stay unchanged.
pub fn l1_scale_rows<S: Scalar>(mut matrix: CooccurrenceMatrix<S>) -> CooccurrenceMatrix<S> {
    let mut row_norms: BTreeMap<u32, S> = BTreeMap::new();
    for (&(i, _), &v) in &matrix.entries {
        *row_norms.entry(i).or_insert_with(S::zero) += v.abs();
    }
    for (&(i, _), v) in matrix.entries.iter_mut() {
        let norm = row_norms[&i];
        if norm > S::zero() {
            *v = *v / norm;
        }
    }
    matrix
}
