use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{Grade, StudentHistory};
use crate::error::{Error, Result};

/// One (context, good set, bad set) training example for a student-term.
///
/// An instance exists for every term with a defined prior mean (the second
/// term onward). The context holds the prior courses with grades strictly
/// above D+, one entry per qualifying take, so a retake contributes once per
/// take. `good` and `bad` partition the target-term courses by whether the
/// grade was at least the student's mean grade over all earlier terms.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingInstance {
    pub student: String,
    pub major: String,
    /// Term index of the target term.
    pub term: u32,
    /// 0-based position of the target term within the student's term list.
    pub term_pos: usize,
    pub context: Vec<String>,
    pub good: BTreeSet<String>,
    pub bad: BTreeSet<String>,
    /// Target-term takes with numeric grades.
    pub graded_targets: Vec<(String, f64)>,
    /// All prior takes (unfiltered) with numeric grades, in term order.
    pub prior_graded: Vec<(String, f64)>,
    /// Mean numeric grade over all prior takes.
    pub prior_mean: f64,
    /// Earned credits before the target term.
    pub prior_credits: f64,
    pub prior_take_count: usize,
}

/// Labels each term of `history` (from the second term on) into a
/// [`TrainingInstance`], splitting target courses into good/bad relative to
/// the student's average previous grade.
pub fn label_good_bad(history: &StudentHistory) -> Vec<TrainingInstance> {
    let mut instances = Vec::new();
    for pos in 1..history.terms.len() {
        let mean = match history.prefix_mean(pos) {
            Some(m) => m,
            None => continue,
        };
        let term = &history.terms[pos];

        let context: Vec<String> = history
            .prior_takes(pos)
            .filter(|(take, _)| take.grade > Grade::DPlus)
            .map(|(take, _)| take.course.clone())
            .collect();
        let prior_graded: Vec<(String, f64)> = history
            .prior_takes(pos)
            .map(|(take, _)| (take.course.clone(), take.grade.numeric()))
            .collect();

        // If a course somehow appears twice in one term, label it by its best take.
        let mut best_take: BTreeMap<&str, f64> = BTreeMap::new();
        for take in &term.courses {
            let g = take.grade.numeric();
            best_take
                .entry(take.course.as_str())
                .and_modify(|cur| *cur = cur.max(g))
                .or_insert(g);
        }
        let mut good = BTreeSet::new();
        let mut bad = BTreeSet::new();
        for (course, g) in &best_take {
            if *g >= mean {
                good.insert(course.to_string());
            } else {
                bad.insert(course.to_string());
            }
        }

        instances.push(TrainingInstance {
            student: history.student.clone(),
            major: history.major.clone(),
            term: term.term,
            term_pos: pos,
            context,
            good,
            bad,
            graded_targets: term
                .courses
                .iter()
                .map(|t| (t.course.clone(), t.grade.numeric()))
                .collect(),
            prior_graded,
            prior_mean: mean,
            prior_credits: history.prefix_credits(pos),
            prior_take_count: history.prefix_take_count(pos),
        });
    }
    instances
}

#[derive(Debug, Default)]
pub struct DataSplit {
    pub train: Vec<TrainingInstance>,
    pub valid: Vec<TrainingInstance>,
    pub test: Vec<TrainingInstance>,
    /// Non-fatal notes, e.g. empty partitions.
    pub warnings: Vec<String>,
}

/// Assigns each instance to train/valid/test by its target term: train for
/// terms up to `train_end`, valid up to `valid_end`, test afterwards.
/// Contexts are per-student prefixes and always reach back across boundaries.
pub fn split_by_time(
    histories: &[StudentHistory],
    train_end: u32,
    valid_end: u32,
) -> Result<DataSplit> {
    if train_end >= valid_end {
        return Err(Error::Config(format!(
            "train_end ({train_end}) must be below valid_end ({valid_end})"
        )));
    }
    let mut split = DataSplit::default();
    for history in histories {
        for instance in label_good_bad(history) {
            if instance.term <= train_end {
                split.train.push(instance);
            } else if instance.term <= valid_end {
                split.valid.push(instance);
            } else {
                split.test.push(instance);
            }
        }
    }
    for (name, part) in
        [("train", &split.train), ("valid", &split.valid), ("test", &split.test)]
    {
        if part.is_empty() {
            split.warnings.push(format!("{name} partition is empty"));
        }
    }
    Ok(split)
}
