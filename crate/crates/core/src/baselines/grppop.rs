use std::collections::BTreeMap;

use crate::corpus::{academic_level, AcademicLevel, TrainingInstance};
use crate::ranker::sort_ranked;
use crate::scalar::Scalar;
use crate::variant::Variant;

/// Per (major, academic level, course) good/bad subsequent-course counts
/// from the training split.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroupPopModel {
    counts: BTreeMap<(String, AcademicLevel, String), (u32, u32)>,
}

impl GroupPopModel {
    /// (n+, n-) for a course within a (major, level) group.
    pub fn counts(&self, major: &str, level: AcademicLevel, course: &str) -> (u32, u32) {
        self.counts
            .get(&(major.to_string(), level, course.to_string()))
            .copied()
            .unwrap_or((0, 0))
    }

    pub fn iter(
        &self,
    ) -> impl Iterator<Item = (&str, AcademicLevel, &str, u32, u32)> {
        self.counts.iter().map(|((major, level, course), (np, nm))| {
            (major.as_str(), *level, course.as_str(), *np, *nm)
        })
    }

    pub fn insert(&mut self, major: String, level: AcademicLevel, course: String, np: u32, nm: u32) {
        self.counts.insert((major, level, course), (np, nm));
    }
}

/// Counts each target course as good or bad within the student's
/// (major, academic level at term start) group.
pub fn build_grppop(train: &[TrainingInstance]) -> GroupPopModel {
    let mut model = GroupPopModel::default();
    for inst in train {
        let level = academic_level(inst.prior_credits);
        for (set, good) in [(&inst.good, true), (&inst.bad, false)] {
            for course in set {
                let entry = model
                    .counts
                    .entry((inst.major.clone(), level, course.clone()))
                    .or_insert((0, 0));
                if good {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
            }
        }
    }
    model
}

/// Ranks candidates by group popularity: n+ under `Plus`, n+ - n- under
/// `PlusMinus`, and n+ + n- under `PlusPlus` (the grade-unaware variation).
/// Unseen (major, level) groups score zero everywhere.
pub fn grppop_rank<S: Scalar>(
    model: &GroupPopModel,
    major: &str,
    level: AcademicLevel,
    candidates: &[String],
    variant: Variant,
) -> Vec<(String, S)> {
    let mut ranked: Vec<(String, S)> = candidates
        .iter()
        .map(|course| {
            let (np, nm) = model.counts(major, level, course);
            let score = match variant {
                Variant::Plus => np as f64,
                Variant::PlusMinus => np as f64 - nm as f64,
                Variant::PlusPlus => np as f64 + nm as f64,
            };
            (course.clone(), S::from_f64(score))
        })
        .collect();
    sort_ranked(&mut ranked);
    ranked
}
