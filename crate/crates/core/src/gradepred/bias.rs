use std::collections::BTreeMap;

use crate::corpus::TrainingInstance;
use crate::error::{Error, Result};

/// Shrinkage strength for the student and course offsets, in pseudo-counts.
pub const BIAS_PSEUDO_COUNTS: f64 = 5.0;

/// Global mean plus regularized student and course offsets.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasBaseline {
    pub global_mean: f64,
    pub student_offsets: BTreeMap<String, f64>,
    pub course_offsets: BTreeMap<String, f64>,
}

impl BiasBaseline {
    /// Unseen students and courses contribute no offset.
    pub fn predict(&self, student: &str, course: &str) -> f64 {
        self.global_mean
            + self.student_offsets.get(student).copied().unwrap_or(0.0)
            + self.course_offsets.get(course).copied().unwrap_or(0.0)
    }
}

/// Fits the baseline on the target-term grades of the training instances.
/// Offsets shrink toward zero with [`BIAS_PSEUDO_COUNTS`] pseudo-counts.
pub fn fit_bias_baseline(instances: &[TrainingInstance]) -> Result<BiasBaseline> {
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for inst in instances {
        for (_, grade) in &inst.graded_targets {
            sum += grade;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Data("cannot fit a bias baseline without training grades".into()));
    }
    let global_mean = sum / count as f64;

    let mut per_student: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for inst in instances {
        let entry = per_student.entry(inst.student.as_str()).or_insert((0.0, 0));
        for (_, grade) in &inst.graded_targets {
            entry.0 += grade - global_mean;
            entry.1 += 1;
        }
    }
    let student_offsets: BTreeMap<String, f64> = per_student
        .iter()
        .map(|(s, (residual, n))| {
            (s.to_string(), residual / (*n as f64 + BIAS_PSEUDO_COUNTS))
        })
        .collect();

    let mut per_course: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for inst in instances {
        let student_offset = student_offsets[inst.student.as_str()];
        for (course, grade) in &inst.graded_targets {
            let entry = per_course.entry(course.as_str()).or_insert((0.0, 0));
            entry.0 += grade - global_mean - student_offset;
            entry.1 += 1;
        }
    }
    let course_offsets = per_course
        .iter()
        .map(|(c, (residual, n))| {
            (c.to_string(), residual / (*n as f64 + BIAS_PSEUDO_COUNTS))
        })
        .collect();

    Ok(BiasBaseline { global_mean, student_offsets, course_offsets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{label_good_bad, CourseTake, Grade, StudentHistory, TermCourses};

    fn instance(student: &str, course: &str, grade: Grade) -> TrainingInstance {
        let h = StudentHistory::new(
            student.into(),
            "CS".into(),
            vec![
                TermCourses {
                    term: 1,
                    courses: vec![CourseTake { course: "seed".into(), grade: Grade::B, credits: 3.0 }],
                },
                TermCourses {
                    term: 2,
                    courses: vec![CourseTake { course: course.into(), grade, credits: 3.0 }],
                },
            ],
        );
        label_good_bad(&h).remove(0)
    }

    #[test]
    fn unseen_pair_predicts_global_mean() {
        let instances = vec![instance("s1", "x", Grade::B), instance("s2", "y", Grade::A)];
        let model = fit_bias_baseline(&instances).unwrap();
        assert_eq!(model.predict("nobody", "nothing"), model.global_mean);
        assert!((model.global_mean - 3.5).abs() < 1e-12);
    }

    #[test]
    fn straight_a_student_shifts_up() {
        // one student with all A grades over balanced courses
        let mut instances = Vec::new();
        for (student, grade) in [("ace", Grade::A), ("mid", Grade::C)] {
            for course in ["x", "y", "z", "w"] {
                instances.push(instance(student, course, grade));
            }
        }
        let model = fit_bias_baseline(&instances).unwrap();
        // closed-form shrinkage: mean 3.0, residual per take 1.0 over 4 takes
        let expected = 4.0 * 1.0 / (4.0 + BIAS_PSEUDO_COUNTS);
        assert!((model.student_offsets["ace"] - expected).abs() < 1e-12);
        assert!(model.predict("ace", "x") > model.global_mean);
        assert!(model.predict("ace", "x") < 4.0);
    }

    #[test]
    fn single_observation_shrinks_toward_mean() {
        let instances = vec![instance("s1", "x", Grade::A)];
        let model = fit_bias_baseline(&instances).unwrap();
        let p = model.predict("s1", "x");
        // with one observation the global mean equals the observation
        assert!((p - 4.0).abs() < 1e-12);
        // a fresh course for the same student stays between mean and observation
        let q = model.predict("s1", "other");
        assert!(q >= model.global_mean - 1e-12 && q <= 4.0 + 1e-12);
    }

    #[test]
    fn empty_corpus_is_error() {
        assert!(fit_bias_baseline(&[]).is_err());
    }
}
