//! Transcript ingestion, good/bad labeling, time splits and candidate filtering.

mod candidates;
mod grade;
mod instances;
mod transcript;
mod vocab;

pub use candidates::{academic_level, eligible_candidates, AcademicLevel, Offerings, MIN_PRIOR_COURSES};
pub use grade::Grade;
pub use instances::{label_good_bad, split_by_time, DataSplit, TrainingInstance};
pub use transcript::{
    parse_transcripts, CourseTake, EnrollmentRecord, ParsedTranscripts, StudentHistory, TermCourses,
};
pub use vocab::CourseVocab;
