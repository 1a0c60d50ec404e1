use std::collections::BTreeMap;
use std::io::Read;

use crate::corpus::Grade;
use crate::error::{Error, Result};

pub const DEFAULT_CREDITS: f64 = 3.0;

/// One (student, course, term, grade) enrollment event.
#[derive(Clone, Debug, PartialEq)]
pub struct EnrollmentRecord {
    pub student: String,
    pub course: String,
    pub term: u32,
    pub grade: Grade,
    pub major: String,
    pub credits: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CourseTake {
    pub course: String,
    pub grade: Grade,
    pub credits: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TermCourses {
    pub term: u32,
    pub courses: Vec<CourseTake>,
}

/// A student's term-ordered transcript with precomputed prefix statistics.
#[derive(Clone, Debug)]
pub struct StudentHistory {
    pub student: String,
    pub major: String,
    /// Terms in strictly ascending term-index order.
    pub terms: Vec<TermCourses>,
    /// `prefix_mean[i]` is the mean numeric grade over all courses in terms
    /// before position `i`; `None` when there are no prior courses.
    prefix_mean: Vec<Option<f64>>,
    /// Earned (non-F) credits accumulated before position `i`.
    prefix_credits: Vec<f64>,
    /// Number of course takes before position `i`.
    prefix_count: Vec<usize>,
}

impl StudentHistory {
    pub fn new(student: String, major: String, terms: Vec<TermCourses>) -> StudentHistory {
        debug_assert!(terms.windows(2).all(|w| w[0].term < w[1].term));
        let n = terms.len();
        let mut prefix_mean = Vec::with_capacity(n + 1);
        let mut prefix_credits = Vec::with_capacity(n + 1);
        let mut prefix_count = Vec::with_capacity(n + 1);
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut credits = 0.0;
        for term in &terms {
            prefix_mean.push(if count > 0 { Some(sum / count as f64) } else { None });
            prefix_credits.push(credits);
            prefix_count.push(count);
            for take in &term.courses {
                sum += take.grade.numeric();
                count += 1;
                if take.grade > Grade::F {
                    credits += take.credits;
                }
            }
        }
        prefix_mean.push(if count > 0 { Some(sum / count as f64) } else { None });
        prefix_credits.push(credits);
        prefix_count.push(count);
        StudentHistory { student, major, terms, prefix_mean, prefix_credits, prefix_count }
    }

    /// Mean numeric grade over all courses taken before term position `pos`.
    pub fn prefix_mean(&self, pos: usize) -> Option<f64> {
        self.prefix_mean[pos]
    }

    /// Earned credits accumulated before term position `pos`.
    pub fn prefix_credits(&self, pos: usize) -> f64 {
        self.prefix_credits[pos]
    }

    /// Number of course takes before term position `pos`.
    pub fn prefix_take_count(&self, pos: usize) -> usize {
        self.prefix_count[pos]
    }

    /// GPA over the full transcript.
    pub fn final_gpa(&self) -> Option<f64> {
        self.prefix_mean[self.terms.len()]
    }

    /// All takes strictly before term position `pos`, in term order.
    pub fn prior_takes(&self, pos: usize) -> impl Iterator<Item = (&CourseTake, u32)> {
        self.terms[..pos].iter().flat_map(|t| t.courses.iter().map(move |c| (c, t.term)))
    }

    /// All takes in terms with index strictly below `term`, in term order.
    pub fn takes_before_term(&self, term: u32) -> impl Iterator<Item = (&CourseTake, u32)> {
        self.terms
            .iter()
            .filter(move |t| t.term < term)
            .flat_map(|t| t.courses.iter().map(move |c| (c, t.term)))
    }
}

#[derive(Debug)]
pub struct ParsedTranscripts {
    pub histories: Vec<StudentHistory>,
    /// Rows dropped because the grade column held a pass/fail mark (S or N).
    pub dropped_pass_fail: usize,
}

/// Parses the transcript CSV (`student_id,course_id,term,grade_letter[,major,credits]`)
/// into per-student term-ordered histories.
///
/// Pass/fail rows (grade `S` or `N`) are dropped and counted. Malformed rows
/// and unknown grade letters are errors naming the offending line.
pub fn parse_transcripts<R: Read>(reader: R) -> Result<ParsedTranscripts> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let headers = csv_reader
        .headers()
        .map_err(|e| Error::parse(1, format!("cannot read header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let c_student =
        col("student_id").ok_or_else(|| Error::parse(1, "missing column student_id"))?;
    let c_course = col("course_id").ok_or_else(|| Error::parse(1, "missing column course_id"))?;
    let c_term = col("term").ok_or_else(|| Error::parse(1, "missing column term"))?;
    let c_grade =
        col("grade_letter").ok_or_else(|| Error::parse(1, "missing column grade_letter"))?;
    let c_major = col("major");
    let c_credits = col("credits");

    let mut dropped = 0usize;
    // student -> (major, term -> takes); BTreeMaps keep the merge deterministic.
    let mut students: BTreeMap<String, (String, BTreeMap<u32, Vec<CourseTake>>)> = BTreeMap::new();

    for record in csv_reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::parse(line, format!("malformed row: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize, name: &str| -> Result<&str> {
            record.get(idx).ok_or_else(|| Error::parse(line, format!("missing field {name}")))
        };

        let student = field(c_student, "student_id")?;
        let course = field(c_course, "course_id")?;
        if student.is_empty() || course.is_empty() {
            return Err(Error::parse(line, "empty student_id or course_id"));
        }
        let term: u32 = field(c_term, "term")?
            .parse()
            .map_err(|e| Error::parse(line, format!("bad term index: {e}")))?;
        let letter = field(c_grade, "grade_letter")?;
        if letter == "S" || letter == "N" {
            dropped += 1;
            continue;
        }
        let grade = Grade::from_letter(letter)
            .ok_or_else(|| Error::parse(line, format!("unknown grade letter {letter:?}")))?;
        let major = c_major.and_then(|i| record.get(i)).unwrap_or("").to_string();
        let credits = match c_credits.and_then(|i| record.get(i)) {
            None | Some("") => DEFAULT_CREDITS,
            Some(s) => {
                let v: f64 =
                    s.parse().map_err(|e| Error::parse(line, format!("bad credits: {e}")))?;
                if v < 0.0 {
                    return Err(Error::parse(line, "negative credits"));
                }
                v
            }
        };

        let entry = students.entry(student.to_string()).or_insert_with(|| (major.clone(), BTreeMap::new()));
        if entry.0.is_empty() && !major.is_empty() {
            entry.0 = major;
        }
        entry.1.entry(term).or_default().push(CourseTake {
            course: course.to_string(),
            grade,
            credits,
        });
    }

    let histories = students
        .into_iter()
        .map(|(student, (major, terms))| {
            let terms = terms
                .into_iter()
                .map(|(term, mut courses)| {
                    courses.sort_by(|a, b| a.course.cmp(&b.course));
                    TermCourses { term, courses }
                })
                .collect();
            StudentHistory::new(student, major, terms)
        })
        .collect();

    Ok(ParsedTranscripts { histories, dropped_pass_fail: dropped })
}
