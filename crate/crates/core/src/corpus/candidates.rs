use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use crate::corpus::Grade;
use crate::error::{Error, Result};

/// Recommendations are only made for students with at least this many
/// previously taken courses.
pub const MIN_PRIOR_COURSES: usize = 3;

/// Which courses are offered in which term.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Offerings {
    by_term: BTreeMap<u32, BTreeSet<String>>,
}

impl Offerings {
    pub fn new() -> Offerings {
        Offerings::default()
    }

    /// Every course offered in every term of `terms`.
    pub fn dense(courses: impl IntoIterator<Item = String>, terms: impl IntoIterator<Item = u32>) -> Offerings {
        let all: BTreeSet<String> = courses.into_iter().collect();
        let by_term = terms.into_iter().map(|t| (t, all.clone())).collect();
        Offerings { by_term }
    }

    pub fn insert(&mut self, course: impl Into<String>, term: u32) {
        self.by_term.entry(term).or_default().insert(course.into());
    }

    pub fn is_offered(&self, course: &str, term: u32) -> bool {
        self.by_term.get(&term).is_some_and(|set| set.contains(course))
    }

    pub fn offered_in(&self, term: u32) -> impl Iterator<Item = &str> {
        self.by_term.get(&term).into_iter().flatten().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.by_term.iter().flat_map(|(t, set)| set.iter().map(move |c| (c.as_str(), *t)))
    }

    /// Parses the offerings CSV (`course_id,term` per row, header required).
    pub fn from_csv<R: Read>(reader: R) -> Result<Offerings> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv_reader
            .headers()
            .map_err(|e| Error::parse(1, format!("cannot read header: {e}")))?
            .clone();
        let c_course = headers
            .iter()
            .position(|h| h == "course_id")
            .ok_or_else(|| Error::parse(1, "missing column course_id"))?;
        let c_term = headers
            .iter()
            .position(|h| h == "term")
            .ok_or_else(|| Error::parse(1, "missing column term"))?;
        let mut offerings = Offerings::new();
        for record in csv_reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                Error::parse(line, format!("malformed row: {e}"))
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let course = record
                .get(c_course)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::parse(line, "missing course_id"))?;
            let term: u32 = record
                .get(c_term)
                .ok_or_else(|| Error::parse(line, "missing term"))?
                .parse()
                .map_err(|e| Error::parse(line, format!("bad term index: {e}")))?;
            offerings.insert(course, term);
        }
        Ok(offerings)
    }
}

/// Candidate courses for a (student, term) query: courses offered in the
/// target term, excluding any course previously taken with a grade at or
/// above C+ or within 1.0 of the student's average previous grade.
///
/// `prior` holds all prior takes as (course, numeric grade) pairs; the mean
/// is taken over all of them, at recommendation time.
pub fn eligible_candidates(
    prior: &[(String, f64)],
    term: u32,
    offerings: &Offerings,
) -> Vec<String> {
    let mean = if prior.is_empty() {
        None
    } else {
        Some(prior.iter().map(|(_, g)| g).sum::<f64>() / prior.len() as f64)
    };
    let mut best_prior: BTreeMap<&str, f64> = BTreeMap::new();
    for (course, grade) in prior {
        best_prior
            .entry(course.as_str())
            .and_modify(|cur| *cur = cur.max(*grade))
            .or_insert(*grade);
    }
    let cplus = Grade::CPlus.numeric();
    offerings
        .offered_in(term)
        .filter(|course| match best_prior.get(course) {
            None => true,
            Some(&g) => {
                let repeat_ok = g < cplus && mean.is_none_or(|m| g < m - 1.0);
                repeat_ok
            }
        })
        .map(|c| c.to_string())
        .collect()
}

/// Academic level from credits accumulated at term start.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AcademicLevel {
    Freshman,
    Sophomore,
    Junior,
    Senior,
}

impl AcademicLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            AcademicLevel::Freshman => "freshman",
            AcademicLevel::Sophomore => "sophomore",
            AcademicLevel::Junior => "junior",
            AcademicLevel::Senior => "senior",
        }
    }
}

impl fmt::Display for AcademicLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Freshman up to 30 credits, sophomore up to 60, junior up to 90, senior above.
pub fn academic_level(credits: f64) -> AcademicLevel {
    if credits <= 30.0 {
        AcademicLevel::Freshman
    } else if credits <= 60.0 {
        AcademicLevel::Sophomore
    } else if credits <= 90.0 {
        AcademicLevel::Junior
    } else {
        AcademicLevel::Senior
    }
}
