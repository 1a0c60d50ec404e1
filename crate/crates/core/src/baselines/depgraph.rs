use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::baselines::mwu::mann_whitney_u;
use crate::corpus::StudentHistory;
use crate::error::Result;
use crate::ranker::sort_ranked;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct DepGraphConfig {
    /// One-sided significance threshold.
    pub alpha: f64,
    /// Minimum grade samples required in both comparison groups.
    pub min_n: usize,
    /// Only takes in terms up to this index are used, when set.
    pub max_term: Option<u32>,
}

impl Default for DepGraphConfig {
    fn default() -> Self {
        DepGraphConfig { alpha: 0.05, min_n: 10, max_term: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DependencyEdge {
    pub src: String,
    pub dst: String,
    pub u: f64,
    pub p: f64,
}

/// Directed course graph: an edge A -> B asserts a statistically significant
/// grade benefit in B from taking A before B.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DependencyGraph {
    pub edges: Vec<DependencyEdge>,
    into: HashMap<String, HashSet<String>>,
}

impl DependencyGraph {
    pub fn from_edges(edges: Vec<DependencyEdge>) -> DependencyGraph {
        let mut into: HashMap<String, HashSet<String>> = HashMap::new();
        for e in &edges {
            into.entry(e.dst.clone()).or_default().insert(e.src.clone());
        }
        DependencyGraph { edges, into }
    }

    pub fn has_edge(&self, src: &str, dst: &str) -> bool {
        self.into.get(dst).is_some_and(|srcs| srcs.contains(src))
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Builds the dependency graph from transcripts: for every ordered course
/// pair (A, B) with at least `min_n` grade samples in both the
/// "A before B" and "A not before B" groups, adds the edge A -> B when the
/// one-sided Mann-Whitney test (grades with A first stochastically larger)
/// is significant at `alpha`.
pub fn build_dependency_graph(
    histories: &[StudentHistory],
    config: &DepGraphConfig,
) -> Result<DependencyGraph> {
    // course vocabulary over the considered window
    let mut vocab: BTreeSet<&str> = BTreeSet::new();
    for history in histories {
        for term in &history.terms {
            if config.max_term.is_some_and(|m| term.term > m) {
                continue;
            }
            for take in &term.courses {
                vocab.insert(&take.course);
            }
        }
    }
    let course_idx: BTreeMap<&str, u32> =
        vocab.iter().enumerate().map(|(i, c)| (*c, i as u32)).collect();
    let courses: Vec<&str> = vocab.into_iter().collect();
    let n = courses.len();

    // grades of B takes, split by whether A was taken strictly before
    let mut with_first: BTreeMap<(u32, u32), Vec<f64>> = BTreeMap::new();
    let mut without: BTreeMap<(u32, u32), Vec<f64>> = BTreeMap::new();
    for history in histories {
        let takes: Vec<(u32, f64, u32)> = history
            .terms
            .iter()
            .filter(|t| config.max_term.is_none_or(|m| t.term <= m))
            .flat_map(|t| {
                t.courses
                    .iter()
                    .map(move |c| (course_idx[c.course.as_str()], c.grade.numeric(), t.term))
            })
            .collect();
        for &(b, grade, term) in &takes {
            let before: HashSet<u32> =
                takes.iter().filter(|&&(_, _, t)| t < term).map(|&(c, _, _)| c).collect();
            for a in 0..n as u32 {
                if a == b {
                    continue;
                }
                if before.contains(&a) {
                    with_first.entry((a, b)).or_default().push(grade);
                } else {
                    without.entry((a, b)).or_default().push(grade);
                }
            }
        }
    }

    let mut edges = Vec::new();
    for ((a, b), with_grades) in &with_first {
        if with_grades.len() < config.min_n {
            continue;
        }
        let without_grades = match without.get(&(*a, *b)) {
            Some(g) if g.len() >= config.min_n => g,
            _ => continue,
        };
        let result = mann_whitney_u(with_grades, without_grades)?;
        if result.p < config.alpha {
            edges.push(DependencyEdge {
                src: courses[*a as usize].to_string(),
                dst: courses[*b as usize].to_string(),
                u: result.u,
                p: result.p,
            });
        }
    }
    Ok(DependencyGraph::from_edges(edges))
}

/// Scores each candidate by the number of distinct context courses with an
/// edge into it.
pub fn depgraph_rank<S: Scalar>(
    graph: &DependencyGraph,
    context: &[String],
    candidates: &[String],
) -> Vec<(String, S)> {
    let distinct: BTreeSet<&String> = context.iter().collect();
    let mut ranked: Vec<(String, S)> = candidates
        .iter()
        .map(|candidate| {
            let score =
                distinct.iter().filter(|ctx| graph.has_edge(ctx, candidate)).count();
            (candidate.clone(), S::from_f64(score as f64))
        })
        .collect();
    sort_ranked(&mut ranked);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CourseTake, Grade, TermCourses};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn take(course: &str, grade: Grade) -> CourseTake {
        CourseTake { course: course.to_string(), grade, credits: 3.0 }
    }

    fn history(id: String, terms: Vec<(u32, Vec<CourseTake>)>) -> StudentHistory {
        StudentHistory::new(
            id,
            "CS".into(),
            terms.into_iter().map(|(term, courses)| TermCourses { term, courses }).collect(),
        )
    }

    /// Half the students take a before b (and do well in b), half take b
    /// cold (one letter grade lower).
    fn planted_corpus(students: usize) -> Vec<StudentHistory> {
        (0..students)
            .map(|s| {
                if s % 2 == 0 {
                    history(
                        format!("s{s:03}"),
                        vec![
                            (1, vec![take("a", Grade::B)]),
                            (2, vec![take("b", Grade::A), take("c", Grade::B)]),
                        ],
                    )
                } else {
                    history(
                        format!("s{s:03}"),
                        vec![
                            (1, vec![take("c", Grade::B)]),
                            (2, vec![take("b", Grade::B), take("a", Grade::B)]),
                        ],
                    )
                }
            })
            .collect()
    }

    #[test]
    fn planted_prerequisite_recovered() {
        let histories = planted_corpus(60);
        let graph =
            build_dependency_graph(&histories, &DepGraphConfig::default()).unwrap();
        assert!(graph.has_edge("a", "b"), "edges: {:?}", graph.edges);
        // no benefit planted in the reverse direction
        assert!(!graph.has_edge("b", "a"));
    }

    #[test]
    fn pairs_below_min_n_are_skipped() {
        let histories = planted_corpus(8);
        let config = DepGraphConfig { min_n: 10, ..Default::default() };
        let graph = build_dependency_graph(&histories, &config).unwrap();
        assert!(graph.is_empty());
    }

    #[test]
    fn null_corpus_edge_rate_within_calibration() {
        // independent random grades; the edge rate over tested pairs must
        // stay within 2 * alpha
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let grades = [Grade::A, Grade::AMinus, Grade::B, Grade::BMinus, Grade::C];
        let courses: Vec<String> = (0..12).map(|i| format!("c{i:02}")).collect();
        let histories: Vec<StudentHistory> = (0..160)
            .map(|s| {
                // random course order over 4 terms, 3 courses each
                let mut order: Vec<usize> = (0..12).collect();
                for i in (1..order.len()).rev() {
                    let j = rng.random_range(0..=i);
                    order.swap(i, j);
                }
                let terms: Vec<(u32, Vec<CourseTake>)> = (0..4)
                    .map(|t| {
                        let courses_in_term = order[t * 3..(t + 1) * 3]
                            .iter()
                            .map(|&c| take(&courses[c], grades[rng.random_range(0..grades.len())]))
                            .collect();
                        (t as u32 + 1, courses_in_term)
                    })
                    .collect();
                history(format!("s{s:03}"), terms)
            })
            .collect();
        let config = DepGraphConfig { alpha: 0.05, min_n: 10, max_term: None };
        let graph = build_dependency_graph(&histories, &config).unwrap();
        // count testable ordered pairs
        let testable = 12 * 11;
        let rate = graph.len() as f64 / testable as f64;
        assert!(rate <= 2.0 * config.alpha, "edge rate {rate}");
    }

    #[test]
    fn invariant_under_student_relabeling() {
        let histories = planted_corpus(40);
        let relabeled: Vec<StudentHistory> = histories
            .iter()
            .map(|h| {
                let mut h2 = h.clone();
                h2.student = format!("renamed-{}", h.student);
                h2
            })
            .collect();
        let g1 = build_dependency_graph(&histories, &DepGraphConfig::default()).unwrap();
        let g2 = build_dependency_graph(&relabeled, &DepGraphConfig::default()).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn rank_counts_context_edges() {
        let graph = DependencyGraph::from_edges(vec![
            DependencyEdge { src: "a".into(), dst: "x".into(), u: 0.0, p: 0.01 },
            DependencyEdge { src: "b".into(), dst: "x".into(), u: 0.0, p: 0.01 },
            DependencyEdge { src: "c".into(), dst: "x".into(), u: 0.0, p: 0.01 },
            DependencyEdge { src: "a".into(), dst: "y".into(), u: 0.0, p: 0.01 },
        ]);
        let context: Vec<String> =
            ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let ranked = depgraph_rank::<f64>(
            &graph,
            &context,
            &["x".to_string(), "y".to_string(), "z".to_string()],
        );
        assert_eq!(ranked[0], ("x".to_string(), 3.0));
        assert_eq!(ranked[1], ("y".to_string(), 1.0));
        assert_eq!(ranked[2], ("z".to_string(), 0.0));
    }

    #[test]
    fn empty_graph_scores_zero() {
        let graph = DependencyGraph::default();
        let ranked = depgraph_rank::<f64>(
            &graph,
            &["a".to_string()],
            &["y".to_string(), "x".to_string()],
        );
        assert!(ranked.iter().all(|(_, s)| *s == 0.0));
        assert_eq!(ranked[0].0, "x"); // lexicographic on ties
    }

    #[test]
    fn score_matches_independent_recount() {
        // 10-course fixture with a fixed edge set
        let mut edges = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                if (i * 3 + j) % 4 == 0 && i != j {
                    edges.push(DependencyEdge {
                        src: format!("c{i}"),
                        dst: format!("c{j}"),
                        u: 0.0,
                        p: 0.01,
                    });
                }
            }
        }
        let graph = DependencyGraph::from_edges(edges.clone());
        let context: Vec<String> = (0..5).map(|i| format!("c{i}")).collect();
        let candidates: Vec<String> = (0..10).map(|i| format!("c{i}")).collect();
        let ranked = depgraph_rank::<f64>(&graph, &context, &candidates);
        for (course, score) in &ranked {
            let expected = edges
                .iter()
                .filter(|e| e.dst == *course && context.contains(&e.src))
                .count() as f64;
            assert_eq!(*score, expected, "course {course}");
        }
    }
}
