use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CourseVocab, TrainingInstance};
use crate::error::{Error, Result};
use crate::gradepred::GradePrediction;
use crate::matrix::{axpy, dot, Mat};
use crate::scalar::Scalar;

/// Latent provided/required knowledge components per course, plus a global
/// bias. A student's knowledge state is the grade-weighted sum of the
/// provided vectors of their prior courses; the predicted grade for a course
/// is the dot product of that state with the course's required vector.
#[derive(Clone, Debug, PartialEq)]
pub struct KnowledgeModel<S: Scalar> {
    pub vocab: CourseVocab,
    /// |C| x k provided-knowledge components.
    pub provided: Mat<S>,
    /// |C| x k required-knowledge components.
    pub required: Mat<S>,
    pub bias: S,
    /// When set, state weights are `grade - center` instead of the raw grade.
    pub center: Option<S>,
}

impl<S: Scalar> KnowledgeModel<S> {
    pub fn k(&self) -> usize {
        self.provided.cols()
    }

    fn weight(&self, grade: f64) -> S {
        match self.center {
            Some(c) => S::from_f64(grade) - c,
            None => S::from_f64(grade),
        }
    }
}

/// Grade-weighted sum of the provided vectors over the prior courses.
/// Priors outside the vocabulary contribute nothing; an empty prior list is
/// an error.
pub fn knowledge_state<S: Scalar>(
    model: &KnowledgeModel<S>,
    prior: &[(String, f64)],
) -> Result<Vec<S>> {
    if prior.is_empty() {
        return Err(Error::Data("knowledge state requires at least one prior course".into()));
    }
    let mut state = vec![S::zero(); model.k()];
    for (course, grade) in prior {
        if let Some(idx) = model.vocab.index_of(course) {
            axpy(&mut state, model.weight(*grade), model.provided.row(idx as usize));
        }
    }
    Ok(state)
}

/// `state . required_course + bias`; unknown courses fall back to the bias
/// alone and are flagged.
pub fn predict_grade<S: Scalar>(
    model: &KnowledgeModel<S>,
    state: &[S],
    course: &str,
) -> GradePrediction<S> {
    match model.vocab.index_of(course) {
        Some(idx) => GradePrediction {
            course: course.to_string(),
            predicted: dot(state, model.required.row(idx as usize)) + model.bias,
            fallback: false,
        },
        None => {
            GradePrediction { course: course.to_string(), predicted: model.bias, fallback: true }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnowledgeFitConfig {
    pub k: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// L2 strength on both component matrices.
    pub l2: f64,
    pub seed: u64,
    /// Weight states by centered grades instead of raw grades.
    pub centered: bool,
}

impl Default for KnowledgeFitConfig {
    fn default() -> Self {
        KnowledgeFitConfig {
            k: 10,
            epochs: 30,
            learning_rate: 0.01,
            l2: 0.01,
            seed: 1,
            centered: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KnowledgeFit<S: Scalar> {
    pub model: KnowledgeModel<S>,
    /// Training RMSE per epoch, from pre-update residuals.
    pub rmse_per_epoch: Vec<f64>,
}

/// Fits the knowledge model by SGD on the squared error of the predicted
/// grade against each observed target-term grade. Deterministic for a given
/// seed.
pub fn fit_knowledge<S: Scalar>(
    instances: &[TrainingInstance],
    config: &KnowledgeFitConfig,
) -> Result<KnowledgeFit<S>> {
    if config.k == 0 {
        return Err(Error::Config("knowledge dimension must be at least 1".into()));
    }
    if config.learning_rate <= 0.0 {
        return Err(Error::Config("learning rate must be positive".into()));
    }
    let samples: Vec<&TrainingInstance> =
        instances.iter().filter(|i| !i.prior_graded.is_empty()).collect();
    if samples.is_empty() || samples.iter().all(|i| i.graded_targets.is_empty()) {
        return Err(Error::Data("cannot fit a grade predictor without training grades".into()));
    }
    let vocab = CourseVocab::from_ids(instances.iter().flat_map(|inst| {
        inst.prior_graded
            .iter()
            .map(|(c, _)| c.clone())
            .chain(inst.graded_targets.iter().map(|(c, _)| c.clone()))
    }));
    let n = vocab.len();
    let k = config.k;

    let grade_count: usize = samples.iter().map(|i| i.graded_targets.len()).sum();
    let grade_sum: f64 =
        samples.iter().flat_map(|i| i.graded_targets.iter().map(|(_, g)| g)).sum();
    let global_mean = grade_sum / grade_count as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut init = |mat: &mut Mat<S>| {
        for i in 0..n {
            for j in 0..k {
                let r: f64 = rng.random();
                mat.set(i, j, S::from_f64((r - 0.5) / k as f64));
            }
        }
    };
    let mut provided: Mat<S> = Mat::zeros(n, k);
    let mut required: Mat<S> = Mat::zeros(n, k);
    init(&mut provided);
    init(&mut required);
    let mut model = KnowledgeModel {
        vocab,
        provided,
        required,
        bias: S::from_f64(global_mean),
        center: config.centered.then(|| S::from_f64(global_mean)),
    };

    let lr = S::from_f64(config.learning_rate);
    let l2 = S::from_f64(config.l2);
    let mut rmse_per_epoch = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut sq_sum = 0.0f64;
        let mut count = 0usize;
        for inst in &samples {
            // distinct prior rows with summed weights
            let mut prior_rows: Vec<(u32, S)> = Vec::new();
            for (course, grade) in &inst.prior_graded {
                if let Some(idx) = model.vocab.index_of(course) {
                    let weight = model.weight(*grade);
                    match prior_rows.iter_mut().find(|(r, _)| *r == idx) {
                        Some((_, acc)) => *acc += weight,
                        None => prior_rows.push((idx, weight)),
                    }
                }
            }
            if prior_rows.is_empty() {
                continue;
            }
            for (course, grade) in &inst.graded_targets {
                let target_idx = match model.vocab.index_of(course) {
                    Some(idx) => idx as usize,
                    None => continue,
                };
                let mut state = vec![S::zero(); k];
                for &(row, weight) in &prior_rows {
                    axpy(&mut state, weight, model.provided.row(row as usize));
                }
                let predicted = dot(&state, model.required.row(target_idx)) + model.bias;
                let err = predicted - S::from_f64(*grade);
                let err_f64 = err.to_f64();
                if !err_f64.is_finite() {
                    return Err(Error::Numeric(format!(
                        "grade-predictor training diverged at epoch {epoch}"
                    )));
                }
                sq_sum += err_f64 * err_f64;
                count += 1;

                // gradient step on required_c, the touched provided rows and the bias
                let required_row = model.required.row(target_idx).to_vec();
                {
                    let row = model.required.row_mut(target_idx);
                    for (ri, si) in row.iter_mut().zip(&state) {
                        *ri -= lr * (err * *si + l2 * *ri);
                    }
                }
                for &(prow, weight) in &prior_rows {
                    let row = model.provided.row_mut(prow as usize);
                    for (pi, ri) in row.iter_mut().zip(&required_row) {
                        *pi -= lr * (err * weight * *ri + l2 * *pi);
                    }
                }
                model.bias -= lr * err;
            }
        }
        rmse_per_epoch.push(if count > 0 { (sq_sum / count as f64).sqrt() } else { 0.0 });
    }
    if !model.provided.is_finite() || !model.required.is_finite() || !model.bias.is_finite() {
        return Err(Error::Numeric("grade-predictor training produced non-finite parameters".into()));
    }
    Ok(KnowledgeFit { model, rmse_per_epoch })
}

/// Reference per-sample loss and gradients for gradient checking. The loss
/// is the squared-error term plus the L2 terms of the touched rows.
pub mod diagnostics {
    use std::collections::BTreeMap;

    use super::*;

    pub fn sample_loss<S: Scalar>(
        provided: &Mat<S>,
        required: &Mat<S>,
        bias: S,
        prior_rows: &[(u32, S)],
        target: u32,
        target_grade: S,
        l2: S,
    ) -> S {
        let k = provided.cols();
        let mut state = vec![S::zero(); k];
        for &(row, weight) in prior_rows {
            axpy(&mut state, weight, provided.row(row as usize));
        }
        let err = dot(&state, required.row(target as usize)) + bias - target_grade;
        let half = S::from_f64(0.5);
        let mut reg = dot(required.row(target as usize), required.row(target as usize));
        for &(row, _) in prior_rows {
            reg += dot(provided.row(row as usize), provided.row(row as usize));
        }
        half * err * err + half * l2 * reg
    }

    #[derive(Clone, Debug)]
    pub struct SampleGradients<S> {
        pub provided_rows: BTreeMap<u32, Vec<S>>,
        pub required_row: Vec<S>,
        pub bias: S,
    }

    /// Descent gradients of [`sample_loss`].
    pub fn sample_gradients<S: Scalar>(
        provided: &Mat<S>,
        required: &Mat<S>,
        bias: S,
        prior_rows: &[(u32, S)],
        target: u32,
        target_grade: S,
        l2: S,
    ) -> SampleGradients<S> {
        let k = provided.cols();
        let mut state = vec![S::zero(); k];
        for &(row, weight) in prior_rows {
            axpy(&mut state, weight, provided.row(row as usize));
        }
        let err = dot(&state, required.row(target as usize)) + bias - target_grade;
        let required_grad: Vec<S> = required
            .row(target as usize)
            .iter()
            .zip(&state)
            .map(|(&r, &s)| err * s + l2 * r)
            .collect();
        let mut provided_rows = BTreeMap::new();
        for &(row, weight) in prior_rows {
            let grad: Vec<S> = provided
                .row(row as usize)
                .iter()
                .zip(required.row(target as usize))
                .map(|(&p, &r)| err * weight * r + l2 * p)
                .collect();
            provided_rows.insert(row, grad);
        }
        SampleGradients { provided_rows, required_row: required_grad, bias: err }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{label_good_bad, CourseTake, Grade, StudentHistory, TermCourses};

    fn model(n: usize, k: usize) -> KnowledgeModel<f64> {
        KnowledgeModel {
            vocab: CourseVocab::from_ids((0..n).map(|i| format!("c{i:02}"))),
            provided: Mat::zeros(n, k),
            required: Mat::zeros(n, k),
            bias: 0.0,
            center: None,
        }
    }

    #[test]
    fn single_prior_state_is_scaled_row() {
        let mut m = model(2, 2);
        m.provided.row_mut(0).copy_from_slice(&[0.5, -1.0]);
        let state = knowledge_state(&m, &[("c00".to_string(), 4.0)]).unwrap();
        assert_eq!(state, vec![2.0, -4.0]);
    }

    #[test]
    fn failing_grade_contributes_nothing() {
        let mut m = model(2, 2);
        m.provided.row_mut(0).copy_from_slice(&[0.5, -1.0]);
        m.provided.row_mut(1).copy_from_slice(&[1.0, 1.0]);
        let state = knowledge_state(
            &m,
            &[("c00".to_string(), 0.0), ("c01".to_string(), 2.0)],
        )
        .unwrap();
        assert_eq!(state, vec![2.0, 2.0]);
    }

    #[test]
    fn three_priors_match_weighted_sum_oracle() {
        let mut m = model(3, 2);
        let rows = [[0.1, 0.2], [-0.3, 0.4], [0.5, -0.6]];
        for (i, r) in rows.iter().enumerate() {
            m.provided.row_mut(i).copy_from_slice(r);
        }
        let priors =
            [("c00".to_string(), 3.0), ("c01".to_string(), 2.0), ("c02".to_string(), 4.0)];
        let state = knowledge_state(&m, &priors).unwrap();
        for dim in 0..2 {
            let expected: f64 =
                (0..3).map(|i| priors[i].1 * rows[i][dim]).sum();
            assert!((state[dim] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_priors_error() {
        let m = model(2, 2);
        assert!(knowledge_state(&m, &[]).is_err());
    }

    #[test]
    fn zero_model_predicts_bias() {
        let mut m = model(2, 2);
        m.bias = 2.5;
        let p = predict_grade(&m, &[1.0, 1.0], "c00");
        assert_eq!(p.predicted, 2.5);
        assert!(!p.fallback);
    }

    #[test]
    fn orthogonal_state_predicts_bias_only() {
        let mut m = model(2, 2);
        m.bias = 3.0;
        m.required.row_mut(0).copy_from_slice(&[1.0, 0.0]);
        let p = predict_grade(&m, &[0.0, 5.0], "c00");
        assert_eq!(p.predicted, 3.0);
    }

    #[test]
    fn hand_computed_prediction() {
        let mut m = model(2, 2);
        m.bias = 0.5;
        m.required.row_mut(1).copy_from_slice(&[2.0, -1.0]);
        let p = predict_grade(&m, &[0.25, 3.0], "c01");
        assert!((p.predicted - (0.25 * 2.0 + 3.0 * (-1.0) + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn unknown_course_falls_back_flagged() {
        let mut m = model(2, 2);
        m.bias = 2.0;
        let p = predict_grade(&m, &[1.0, 1.0], "zzz");
        assert_eq!(p.predicted, 2.0);
        assert!(p.fallback);
    }

    #[test]
    fn prediction_linear_in_state() {
        let mut m = model(2, 3);
        m.bias = 1.5;
        m.required.row_mut(0).copy_from_slice(&[0.3, -0.2, 0.9]);
        let state = [1.0, 2.0, -0.5];
        let scaled: Vec<f64> = state.iter().map(|x| 3.0 * x).collect();
        let p1 = predict_grade(&m, &state, "c00").predicted - m.bias;
        let p2 = predict_grade(&m, &scaled, "c00").predicted - m.bias;
        assert!((p2 - 3.0 * p1).abs() < 1e-12);
    }

    fn constant_corpus(grade: Grade) -> Vec<TrainingInstance> {
        let mut out = Vec::new();
        for s in 0..10 {
            let h = StudentHistory::new(
                format!("s{s}"),
                "CS".into(),
                vec![
                    TermCourses {
                        term: 1,
                        courses: vec![CourseTake {
                            course: format!("p{}", s % 3),
                            grade,
                            credits: 3.0,
                        }],
                    },
                    TermCourses {
                        term: 2,
                        courses: vec![CourseTake {
                            course: format!("t{}", s % 4),
                            grade,
                            credits: 3.0,
                        }],
                    },
                ],
            );
            out.extend(label_good_bad(&h));
        }
        out
    }

    #[test]
    fn constant_grades_converge_to_bias() {
        let instances = constant_corpus(Grade::B);
        let fit = fit_knowledge::<f64>(&instances, &KnowledgeFitConfig::default()).unwrap();
        assert!((fit.model.bias - 3.0).abs() < 0.01, "bias {}", fit.model.bias);
        let last_rmse = *fit.rmse_per_epoch.last().unwrap();
        assert!(last_rmse < 0.02, "rmse {last_rmse}");
    }

    #[test]
    fn planted_prerequisite_raises_prediction() {
        // q's grade is A iff p was taken before, C otherwise
        let mut instances = Vec::new();
        for s in 0..30 {
            let with_p = s % 2 == 0;
            let first = if with_p { "p" } else { "x" };
            let grade_q = if with_p { Grade::A } else { Grade::C };
            let h = StudentHistory::new(
                format!("s{s}"),
                "CS".into(),
                vec![
                    TermCourses {
                        term: 1,
                        courses: vec![CourseTake { course: first.into(), grade: Grade::B, credits: 3.0 }],
                    },
                    TermCourses {
                        term: 2,
                        courses: vec![CourseTake { course: "q".into(), grade: grade_q, credits: 3.0 }],
                    },
                ],
            );
            instances.extend(label_good_bad(&h));
        }
        let cfg = KnowledgeFitConfig { epochs: 200, learning_rate: 0.02, ..Default::default() };
        let fit = fit_knowledge::<f64>(&instances, &cfg).unwrap();
        let with_p = knowledge_state(&fit.model, &[("p".to_string(), 3.0)]).unwrap();
        let without = knowledge_state(&fit.model, &[("x".to_string(), 3.0)]).unwrap();
        let pred_with = predict_grade(&fit.model, &with_p, "q").predicted;
        let pred_without = predict_grade(&fit.model, &without, "q").predicted;
        assert!(
            pred_with > pred_without + 0.5,
            "with {pred_with}, without {pred_without}"
        );
    }

    #[test]
    fn deterministic_given_seed() {
        let instances = constant_corpus(Grade::BPlus);
        let cfg = KnowledgeFitConfig::default();
        let a = fit_knowledge::<f64>(&instances, &cfg).unwrap();
        let b = fit_knowledge::<f64>(&instances, &cfg).unwrap();
        assert_eq!(a.model, b.model);
    }
}
