//! Grade prediction behind one interface: a knowledge-state regression
//! predictor (latent provided/required knowledge components per course) and
//! a shrunk bias baseline.

mod bias;
mod knowledge;

pub use bias::{fit_bias_baseline, BiasBaseline, BIAS_PSEUDO_COUNTS};
pub use knowledge::{
    diagnostics, fit_knowledge, knowledge_state, predict_grade, KnowledgeFit, KnowledgeFitConfig,
    KnowledgeModel,
};

/// A predicted grade for one (student, course) pair. The value is nominally
/// on the 4-point scale but is not clamped. `fallback` marks predictions
/// that fell back to the global bias because the course was unknown.
#[derive(Clone, Debug, PartialEq)]
pub struct GradePrediction<S> {
    pub course: String,
    pub predicted: S,
    pub fallback: bool,
}
