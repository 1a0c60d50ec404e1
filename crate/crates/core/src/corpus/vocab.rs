use std::collections::HashMap;

use crate::corpus::TrainingInstance;

/// Bidirectional course-id <-> dense index map. Indices follow the sorted
/// course-id order, so vocabularies built from the same id set are identical.
#[derive(Clone, Debug, Default)]
pub struct CourseVocab {
    ids: Vec<String>,
    index: HashMap<String, u32>,
}

impl CourseVocab {
    pub fn from_ids(ids: impl IntoIterator<Item = String>) -> CourseVocab {
        let mut ids: Vec<String> = ids.into_iter().collect();
        ids.sort();
        ids.dedup();
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i as u32)).collect();
        CourseVocab { ids, index }
    }

    /// Vocabulary over every course mentioned by the instances
    /// (contexts and targets).
    pub fn from_instances(instances: &[TrainingInstance]) -> CourseVocab {
        CourseVocab::from_ids(instances.iter().flat_map(|inst| {
            inst.context
                .iter()
                .cloned()
                .chain(inst.good.iter().cloned())
                .chain(inst.bad.iter().cloned())
        }))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, idx: u32) -> &str {
        &self.ids[idx as usize]
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

impl PartialEq for CourseVocab {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids
    }
}
impl Eq for CourseVocab {}
