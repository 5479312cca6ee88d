use std::collections::HashSet;

use super::{Dataset, InstanceOfTriple, RelationalTriple, SubClassOfTriple};

/// Every known-true triple: train plus the positive part of valid and test.
#[derive(Debug, Clone, Default)]
pub struct TruthIndex {
    relational: HashSet<RelationalTriple>,
    instance_of: HashSet<InstanceOfTriple>,
    sub_class_of: HashSet<SubClassOfTriple>,
}

impl TruthIndex {
    pub fn contains_relational(&self, t: &RelationalTriple) -> bool {
        self.relational.contains(t)
    }

    pub fn contains_instance_of(&self, t: &InstanceOfTriple) -> bool {
        self.instance_of.contains(t)
    }

    pub fn contains_sub_class_of(&self, t: &SubClassOfTriple) -> bool {
        self.sub_class_of.contains(t)
    }

    pub fn insert_relational(&mut self, t: RelationalTriple) {
        self.relational.insert(t);
    }

    pub fn insert_instance_of(&mut self, t: InstanceOfTriple) {
        self.instance_of.insert(t);
    }

    pub fn insert_sub_class_of(&mut self, t: SubClassOfTriple) {
        self.sub_class_of.insert(t);
    }

    pub fn len(&self) -> usize {
        self.relational.len() + self.instance_of.len() + self.sub_class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn len_relational(&self) -> usize {
        self.relational.len()
    }

    pub fn len_instance_of(&self) -> usize {
        self.instance_of.len()
    }

    pub fn len_sub_class_of(&self) -> usize {
        self.sub_class_of.len()
    }
}

pub fn build_truth_index(dataset: &Dataset) -> TruthIndex {
    let mut idx = TruthIndex::default();
    idx.relational.extend(dataset.train.relational.iter().copied());
    idx.instance_of.extend(dataset.train.instance_of.iter().copied());
    idx.sub_class_of.extend(dataset.train.sub_class_of.iter().copied());
    for split in [&dataset.valid, &dataset.test] {
        idx.relational.extend(split.positive_relational());
        idx.instance_of.extend(split.positive_instance_of());
        idx.sub_class_of.extend(split.positive_sub_class_of());
    }
    idx
}
