//! Generator for a small three-level ontology that a two-space embedding can
//! represent exactly. Used by the end-to-end tests and as a demo dataset.
//!
//! Concepts form a forest `root ⊒ mid ⊒ leaf`. Instances come in chains of
//! equal length inside one leaf, consecutive members linked by a random
//! relation, so every relational fact is a translation within a leaf.
//! Every instance belongs to its leaf and, through the hierarchy, to the
//! leaf's mid and root. A random share of these memberships (and of the
//! relational facts) is held out for validation and test. Training keeps
//! the direct subClassOf edges; the leaf-to-root subsumptions follow only by
//! transitivity and are split between validation and test. Every held-out
//! positive is paired with a negative.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ontology::{
    ConceptText, Dataset, IdMap, InstanceOfTriple, Labeled, LabeledSplit, RelationalTriple,
    SubClassOfTriple, TrainSplit, Vocabulary,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub roots: usize,
    /// Mid-level concepts, dealt round-robin under the roots.
    pub mids: usize,
    /// Leaf concepts, dealt round-robin under the mids.
    pub leaves: usize,
    pub instances: usize,
    pub relations: usize,
    pub chain_length: usize,
    /// Share of membership and relational facts held out for validation,
    /// and the same share again for test.
    pub holdout: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            roots: 2,
            mids: 4,
            leaves: 14,
            instances: 500,
            relations: 5,
            chain_length: 5,
            holdout: 0.1,
        }
    }
}

impl SyntheticSpec {
    pub fn num_concepts(&self) -> usize {
        self.roots + self.mids + self.leaves
    }

    /// Concept ids: roots first, then mids, then leaves.
    pub fn parent(&self, concept: usize) -> Option<usize> {
        if concept < self.roots {
            None
        } else if concept < self.roots + self.mids {
            Some((concept - self.roots) % self.roots)
        } else {
            Some(self.roots + (concept - self.roots - self.mids) % self.mids)
        }
    }

    /// Strict ancestors, nearest first.
    pub fn ancestors(&self, concept: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut c = concept;
        while let Some(p) = self.parent(c) {
            out.push(p);
            c = p;
        }
        out
    }

    /// Leaf of each instance.
    pub fn leaf_of(&self, instance: usize) -> usize {
        let chain = instance / self.chain_length;
        self.roots + self.mids + chain % self.leaves
    }

    pub fn generate(&self, seed: u64) -> Dataset {
        assert!(self.roots > 0 && self.mids >= self.roots && self.leaves >= self.mids);
        assert!(self.chain_length > 0 && self.instances.is_multiple_of(self.chain_length));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nc = self.num_concepts();
        let concept_name = |c: usize| {
            if c < self.roots {
                format!("root_{c}")
            } else if c < self.roots + self.mids {
                format!("mid_{}", c - self.roots)
            } else {
                format!("leaf_{}", c - self.roots - self.mids)
            }
        };
        let vocabulary = Vocabulary {
            instances: IdMap::from_names((0..self.instances).map(|i| format!("entity_{i}")))
                .expect("unique names"),
            concepts: IdMap::from_names((0..nc).map(concept_name)).expect("unique names"),
            relations: IdMap::from_names((0..self.relations).map(|r| format!("rel_{r}")))
                .expect("unique names"),
        };

        let mut train = TrainSplit::default();
        let mut held_rel = Vec::new();
        for start in (0..self.instances).step_by(self.chain_length) {
            for i in start..start + self.chain_length - 1 {
                let t = RelationalTriple::new(i, rng.gen_range(0..self.relations), i + 1);
                if rng.gen_bool(2.0 * self.holdout) {
                    held_rel.push(t);
                } else {
                    train.relational.push(t);
                }
            }
        }
        train.sub_class_of = (0..nc)
            .filter_map(|c| self.parent(c).map(|p| SubClassOfTriple::new(c, p)))
            .collect();

        let mut held_ins = Vec::new();
        for i in 0..self.instances {
            let leaf = self.leaf_of(i);
            for c in std::iter::once(leaf).chain(self.ancestors(leaf)) {
                let t = InstanceOfTriple::new(i, c);
                if rng.gen_bool(2.0 * self.holdout) {
                    held_ins.push(t);
                } else {
                    train.instance_of.push(t);
                }
            }
        }
        let derived_sub: Vec<_> = (0..nc)
            .flat_map(|c| {
                self.ancestors(c)
                    .into_iter()
                    .skip(1)
                    .map(move |a| SubClassOfTriple::new(c, a))
            })
            .collect();

        let rel_truth: HashSet<_> = train.relational.iter().chain(&held_rel).copied().collect();
        let is_member = |i: usize, c: usize| {
            let leaf = self.leaf_of(i);
            c == leaf || self.ancestors(leaf).contains(&c)
        };
        let subsumes = |sub: usize, sup: usize| self.ancestors(sub).contains(&sup);

        let mut valid = LabeledSplit::default();
        let mut test = LabeledSplit::default();
        let mut splits = [&mut valid, &mut test];

        held_rel.shuffle(&mut rng);
        for (k, t) in held_rel.into_iter().enumerate() {
            let neg = loop {
                let e = rng.gen_range(0..self.instances);
                let n = if rng.gen_bool(0.5) {
                    RelationalTriple::new(e, t.relation, t.tail)
                } else {
                    RelationalTriple::new(t.head, t.relation, e)
                };
                if !rel_truth.contains(&n) {
                    break n;
                }
            };
            let s = &mut splits[k % 2];
            s.relational.push(Labeled::positive(t));
            s.relational.push(Labeled::negative(neg));
        }

        held_ins.shuffle(&mut rng);
        for (k, t) in held_ins.into_iter().enumerate() {
            let neg = loop {
                let c = rng.gen_range(0..nc);
                if !is_member(t.instance, c) {
                    break InstanceOfTriple::new(t.instance, c);
                }
            };
            let s = &mut splits[k % 2];
            s.instance_of.push(Labeled::positive(t));
            s.instance_of.push(Labeled::negative(neg));
        }

        let mut derived_sub = derived_sub;
        derived_sub.shuffle(&mut rng);
        for (k, t) in derived_sub.into_iter().enumerate() {
            let s = &mut splits[k % 2];
            s.sub_class_of.push(Labeled::positive(t));
            for _ in 0..2 {
                let neg = loop {
                    let sup = rng.gen_range(0..nc);
                    if sup != t.sub && !subsumes(t.sub, sup) {
                        break SubClassOfTriple::new(t.sub, sup);
                    }
                };
                s.sub_class_of.push(Labeled::negative(neg));
            }
        }
        for s in [&mut valid, &mut test] {
            s.sub_class_of.sort_by_key(|l| (l.triple, !l.label));
            s.sub_class_of.dedup_by_key(|l| l.triple);
        }

        let concept_texts = (0..nc)
            .map(|c| ConceptText {
                concept: c,
                name: format!("<{}>", concept_name(c)),
                description: None,
            })
            .collect();

        Dataset {
            vocabulary,
            train,
            valid,
            test,
            concept_texts,
        }
    }
}
