//! Ontology data model: vocabularies, the three triple kinds, splits, and
//! concept texts.
//!
//! Instance-relations live in [`Vocabulary::relations`]. The two structural
//! relations (InstanceOf and SubClassOf) are not part of that map; each has
//! its own triple type.

mod io;
mod text;
mod truth;

pub use io::{load_dataset, save_dataset, DatasetStats};
pub use text::preprocess_concept_name;
pub use truth::{build_truth_index, TruthIndex};

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Dense zero-based name/id map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `name` and returns its id, or `None` if the name is taken.
    pub fn push(&mut self, name: impl Into<String>) -> Option<usize> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return None;
        }
        let id = self.names.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        Some(id)
    }

    pub fn from_names<I, S>(names: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut map = Self::new();
        for n in names {
            map.push(n)?;
        }
        Some(map)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    pub instances: IdMap,
    pub concepts: IdMap,
    pub relations: IdMap,
}

impl Vocabulary {
    pub fn num_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn num_concepts(&self) -> usize {
        self.concepts.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationalTriple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceOfTriple {
    pub instance: usize,
    pub concept: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubClassOfTriple {
    pub sub: usize,
    pub sup: usize,
}

impl RelationalTriple {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }
}

impl InstanceOfTriple {
    pub fn new(instance: usize, concept: usize) -> Self {
        Self { instance, concept }
    }
}

impl SubClassOfTriple {
    pub fn new(sub: usize, sup: usize) -> Self {
        Self { sub, sup }
    }
}

impl fmt::Display for RelationalTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, r{}, {})", self.head, self.relation, self.tail)
    }
}

impl fmt::Display for InstanceOfTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, instanceOf, {})", self.instance, self.concept)
    }
}

impl fmt::Display for SubClassOfTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, subClassOf, {})", self.sub, self.sup)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TripleKind {
    Relational,
    InstanceOf,
    SubClassOf,
}

impl TripleKind {
    pub const ALL: [TripleKind; 3] = [
        TripleKind::Relational,
        TripleKind::InstanceOf,
        TripleKind::SubClassOf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TripleKind::Relational => "relational",
            TripleKind::InstanceOf => "instanceOf",
            TripleKind::SubClassOf => "subClassOf",
        }
    }
}

/// Any of the three triple kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Triple {
    Relational(RelationalTriple),
    InstanceOf(InstanceOfTriple),
    SubClassOf(SubClassOfTriple),
}

impl Triple {
    pub fn kind(&self) -> TripleKind {
        match self {
            Triple::Relational(_) => TripleKind::Relational,
            Triple::InstanceOf(_) => TripleKind::InstanceOf,
            Triple::SubClassOf(_) => TripleKind::SubClassOf,
        }
    }
}

impl From<RelationalTriple> for Triple {
    fn from(t: RelationalTriple) -> Self {
        Triple::Relational(t)
    }
}

impl From<InstanceOfTriple> for Triple {
    fn from(t: InstanceOfTriple) -> Self {
        Triple::InstanceOf(t)
    }
}

impl From<SubClassOfTriple> for Triple {
    fn from(t: SubClassOfTriple) -> Self {
        Triple::SubClassOf(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Labeled<T> {
    pub triple: T,
    pub label: bool,
}

impl<T> Labeled<T> {
    pub fn positive(triple: T) -> Self {
        Self {
            triple,
            label: true,
        }
    }

    pub fn negative(triple: T) -> Self {
        Self {
            triple,
            label: false,
        }
    }
}

/// Training triples. All positive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrainSplit {
    pub relational: Vec<RelationalTriple>,
    pub instance_of: Vec<InstanceOfTriple>,
    pub sub_class_of: Vec<SubClassOfTriple>,
}

impl TrainSplit {
    pub fn len(&self) -> usize {
        self.relational.len() + self.instance_of.len() + self.sub_class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Validation or test triples with labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledSplit {
    pub relational: Vec<Labeled<RelationalTriple>>,
    pub instance_of: Vec<Labeled<InstanceOfTriple>>,
    pub sub_class_of: Vec<Labeled<SubClassOfTriple>>,
}

impl LabeledSplit {
    pub fn positive_relational(&self) -> impl Iterator<Item = RelationalTriple> + '_ {
        self.relational
            .iter()
            .filter(|l| l.label)
            .map(|l| l.triple)
    }

    pub fn positive_instance_of(&self) -> impl Iterator<Item = InstanceOfTriple> + '_ {
        self.instance_of
            .iter()
            .filter(|l| l.label)
            .map(|l| l.triple)
    }

    pub fn positive_sub_class_of(&self) -> impl Iterator<Item = SubClassOfTriple> + '_ {
        self.sub_class_of
            .iter()
            .filter(|l| l.label)
            .map(|l| l.triple)
    }

    pub fn has_negatives(&self, kind: TripleKind) -> bool {
        match kind {
            TripleKind::Relational => self.relational.iter().any(|l| !l.label),
            TripleKind::InstanceOf => self.instance_of.iter().any(|l| !l.label),
            TripleKind::SubClassOf => self.sub_class_of.iter().any(|l| !l.label),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptText {
    pub concept: usize,
    pub name: String,
    pub description: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub vocabulary: Vocabulary,
    pub train: TrainSplit,
    pub valid: LabeledSplit,
    pub test: LabeledSplit,
    pub concept_texts: Vec<ConceptText>,
}

impl Dataset {
    /// Adds one corrupted negative per positive to every valid/test triple
    /// list that ships without negatives. Corruptions avoid every known
    /// positive. Deterministic for a fixed seed.
    pub fn with_generated_negatives(mut self, seed: u64) -> Self {
        let truth = build_truth_index(&self);
        let n_inst = self.vocabulary.num_instances();
        let n_conc = self.vocabulary.num_concepts();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        for split in [&mut self.valid, &mut self.test] {
            if !split.has_negatives(TripleKind::Relational) && n_inst > 1 {
                let negs: Vec<_> = split
                    .relational
                    .iter()
                    .filter_map(|l| {
                        let t = l.triple;
                        (0..100).find_map(|_| {
                            let e = rng.gen_range(0..n_inst);
                            let c = if rng.gen_bool(0.5) {
                                RelationalTriple::new(e, t.relation, t.tail)
                            } else {
                                RelationalTriple::new(t.head, t.relation, e)
                            };
                            (!truth.contains_relational(&c)).then_some(c)
                        })
                    })
                    .collect();
                split
                    .relational
                    .extend(negs.into_iter().map(Labeled::negative));
            }
            if !split.has_negatives(TripleKind::InstanceOf) && n_conc > 1 {
                let negs: Vec<_> = split
                    .instance_of
                    .iter()
                    .filter_map(|l| {
                        let t = l.triple;
                        (0..100).find_map(|_| {
                            let c = if rng.gen_bool(0.5) {
                                InstanceOfTriple::new(rng.gen_range(0..n_inst), t.concept)
                            } else {
                                InstanceOfTriple::new(t.instance, rng.gen_range(0..n_conc))
                            };
                            (!truth.contains_instance_of(&c)).then_some(c)
                        })
                    })
                    .collect();
                split
                    .instance_of
                    .extend(negs.into_iter().map(Labeled::negative));
            }
            if !split.has_negatives(TripleKind::SubClassOf) && n_conc > 2 {
                let negs: Vec<_> = split
                    .sub_class_of
                    .iter()
                    .filter_map(|l| {
                        let t = l.triple;
                        (0..100).find_map(|_| {
                            let e = rng.gen_range(0..n_conc);
                            let c = if rng.gen_bool(0.5) {
                                SubClassOfTriple::new(e, t.sup)
                            } else {
                                SubClassOfTriple::new(t.sub, e)
                            };
                            (c.sub != c.sup && !truth.contains_sub_class_of(&c)).then_some(c)
                        })
                    })
                    .collect();
                split
                    .sub_class_of
                    .extend(negs.into_iter().map(Labeled::negative));
            }
        }
        self
    }

    /// Keeps a deterministic fraction of every triple list. Vocabularies are
    /// left intact so ids stay valid. Test triples whose relation (or, for
    /// the isA kinds, whose kind) kept no validation triple are dropped,
    /// since no threshold could be tuned for them.
    pub fn subsample(&self, fraction: f64, seed: u64) -> Dataset {
        fn keep<T: Clone>(items: &[T], fraction: f64, rng: &mut ChaCha8Rng) -> Vec<T> {
            items
                .iter()
                .filter(|_| rng.gen_bool(fraction.clamp(0.0, 1.0)))
                .cloned()
                .collect()
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Dataset {
            vocabulary: self.vocabulary.clone(),
            train: TrainSplit {
                relational: keep(&self.train.relational, fraction, &mut rng),
                instance_of: keep(&self.train.instance_of, fraction, &mut rng),
                sub_class_of: keep(&self.train.sub_class_of, fraction, &mut rng),
            },
            valid: LabeledSplit {
                relational: keep(&self.valid.relational, fraction, &mut rng),
                instance_of: keep(&self.valid.instance_of, fraction, &mut rng),
                sub_class_of: keep(&self.valid.sub_class_of, fraction, &mut rng),
            },
            test: LabeledSplit {
                relational: keep(&self.test.relational, fraction, &mut rng),
                instance_of: keep(&self.test.instance_of, fraction, &mut rng),
                sub_class_of: keep(&self.test.sub_class_of, fraction, &mut rng),
            },
            concept_texts: self.concept_texts.clone(),
        };
        let tuned: HashSet<usize> = out.valid.relational.iter().map(|l| l.triple.relation).collect();
        out.test.relational.retain(|l| tuned.contains(&l.triple.relation));
        if out.valid.instance_of.is_empty() {
            out.test.instance_of.clear();
        }
        if out.valid.sub_class_of.is_empty() {
            out.test.sub_class_of.clear();
        }
        out
    }
}
