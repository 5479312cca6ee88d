//! Negative sampling by head/tail corruption.

use std::collections::{HashMap, HashSet};

use rand::Rng;

use super::config::Sampling;
use crate::ontology::{InstanceOfTriple, RelationalTriple, SubClassOfTriple, TrainSplit, Triple, TruthIndex};

/// Attempts per positive before the sample is skipped.
pub const MAX_CORRUPTION_RETRIES: usize = 100;

/// Mean tails-per-head and heads-per-tail, per relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideStats {
    pub tph: f64,
    pub hpt: f64,
}

impl SideStats {
    /// Probability of replacing the head under `bern`.
    pub fn head_probability(&self) -> f64 {
        self.tph / (self.tph + self.hpt)
    }

    fn from_pairs(pairs: impl Iterator<Item = (usize, usize)>) -> Option<Self> {
        let mut tails_of: HashMap<usize, HashSet<usize>> = HashMap::new();
        let mut heads_of: HashMap<usize, HashSet<usize>> = HashMap::new();
        for (h, t) in pairs {
            tails_of.entry(h).or_default().insert(t);
            heads_of.entry(t).or_default().insert(h);
        }
        if tails_of.is_empty() {
            return None;
        }
        let mean = |m: &HashMap<usize, HashSet<usize>>| {
            m.values().map(|s| s.len()).sum::<usize>() as f64 / m.len() as f64
        };
        Some(Self {
            tph: mean(&tails_of),
            hpt: mean(&heads_of),
        })
    }
}

/// Corruption statistics for every relation plus the two structural kinds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BernStats {
    pub relations: Vec<Option<SideStats>>,
    pub instance_of: Option<SideStats>,
    pub sub_class_of: Option<SideStats>,
}

impl BernStats {
    pub fn from_train(train: &TrainSplit, num_relations: usize) -> Self {
        let mut by_rel: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_relations];
        for t in &train.relational {
            by_rel[t.relation].push((t.head, t.tail));
        }
        Self {
            relations: by_rel
                .into_iter()
                .map(|p| SideStats::from_pairs(p.into_iter()))
                .collect(),
            instance_of: SideStats::from_pairs(
                train.instance_of.iter().map(|t| (t.instance, t.concept)),
            ),
            sub_class_of: SideStats::from_pairs(train.sub_class_of.iter().map(|t| (t.sub, t.sup))),
        }
    }

    pub fn head_probability(&self, triple: &Triple) -> f64 {
        let stats = match triple {
            Triple::Relational(t) => self.relations.get(t.relation).copied().flatten(),
            Triple::InstanceOf(_) => self.instance_of,
            Triple::SubClassOf(_) => self.sub_class_of,
        };
        stats.map_or(0.5, |s| s.head_probability())
    }
}

/// Uniform draw from `0..n` excluding `current`.
fn other<R: Rng + ?Sized>(n: usize, current: usize, rng: &mut R) -> Option<usize> {
    if n < 2 {
        return None;
    }
    let e = rng.gen_range(0..n - 1);
    Some(if e >= current { e + 1 } else { e })
}

/// One corruption of `triple`: pick a side (fair coin, or the bern head
/// probability), replace that element with a different random entity of the
/// right type, and retry until the result is not a known positive.
/// Reflexive subClassOf corruptions are also rejected. Returns `None` when
/// the retry budget runs out.
#[allow(clippy::too_many_arguments)]
pub fn corrupt<R: Rng + ?Sized>(
    triple: &Triple,
    mode: Sampling,
    stats: &BernStats,
    truth: &TruthIndex,
    num_instances: usize,
    num_concepts: usize,
    rng: &mut R,
) -> Option<Triple> {
    let p_head = match mode {
        Sampling::Unif => 0.5,
        Sampling::Bern => stats.head_probability(triple),
    };
    for _ in 0..MAX_CORRUPTION_RETRIES {
        let head_side = rng.gen_bool(p_head);
        let candidate = match *triple {
            Triple::Relational(t) => {
                if head_side {
                    other(num_instances, t.head, rng)
                        .map(|h| RelationalTriple::new(h, t.relation, t.tail))
                } else {
                    other(num_instances, t.tail, rng)
                        .map(|x| RelationalTriple::new(t.head, t.relation, x))
                }
                .filter(|c| !truth.contains_relational(c))
                .map(Triple::Relational)
            }
            Triple::InstanceOf(t) => {
                if head_side {
                    other(num_instances, t.instance, rng)
                        .map(|i| InstanceOfTriple::new(i, t.concept))
                } else {
                    other(num_concepts, t.concept, rng).map(|c| InstanceOfTriple::new(t.instance, c))
                }
                .filter(|c| !truth.contains_instance_of(c))
                .map(Triple::InstanceOf)
            }
            Triple::SubClassOf(t) => {
                if head_side {
                    other(num_concepts, t.sub, rng).map(|c| SubClassOfTriple::new(c, t.sup))
                } else {
                    other(num_concepts, t.sup, rng).map(|c| SubClassOfTriple::new(t.sub, c))
                }
                .filter(|c| c.sub != c.sup && !truth.contains_sub_class_of(c))
                .map(Triple::SubClassOf)
            }
        };
        if candidate.is_some() {
            return candidate;
        }
    }
    None
}

/// Bundles everything `corrupt` needs and counts skipped samples.
#[derive(Debug)]
pub struct NegativeSampler<'a> {
    pub mode: Sampling,
    pub stats: &'a BernStats,
    pub truth: &'a TruthIndex,
    pub num_instances: usize,
    pub num_concepts: usize,
    pub skipped: usize,
}

impl<'a> NegativeSampler<'a> {
    pub fn new(
        mode: Sampling,
        stats: &'a BernStats,
        truth: &'a TruthIndex,
        num_instances: usize,
        num_concepts: usize,
    ) -> Self {
        Self {
            mode,
            stats,
            truth,
            num_instances,
            num_concepts,
            skipped: 0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, triple: &Triple, rng: &mut R) -> Option<Triple> {
        let out = corrupt(
            triple,
            self.mode,
            self.stats,
            self.truth,
            self.num_instances,
            self.num_concepts,
            rng,
        );
        if out.is_none() {
            self.skipped += 1;
        }
        out
    }
}
