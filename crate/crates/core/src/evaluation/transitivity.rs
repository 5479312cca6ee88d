use std::collections::{BTreeSet, HashSet, VecDeque};

use super::classification::{ThresholdKey, ThresholdTable};
use crate::error::Result;
use crate::ontology::{InstanceOfTriple, SubClassOfTriple, TrainSplit};
use crate::training::ModelState;

/// Triples implied by the isA rules but absent from the training split:
/// `i ∈ c1 ∧ c1 ⊑ c2 ⇒ i ∈ c2` and `c1 ⊑ c2 ∧ c2 ⊑ c3 ⇒ c1 ⊑ c3`, iterated
/// to a fixpoint. Reflexive subClassOf conclusions are not included.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Materialized {
    pub instance_of: Vec<InstanceOfTriple>,
    pub sub_class_of: Vec<SubClassOfTriple>,
}

pub fn materialize(train: &TrainSplit, num_concepts: usize) -> Materialized {
    let mut supers: Vec<Vec<usize>> = vec![Vec::new(); num_concepts];
    for t in &train.sub_class_of {
        supers[t.sub].push(t.sup);
    }
    // All strict ancestors of each concept, by breadth-first search.
    let reach: Vec<BTreeSet<usize>> = (0..num_concepts)
        .map(|c| {
            let mut seen = BTreeSet::new();
            let mut queue: VecDeque<usize> = supers[c].iter().copied().collect();
            while let Some(x) = queue.pop_front() {
                if seen.insert(x) {
                    queue.extend(supers[x].iter().copied());
                }
            }
            seen
        })
        .collect();

    let direct_sub: HashSet<SubClassOfTriple> = train.sub_class_of.iter().copied().collect();
    let sub_class_of = reach
        .iter()
        .enumerate()
        .flat_map(|(c, anc)| anc.iter().map(move |&a| SubClassOfTriple::new(c, a)))
        .filter(|t| t.sub != t.sup && !direct_sub.contains(t))
        .collect();

    let direct_ins: HashSet<InstanceOfTriple> = train.instance_of.iter().copied().collect();
    let mut derived = BTreeSet::new();
    for t in &train.instance_of {
        for &a in &reach[t.concept] {
            let d = InstanceOfTriple::new(t.instance, a);
            if !direct_ins.contains(&d) {
                derived.insert(d);
            }
        }
    }
    Materialized {
        instance_of: derived.into_iter().collect(),
        sub_class_of,
    }
}

/// Fractions of materialized triples the model classifies as positive, one
/// per rule. `None` when a rule derives nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitivityReport {
    pub instance_of: Option<f64>,
    pub instance_of_count: usize,
    pub sub_class_of: Option<f64>,
    pub sub_class_of_count: usize,
}

impl TransitivityReport {
    pub fn to_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |f| format!("{f:.6}"));
        format!(
            "rule,fraction_positive,derived\ninstanceOf,{},{}\nsubClassOf,{},{}\n",
            fmt(self.instance_of),
            self.instance_of_count,
            fmt(self.sub_class_of),
            self.sub_class_of_count
        )
    }
}

pub fn transitivity_probe(
    model: &ModelState,
    thresholds: &ThresholdTable,
    train: &TrainSplit,
) -> Result<TransitivityReport> {
    let m = materialize(train, model.extensional.num_concepts());
    let fraction = |hits: usize, n: usize| (n > 0).then(|| hits as f64 / n as f64);

    let ins_hits = if m.instance_of.is_empty() {
        0
    } else {
        let delta = thresholds.require(ThresholdKey::InstanceOf)?;
        m.instance_of
            .iter()
            .filter(|t| model.score_instance_of(t) < delta)
            .count()
    };
    let sub_hits = if m.sub_class_of.is_empty() {
        0
    } else {
        let delta = thresholds.require(ThresholdKey::SubClassOf)?;
        m.sub_class_of
            .iter()
            .filter(|t| model.score_sub_class_of(t) < delta)
            .count()
    };
    Ok(TransitivityReport {
        instance_of: fraction(ins_hits, m.instance_of.len()),
        instance_of_count: m.instance_of.len(),
        sub_class_of: fraction(sub_hits, m.sub_class_of.len()),
        sub_class_of_count: m.sub_class_of.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Warshall closure over an adjacency matrix.
    fn closure_oracle(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut r = vec![vec![false; n]; n];
        for &(a, b) in edges {
            r[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if r[i][k] && r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
        r
    }

    #[test]
    fn three_level_chain_matches_oracle() {
        let edges = [(0, 1), (1, 2), (3, 1)];
        let train = TrainSplit {
            relational: vec![],
            instance_of: vec![InstanceOfTriple::new(0, 0), InstanceOfTriple::new(1, 3)],
            sub_class_of: edges.iter().map(|&(a, b)| SubClassOfTriple::new(a, b)).collect(),
        };
        let m = materialize(&train, 4);
        let r = closure_oracle(4, &edges);
        let mut expected_sub = vec![];
        for (i, row) in r.iter().enumerate() {
            for (j, &reach) in row.iter().enumerate() {
                if reach && i != j && !edges.contains(&(i, j)) {
                    expected_sub.push(SubClassOfTriple::new(i, j));
                }
            }
        }
        assert_eq!(m.sub_class_of, expected_sub);
        let mut expected_ins = vec![];
        for t in &train.instance_of {
            for (j, &reach) in r[t.concept].iter().enumerate() {
                if reach && !train.instance_of.contains(&InstanceOfTriple::new(t.instance, j)) {
                    expected_ins.push(InstanceOfTriple::new(t.instance, j));
                }
            }
        }
        expected_ins.sort();
        assert_eq!(m.instance_of, expected_ins);
    }

    #[test]
    fn cycles_do_not_yield_reflexive_triples() {
        let train = TrainSplit {
            sub_class_of: vec![SubClassOfTriple::new(0, 1), SubClassOfTriple::new(1, 0)],
            ..TrainSplit::default()
        };
        assert!(materialize(&train, 2).sub_class_of.is_empty());
    }

    #[test]
    fn empty_sub_class_of_is_undefined() {
        let cfg = crate::training::TrainingConfig {
            dim: 3,
            ..Default::default()
        };
        let model = ModelState::init(2, 1, 2, cfg, None).unwrap();
        let train = TrainSplit {
            instance_of: vec![InstanceOfTriple::new(0, 0)],
            ..TrainSplit::default()
        };
        let r = transitivity_probe(&model, &ThresholdTable::default(), &train).unwrap();
        assert_eq!(r.instance_of, None);
        assert_eq!(r.sub_class_of, None);
        assert!(r.to_csv().contains("undefined"));
    }
}
