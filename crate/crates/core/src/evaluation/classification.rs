use std::collections::BTreeMap;
use std::fmt;

use log::warn;

use crate::error::{Error, Result};
use crate::ontology::{LabeledSplit, TripleKind};
use crate::training::ModelState;

/// Which threshold a triple is judged against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ThresholdKey {
    Relation(usize),
    InstanceOf,
    SubClassOf,
}

impl fmt::Display for ThresholdKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdKey::Relation(r) => write!(f, "relation {r}"),
            ThresholdKey::InstanceOf => f.write_str("instanceOf"),
            ThresholdKey::SubClassOf => f.write_str("subClassOf"),
        }
    }
}

/// A decision threshold and the accuracy it achieved on the data it was
/// tuned on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut {
    pub threshold: f64,
    pub accuracy: f64,
}

/// Accuracy-maximising threshold for `score < δ ⇒ positive`.
///
/// Candidates are the midpoints between adjacent distinct scores plus one
/// cut below the minimum (everything negative) and one above the maximum
/// (everything positive). Among equally accurate candidates the smallest
/// wins. Returns `None` when the labels are all of one class.
pub fn best_cut(scored: &[(f64, bool)]) -> Option<Cut> {
    let positives = scored.iter().filter(|(_, l)| *l).count();
    if positives == 0 || positives == scored.len() {
        return None;
    }
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len() as f64;

    // Below the minimum everything is predicted negative.
    let mut correct = sorted.len() - positives;
    let mut best = Cut {
        threshold: sorted[0].0 - 1.0,
        accuracy: correct as f64 / n,
    };
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            if sorted[i].1 {
                correct += 1;
            } else {
                correct -= 1;
            }
            i += 1;
        }
        let threshold = match sorted.get(i) {
            Some(next) => (s + next.0) / 2.0,
            None => s + 1.0,
        };
        let accuracy = correct as f64 / n;
        if accuracy > best.accuracy {
            best = Cut {
                threshold,
                accuracy,
            };
        }
    }
    Some(best)
}

/// Per-relation thresholds plus one each for instanceOf and subClassOf.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThresholdTable {
    thresholds: BTreeMap<ThresholdKey, f64>,
}

impl ThresholdTable {
    pub fn insert(&mut self, key: ThresholdKey, delta: f64) {
        self.thresholds.insert(key, delta);
    }

    pub fn get(&self, key: ThresholdKey) -> Option<f64> {
        self.thresholds.get(&key).copied()
    }

    pub fn require(&self, key: ThresholdKey) -> Result<f64> {
        self.get(key)
            .ok_or_else(|| Error::MissingThreshold(key.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ThresholdKey, f64)> + '_ {
        self.thresholds.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

fn scored_split(model: &ModelState, split: &LabeledSplit) -> BTreeMap<ThresholdKey, Vec<(f64, bool)>> {
    let mut groups: BTreeMap<ThresholdKey, Vec<(f64, bool)>> = BTreeMap::new();
    for l in &split.relational {
        groups
            .entry(ThresholdKey::Relation(l.triple.relation))
            .or_default()
            .push((model.score_relational(&l.triple), l.label));
    }
    for l in &split.instance_of {
        groups
            .entry(ThresholdKey::InstanceOf)
            .or_default()
            .push((model.score_instance_of(&l.triple), l.label));
    }
    for l in &split.sub_class_of {
        groups
            .entry(ThresholdKey::SubClassOf)
            .or_default()
            .push((model.score_sub_class_of(&l.triple), l.label));
    }
    groups
}

/// Tunes one threshold per relation and per structural kind on labeled
/// validation triples. Groups with only one label class get `+∞`.
pub fn tune_thresholds(model: &ModelState, valid: &LabeledSplit) -> ThresholdTable {
    let mut table = ThresholdTable::default();
    for (key, scored) in scored_split(model, valid) {
        let delta = match best_cut(&scored) {
            Some(cut) => cut.threshold,
            None => {
                warn!("{key}: validation data has a single label class; threshold set to +inf");
                f64::INFINITY
            }
        };
        table.insert(key, delta);
    }
    table
}

/// Confusion counts and the metrics derived from them.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassificationReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassificationReport {
    /// Builds a report from `(predicted, actual)` pairs. Precision and
    /// recall are 0 when their denominators are empty.
    pub fn from_predictions(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut r = Self::default();
        for (predicted, actual) in pairs {
            match (predicted, actual) {
                (true, true) => r.true_positives += 1,
                (true, false) => r.false_positives += 1,
                (false, false) => r.true_negatives += 1,
                (false, true) => r.false_negatives += 1,
            }
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        r.accuracy = ratio(r.true_positives + r.true_negatives, r.total());
        r.precision = ratio(r.true_positives, r.true_positives + r.false_positives);
        r.recall = ratio(r.true_positives, r.true_positives + r.false_negatives);
        r.f1 = if r.precision + r.recall > 0.0 {
            2.0 * r.precision * r.recall / (r.precision + r.recall)
        } else {
            0.0
        };
        r
    }

    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// One report per triple kind present in the test split.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassificationResults {
    pub reports: BTreeMap<TripleKind, ClassificationReport>,
}

impl ClassificationResults {
    pub fn get(&self, kind: TripleKind) -> Option<&ClassificationReport> {
        self.reports.get(&kind)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("task,accuracy,precision,recall,f1,tp,fp,tn,fn\n");
        for (kind, r) in &self.reports {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{},{},{},{}\n",
                kind.as_str(),
                r.accuracy,
                r.precision,
                r.recall,
                r.f1,
                r.true_positives,
                r.false_positives,
                r.true_negatives,
                r.false_negatives
            ));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<12} {:>9} {:>9} {:>9} {:>9} {:>7}\n",
            "task", "accuracy", "precision", "recall", "f1", "n"
        );
        for (kind, r) in &self.reports {
            out.push_str(&format!(
                "{:<12} {:>8.2}% {:>8.2}% {:>8.2}% {:>8.2}% {:>7}\n",
                kind.as_str(),
                100.0 * r.accuracy,
                100.0 * r.precision,
                100.0 * r.recall,
                100.0 * r.f1,
                r.total()
            ));
        }
        out
    }
}

/// Applies `score < δ ⇒ positive` to every labeled test triple.
pub fn classify(
    model: &ModelState,
    thresholds: &ThresholdTable,
    test: &LabeledSplit,
) -> Result<ClassificationResults> {
    let mut by_kind: BTreeMap<TripleKind, Vec<(bool, bool)>> = BTreeMap::new();
    for (key, scored) in scored_split(model, test) {
        let delta = thresholds.require(key)?;
        let kind = match key {
            ThresholdKey::Relation(_) => TripleKind::Relational,
            ThresholdKey::InstanceOf => TripleKind::InstanceOf,
            ThresholdKey::SubClassOf => TripleKind::SubClassOf,
        };
        by_kind
            .entry(kind)
            .or_default()
            .extend(scored.into_iter().map(|(s, l)| (s < delta, l)));
    }
    Ok(ClassificationResults {
        reports: by_kind
            .into_iter()
            .map(|(k, p)| (k, ClassificationReport::from_predictions(p)))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Every cut that separates the sorted scores differently, scanned with
    /// a full pass per candidate.
    fn brute_force(scored: &[(f64, bool)]) -> f64 {
        let mut candidates: Vec<f64> = scored.iter().map(|s| s.0).collect();
        candidates.extend(scored.iter().map(|s| s.0 + 1e-9));
        candidates.push(f64::NEG_INFINITY);
        candidates.push(f64::INFINITY);
        candidates
            .iter()
            .map(|&d| {
                scored.iter().filter(|(s, l)| (*s < d) == *l).count() as f64 / scored.len() as f64
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn separable_midpoint() {
        let s = [(0.1, true), (0.2, true), (0.5, false), (0.6, false)];
        let cut = best_cut(&s).unwrap();
        assert!((cut.threshold - 0.35).abs() < 1e-12);
        assert_eq!(cut.accuracy, 1.0);
    }

    #[test]
    fn equal_scores_give_majority_fraction() {
        let s = [(0.7, true), (0.7, false), (0.7, false)];
        let cut = best_cut(&s).unwrap();
        assert!((cut.accuracy - 2.0 / 3.0).abs() < 1e-12);
        assert!(cut.threshold < 0.7);
    }

    #[test]
    fn ties_go_to_smallest_threshold() {
        // Cutting at 0.15 or 0.35 both give 3/4.
        let s = [(0.1, true), (0.2, false), (0.3, true), (0.4, false)];
        let cut = best_cut(&s).unwrap();
        assert!((cut.threshold - 0.15).abs() < 1e-12);
    }

    #[test]
    fn single_class_has_no_cut() {
        assert!(best_cut(&[(0.1, true), (0.4, true)]).is_none());
        assert!(best_cut(&[(0.1, false)]).is_none());
    }

    #[test]
    fn report_counts_and_rule_asymmetry() {
        let separated = ClassificationReport::from_predictions([(true, true), (false, false)]);
        assert_eq!(separated.accuracy, 1.0);
        let inverted = ClassificationReport::from_predictions([(false, true), (true, false)]);
        assert_eq!(inverted.accuracy, 0.0);
        assert_eq!(inverted.f1, 0.0);
    }

    #[test]
    fn missing_threshold_names_relation() {
        let err = ThresholdTable::default()
            .require(ThresholdKey::Relation(4))
            .unwrap_err();
        assert!(err.to_string().contains("relation 4"));
    }

    proptest! {
        #[test]
        fn cut_matches_brute_force(
            scored in prop::collection::vec((0u8..20, any::<bool>()), 2..40)
        ) {
            let scored: Vec<(f64, bool)> =
                scored.into_iter().map(|(s, l)| (s as f64 / 10.0, l)).collect();
            if let Some(cut) = best_cut(&scored) {
                prop_assert!((cut.accuracy - brute_force(&scored)).abs() < 1e-12);
                let achieved = scored.iter().filter(|(s, l)| (*s < cut.threshold) == *l).count();
                prop_assert!((achieved as f64 / scored.len() as f64 - cut.accuracy).abs() < 1e-12);
            }
        }

        #[test]
        fn report_invariants(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
            let r = ClassificationReport::from_predictions(pairs.clone());
            prop_assert_eq!(r.total(), pairs.len());
            if r.precision + r.recall > 0.0 {
                let f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
                prop_assert!((r.f1 - f1).abs() < 1e-15);
            }
            for v in [r.accuracy, r.precision, r.recall, r.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn rule_invariant_under_monotone_transform(
            scored in prop::collection::vec((0.0f64..5.0, any::<bool>()), 1..30),
            delta in 0.0f64..5.0,
        ) {
            let direct = ClassificationReport::from_predictions(
                scored.iter().map(|(s, l)| (*s < delta, *l)));
            let f = |x: f64| x.exp() * 3.0 + 1.0;
            let mapped = ClassificationReport::from_predictions(
                scored.iter().map(|(s, l)| (f(*s) < f(delta), *l)));
            prop_assert_eq!(direct, mapped);
        }
    }
}
