//! Triple classification, link prediction and isA-transitivity probes over
//! a frozen model.

mod classification;
mod ranking;
mod transitivity;

pub use classification::{
    best_cut, classify, tune_thresholds, ClassificationReport, ClassificationResults, Cut,
    ThresholdKey, ThresholdTable,
};
pub use ranking::{link_predict, Direction, QueryRank, RankSetting, RankingReport};
pub use transitivity::{materialize, transitivity_probe, Materialized, TransitivityReport};

use crate::ontology::{Dataset, TruthIndex};
use crate::training::{ModelState, Selection};

/// Model-selection metric on the validation split, higher is better.
///
/// `Accuracy` tunes thresholds on the validation triples and averages the
/// resulting accuracy over the triple kinds present. `Hits10` is filtered
/// Hits@10 over the positive validation relational triples. `None` when the
/// split has nothing to measure.
pub fn validation_score(
    model: &ModelState,
    dataset: &Dataset,
    truth: &TruthIndex,
    selection: Selection,
) -> Option<f64> {
    match selection {
        Selection::Accuracy => {
            let thresholds = tune_thresholds(model, &dataset.valid);
            let results = classify(model, &thresholds, &dataset.valid).ok()?;
            if results.reports.is_empty() {
                return None;
            }
            let sum: f64 = results.reports.values().map(|r| r.accuracy).sum();
            Some(sum / results.reports.len() as f64)
        }
        Selection::Hits10 => {
            let queries: Vec<_> = dataset.valid.positive_relational().collect();
            if queries.is_empty() {
                return None;
            }
            Some(link_predict(model, &queries, truth, RankSetting::Filter).hits_at_10)
        }
    }
}
