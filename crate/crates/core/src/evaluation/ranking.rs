use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ontology::{RelationalTriple, TruthIndex};
use crate::training::ModelState;

/// Whether corrupted candidates that are themselves known triples count
/// against the true entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankSetting {
    Raw,
    #[default]
    Filter,
}

impl RankSetting {
    pub fn as_str(self) -> &'static str {
        match self {
            RankSetting::Raw => "raw",
            RankSetting::Filter => "filter",
        }
    }
}

impl FromStr for RankSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(RankSetting::Raw),
            "filter" => Ok(RankSetting::Filter),
            _ => Err(Error::Config(format!("unknown setting {s:?}, expected raw or filter"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Head,
    Tail,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Head => "head",
            Direction::Tail => "tail",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryRank {
    pub query_id: usize,
    pub direction: Direction,
    pub raw: usize,
    pub filter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    pub mrr_raw: f64,
    pub mrr_filter: f64,
    /// Setting the Hits@N values were computed under.
    pub hits_setting: RankSetting,
    pub hits_at_1: f64,
    pub hits_at_3: f64,
    pub hits_at_10: f64,
    pub ranks: Vec<QueryRank>,
}

impl RankingReport {
    /// Aggregates per-query ranks. With no queries every metric is 0.
    pub fn from_ranks(ranks: Vec<QueryRank>, hits_setting: RankSetting) -> Self {
        let n = ranks.len();
        let mean = |f: &dyn Fn(&QueryRank) -> f64| {
            if n == 0 {
                0.0
            } else {
                ranks.iter().map(f).sum::<f64>() / n as f64
            }
        };
        let pick = |q: &QueryRank| match hits_setting {
            RankSetting::Raw => q.raw,
            RankSetting::Filter => q.filter,
        };
        let hits = |k: usize| mean(&|q| if pick(q) <= k { 1.0 } else { 0.0 });
        Self {
            mrr_raw: mean(&|q| 1.0 / q.raw as f64),
            mrr_filter: mean(&|q| 1.0 / q.filter as f64),
            hits_setting,
            hits_at_1: hits(1),
            hits_at_3: hits(3),
            hits_at_10: hits(10),
            ranks,
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "mrr_raw,mrr_filter,hits_setting,hits@1,hits@3,hits@10,queries\n\
             {:.6},{:.6},{},{:.6},{:.6},{:.6},{}\n",
            self.mrr_raw,
            self.mrr_filter,
            self.hits_setting.as_str(),
            self.hits_at_1,
            self.hits_at_3,
            self.hits_at_10,
            self.ranks.len()
        )
    }

    pub fn to_table(&self) -> String {
        format!(
            "{:<8} {:>8} {:>8} {:>8} {:>8}\n{:<8} {:>8.4} {:>8} {:>8} {:>8}\n{:<8} {:>8.4} {:>7.2}% {:>7.2}% {:>7.2}%\n",
            "", "MRR", "Hits@1", "Hits@3", "Hits@10",
            "raw", self.mrr_raw, "", "", "",
            "filter", self.mrr_filter,
            100.0 * self.hits_at_1, 100.0 * self.hits_at_3, 100.0 * self.hits_at_10,
        )
    }

    /// One line per query direction: `query_id direction raw_rank filter_rank`.
    pub fn rank_dump(&self) -> String {
        self.ranks
            .iter()
            .map(|q| format!("{} {} {} {}\n", q.query_id, q.direction, q.raw, q.filter))
            .collect()
    }

    pub fn write_rank_dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.rank_dump()).map_err(|e| Error::io(path, e))
    }
}

/// Raw and filtered rank of the true entity in one direction. Ties are
/// pessimistic: every competitor scoring at most the true score is ahead.
fn rank_one(
    model: &ModelState,
    triple: &RelationalTriple,
    direction: Direction,
    truth: &TruthIndex,
) -> (usize, usize) {
    let true_score = model.score_relational(triple);
    let mut raw = 1;
    let mut filter = 1;
    for e in 0..model.extensional.num_instances() {
        let candidate = match direction {
            Direction::Head if e != triple.head => RelationalTriple::new(e, triple.relation, triple.tail),
            Direction::Tail if e != triple.tail => RelationalTriple::new(triple.head, triple.relation, e),
            _ => continue,
        };
        if model.score_relational(&candidate) <= true_score {
            raw += 1;
            if !truth.contains_relational(&candidate) {
                filter += 1;
            }
        }
    }
    (raw, filter)
}

/// Ranks the true head and tail of each test triple against every instance.
/// `setting` picks the ranks behind Hits@N; both MRR variants are always
/// reported. Queries run in parallel and are collected in input order.
pub fn link_predict(
    model: &ModelState,
    test: &[RelationalTriple],
    truth: &TruthIndex,
    setting: RankSetting,
) -> RankingReport {
    let ranks: Vec<QueryRank> = test
        .par_iter()
        .enumerate()
        .flat_map_iter(|(query_id, t)| {
            [Direction::Head, Direction::Tail].map(|direction| {
                let (raw, filter) = rank_one(model, t, direction, truth);
                QueryRank {
                    query_id,
                    direction,
                    raw,
                    filter,
                }
            })
        })
        .collect();
    RankingReport::from_ranks(ranks, setting)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(raw: usize, filter: usize) -> QueryRank {
        QueryRank {
            query_id: 0,
            direction: Direction::Tail,
            raw,
            filter,
        }
    }

    #[test]
    fn hand_computed_ranks() {
        let r = RankingReport::from_ranks(vec![q(1, 1), q(2, 2), q(4, 4)], RankSetting::Filter);
        assert!((r.mrr_filter - 1.75 / 3.0).abs() < 1e-12);
        assert!((r.hits_at_3 - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.hits_at_1 - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.hits_at_10, 1.0);
    }

    #[test]
    fn perfect_ranks() {
        let r = RankingReport::from_ranks(vec![q(1, 1); 6], RankSetting::Filter);
        assert_eq!((r.mrr_raw, r.mrr_filter), (1.0, 1.0));
        assert_eq!((r.hits_at_1, r.hits_at_3, r.hits_at_10), (1.0, 1.0, 1.0));
    }

    #[test]
    fn dump_format() {
        let r = RankingReport::from_ranks(
            vec![QueryRank {
                query_id: 3,
                direction: Direction::Head,
                raw: 7,
                filter: 2,
            }],
            RankSetting::Filter,
        );
        assert_eq!(r.rank_dump(), "3 head 7 2\n");
    }

    #[test]
    fn setting_parses() {
        assert_eq!("Filter".parse::<RankSetting>().unwrap(), RankSetting::Filter);
        assert_eq!("raw".parse::<RankSetting>().unwrap(), RankSetting::Raw);
        assert!("both".parse::<RankSetting>().is_err());
    }
}
