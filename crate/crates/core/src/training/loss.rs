use rayon::prelude::*;

use super::grad::Gradient;
use super::ModelState;
use crate::ontology::{InstanceOfTriple, RelationalTriple, SubClassOfTriple};

/// `max(0, margin + pos − neg)`
pub fn hinge_rank_loss(pos_score: f64, neg_score: f64, margin: f64) -> f64 {
    (margin + pos_score - neg_score).max(0.0)
}

/// Positive/negative pairs of each kind.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub relational: Vec<(RelationalTriple, RelationalTriple)>,
    pub instance_of: Vec<(InstanceOfTriple, InstanceOfTriple)>,
    pub sub_class_of: Vec<(SubClassOfTriple, SubClassOfTriple)>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.relational.len() + self.instance_of.len() + self.sub_class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-kind sums of hinge terms. `total` is always `rel + ins + sub`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub rel: f64,
    pub ins: f64,
    pub sub: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(rel: f64, ins: f64, sub: f64) -> Self {
        Self {
            rel,
            ins,
            sub,
            total: rel + ins + sub,
        }
    }

    pub fn accumulate(&mut self, other: &LossBreakdown) {
        *self = Self::new(self.rel + other.rel, self.ins + other.ins, self.sub + other.sub);
    }

    pub fn is_finite(&self) -> bool {
        self.rel.is_finite() && self.ins.is_finite() && self.sub.is_finite()
    }
}

#[derive(Clone, Copy)]
enum Pair {
    Rel(RelationalTriple, RelationalTriple),
    Ins(InstanceOfTriple, InstanceOfTriple),
    Sub(SubClassOfTriple, SubClassOfTriple),
}

fn pairs(batch: &Batch) -> Vec<Pair> {
    batch
        .relational
        .iter()
        .map(|&(p, n)| Pair::Rel(p, n))
        .chain(batch.instance_of.iter().map(|&(p, n)| Pair::Ins(p, n)))
        .chain(batch.sub_class_of.iter().map(|&(p, n)| Pair::Sub(p, n)))
        .collect()
}

/// Hinge loss of a pair and, when active, its gradient.
fn pair_term(model: &ModelState, pair: &Pair, grad: Option<&mut Gradient>) -> LossBreakdown {
    let cfg = &model.config;
    match pair {
        Pair::Rel(p, n) => {
            let l = hinge_rank_loss(model.score_relational(p), model.score_relational(n), cfg.margin_rel);
            if let (true, Some(g)) = (l > 0.0, grad) {
                g.add_relational(model, p, 1.0);
                g.add_relational(model, n, -1.0);
            }
            LossBreakdown::new(l, 0.0, 0.0)
        }
        Pair::Ins(p, n) => {
            let l = hinge_rank_loss(
                model.score_instance_of(p),
                model.score_instance_of(n),
                cfg.margin_ins,
            );
            if let (true, Some(g)) = (l > 0.0, grad) {
                g.add_instance_of(model, p, 1.0);
                g.add_instance_of(model, n, -1.0);
            }
            LossBreakdown::new(0.0, l, 0.0)
        }
        Pair::Sub(p, n) => {
            let l = hinge_rank_loss(
                model.score_sub_class_of(p),
                model.score_sub_class_of(n),
                cfg.margin_sub,
            );
            if let (true, Some(g)) = (l > 0.0, grad) {
                g.add_sub_class_of(model, p, 1.0);
                g.add_sub_class_of(model, n, -1.0);
            }
            LossBreakdown::new(0.0, 0.0, l)
        }
    }
}

/// Loss decomposition over the given batches, without touching the model.
pub fn epoch_loss(model: &ModelState, batches: &[Batch]) -> LossBreakdown {
    let mut total = LossBreakdown::default();
    for batch in batches {
        for pair in pairs(batch) {
            total.accumulate(&pair_term(model, &pair, None));
        }
    }
    total
}

/// Loss and summed gradient of one batch. With `threads > 1` the pairs are
/// split into contiguous chunks whose partial results are merged in order.
pub(crate) fn batch_loss_and_gradient(
    model: &ModelState,
    batch: &Batch,
    threads: usize,
) -> (LossBreakdown, Gradient) {
    let pairs = pairs(batch);
    let run = |chunk: &[Pair]| {
        let mut g = Gradient::default();
        let mut l = LossBreakdown::default();
        for p in chunk {
            l.accumulate(&pair_term(model, p, Some(&mut g)));
        }
        (l, g)
    };
    if threads <= 1 || pairs.len() < 2 * threads {
        return run(&pairs);
    }
    let chunk = pairs.len().div_ceil(threads);
    let parts: Vec<(LossBreakdown, Gradient)> = pairs.par_chunks(chunk).map(run).collect();
    let mut loss = LossBreakdown::default();
    let mut grad = Gradient::default();
    for (l, g) in parts {
        loss.accumulate(&l);
        grad.merge(g);
    }
    (loss, grad)
}
