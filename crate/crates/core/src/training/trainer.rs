use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{debug, info, warn};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::save_checkpoint;
use super::loss::{batch_loss_and_gradient, Batch, LossBreakdown};
use super::sampling::{BernStats, NegativeSampler};
use super::{ModelState, TrainingConfig};
use crate::error::{Error, Result};
use crate::evaluation::validation_score;
use crate::linalg::Matrix;
use crate::ontology::{build_truth_index, Dataset, TrainSplit, Triple};

const EPOCH_STREAM_BASE: u64 = 1 << 32;

fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(EPOCH_STREAM_BASE + epoch as u64);
    rng
}

/// One SGD update on `batch`: gradients of every active hinge, a step of
/// `−lr·∇`, and constraint projection of the touched rows. Returns the
/// batch loss measured before the update.
pub fn sgd_step(state: &mut ModelState, batch: &Batch) -> Result<LossBreakdown> {
    let threads = state.config.threads;
    let (loss, grad) = batch_loss_and_gradient(state, batch, threads);
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!(
            "batch loss rel={} ins={} sub={}",
            loss.rel, loss.ins, loss.sub
        )));
    }
    grad.check_finite()?;
    grad.apply(state, state.config.lr);
    Ok(loss)
}

/// Shuffles each triple kind and deals them round-robin into batches so
/// every batch holds each kind in proportion to its share of the data.
/// Each positive receives `negatives` corrupted partners.
pub fn build_batches<R: Rng>(
    train: &TrainSplit,
    batch_size: usize,
    negatives: usize,
    sampler: &mut NegativeSampler<'_>,
    rng: &mut R,
) -> Vec<Batch> {
    let total = train.len();
    if total == 0 {
        return Vec::new();
    }
    let num_batches = total.div_ceil(batch_size.max(1));
    let shuffled = |n: usize, rng: &mut R| {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        idx
    };
    let rel = shuffled(train.relational.len(), rng);
    let ins = shuffled(train.instance_of.len(), rng);
    let sub = shuffled(train.sub_class_of.len(), rng);
    let slice = |idx: &[usize], b: usize| {
        let n = idx.len();
        idx[b * n / num_batches..(b + 1) * n / num_batches].to_vec()
    };

    let mut batches = Vec::with_capacity(num_batches);
    for b in 0..num_batches {
        let mut batch = Batch::default();
        for k in slice(&rel, b) {
            let p = train.relational[k];
            for _ in 0..negatives {
                if let Some(Triple::Relational(n)) = sampler.sample(&Triple::Relational(p), rng) {
                    batch.relational.push((p, n));
                }
            }
        }
        for k in slice(&ins, b) {
            let p = train.instance_of[k];
            for _ in 0..negatives {
                if let Some(Triple::InstanceOf(n)) = sampler.sample(&Triple::InstanceOf(p), rng) {
                    batch.instance_of.push((p, n));
                }
            }
        }
        for k in slice(&sub, b) {
            let p = train.sub_class_of[k];
            for _ in 0..negatives {
                if let Some(Triple::SubClassOf(n)) = sampler.sample(&Triple::SubClassOf(p), rng) {
                    batch.sub_class_of.push((p, n));
                }
            }
        }
        batches.push(batch);
    }
    batches
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub wall_seconds: f64,
    pub skipped_negatives: usize,
    pub validation: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Written whenever the validation metric improves.
    pub checkpoint: Option<PathBuf>,
    /// Stop after this many completed epochs (for staged runs).
    pub stop_after: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters after the last epoch.
    pub state: ModelState,
    /// Best validated parameters and their validation score.
    pub best: Option<(ModelState, f64)>,
    pub log: Vec<EpochRecord>,
}

impl TrainOutcome {
    /// The best validated model if validation ran, else the final one.
    pub fn selected(&self) -> &ModelState {
        self.best.as_ref().map_or(&self.state, |(s, _)| s)
    }
}

/// Initialises a model for `dataset` and trains it for `config.epochs`.
pub fn train(
    dataset: &Dataset,
    config: TrainingConfig,
    pretrained: Option<Matrix>,
    options: &TrainOptions,
) -> Result<TrainOutcome> {
    let v = &dataset.vocabulary;
    let state = ModelState::init(
        v.num_instances(),
        v.num_relations(),
        v.num_concepts(),
        config,
        pretrained,
    )?;
    train_from(state, dataset, options)
}

/// Continues training `state` from its recorded epoch up to
/// `state.config.epochs`. Epoch `k` always draws from the same random
/// stream, so a resumed run reproduces an uninterrupted one.
pub fn train_from(
    mut state: ModelState,
    dataset: &Dataset,
    options: &TrainOptions,
) -> Result<TrainOutcome> {
    state.config.validate()?;
    let cfg = state.config.clone();
    let v = &dataset.vocabulary;
    if state.extensional.num_instances() != v.num_instances()
        || state.extensional.num_relations() != v.num_relations()
        || state.extensional.num_concepts() != v.num_concepts()
    {
        return Err(Error::Config(
            "model sizes do not match the dataset vocabulary".into(),
        ));
    }
    let truth = build_truth_index(dataset);
    let stats = BernStats::from_train(&dataset.train, v.num_relations());
    let pool = if cfg.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    let end = options.stop_after.map_or(cfg.epochs, |s| s.min(cfg.epochs));
    let mut log = Vec::new();
    let mut best: Option<(ModelState, f64)> = None;

    while state.epoch < end {
        let epoch = state.epoch;
        let started = Instant::now();
        let mut rng = epoch_rng(cfg.seed, epoch);
        let mut sampler = NegativeSampler::new(
            cfg.sampling,
            &stats,
            &truth,
            v.num_instances(),
            v.num_concepts(),
        );
        let batches = build_batches(
            &dataset.train,
            cfg.batch_size,
            cfg.negatives,
            &mut sampler,
            &mut rng,
        );
        let mut loss = LossBreakdown::default();
        for batch in &batches {
            let step = match &pool {
                Some(p) => p.install(|| sgd_step(&mut state, batch))?,
                None => sgd_step(&mut state, batch)?,
            };
            loss.accumulate(&step);
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "epoch {epoch} loss rel={} ins={} sub={}",
                loss.rel, loss.ins, loss.sub
            )));
        }
        state.epoch = epoch + 1;
        state.check_invariants()?;

        let validate = cfg.eval_every > 0
            && (state.epoch.is_multiple_of(cfg.eval_every) || state.epoch == cfg.epochs);
        let validation = if validate {
            let score = validation_score(&state, dataset, &truth, cfg.selection);
            if let Some(s) = score {
                if best.as_ref().is_none_or(|(_, b)| s > *b) {
                    if let Some(path) = &options.checkpoint {
                        save_checkpoint(&state, path)?;
                    }
                    best = Some((state.clone(), s));
                }
            }
            score
        } else {
            None
        };

        if sampler.skipped > 0 {
            warn!("epoch {}: skipped {} negatives", state.epoch, sampler.skipped);
        }
        let record = EpochRecord {
            epoch: state.epoch,
            loss,
            wall_seconds: started.elapsed().as_secs_f64(),
            skipped_negatives: sampler.skipped,
            validation,
        };
        debug!(
            "epoch {} L_rel={:.6} L_ins={:.6} L_sub={:.6} L={:.6}",
            record.epoch, loss.rel, loss.ins, loss.sub, loss.total
        );
        log.push(record);
    }

    if best.is_none() {
        if let Some(path) = &options.checkpoint {
            save_checkpoint(&state, path)?;
        }
    }
    info!("trained to epoch {}", state.epoch);
    Ok(TrainOutcome { state, best, log })
}

/// One CSV row per epoch: `epoch,L_rel,L_ins,L_sub,L,wall_seconds`.
pub fn write_log_csv(log: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    writeln!(out, "epoch,L_rel,L_ins,L_sub,L,wall_seconds").expect("vec write");
    for r in log {
        writeln!(
            out,
            "{},{},{},{},{},{:.6}",
            r.epoch, r.loss.rel, r.loss.ins, r.loss.sub, r.loss.total, r.wall_seconds
        )
        .expect("vec write");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
