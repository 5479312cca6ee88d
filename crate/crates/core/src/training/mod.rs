//! Joint training of both spaces with margin-ranking losses.

mod checkpoint;
mod config;
mod grad;
mod loss;
mod sampling;
mod trainer;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use config::{Sampling, Selection, TrainingConfig, CONFIG_KEYS};
pub use grad::{Gradient, ParamId};
pub use loss::{epoch_loss, hinge_rank_loss, Batch, LossBreakdown};
pub use sampling::{corrupt, BernStats, NegativeSampler, MAX_CORRUPTION_RETRIES};
pub use trainer::{
    build_batches, sgd_step, train, train_from, write_log_csv, EpochRecord, TrainOptions,
    TrainOutcome,
};

use crate::error::Result;
use crate::extensional::{init_extensional, ExtensionalParams};
use crate::intensional::{
    combine_instance_of, combine_sub_class_of, init_intensional, IntensionalParams,
};
use crate::linalg::Matrix;
use crate::ontology::{InstanceOfTriple, RelationalTriple, SubClassOfTriple, Triple};

/// Every learnable tensor plus the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub extensional: ExtensionalParams,
    pub intensional: IntensionalParams,
    pub config: TrainingConfig,
    /// Number of completed epochs.
    pub epoch: usize,
}

impl ModelState {
    /// Fresh parameters for the given vocabulary sizes. `pretrained` holds
    /// concept vectors already reduced to `config.dim`.
    pub fn init(
        num_instances: usize,
        num_relations: usize,
        num_concepts: usize,
        config: TrainingConfig,
        pretrained: Option<Matrix>,
    ) -> Result<Self> {
        config.validate()?;
        let extensional =
            init_extensional(num_instances, num_relations, num_concepts, config.dim, config.seed)?;
        let intensional =
            init_intensional(num_concepts, config.dim, config.bridge, pretrained, config.seed)?;
        let mut config = config;
        config.init = intensional.init_mode;
        Ok(Self {
            extensional,
            intensional,
            config,
            epoch: 0,
        })
    }

    pub fn score_instance_of(&self, t: &InstanceOfTriple) -> f64 {
        let ext = self.extensional.score_instance_of(t.instance, t.concept);
        if self.config.alpha == 0.0 {
            return ext;
        }
        let int = self
            .intensional
            .score_instance_of(t.instance, t.concept, &self.extensional);
        combine_instance_of(ext, int, self.config.alpha)
    }

    pub fn score_sub_class_of(&self, t: &SubClassOfTriple) -> f64 {
        let ext = self.extensional.score_sub_class_of(t.sub, t.sup);
        if self.config.alpha == 0.0 {
            return ext;
        }
        let int = self.intensional.score_sub_class_of(t.sub, t.sup);
        combine_sub_class_of(ext, int, self.config.alpha)
    }

    pub fn score_relational(&self, t: &RelationalTriple) -> f64 {
        self.extensional
            .score_relational(t.head, t.relation, t.tail, self.config.norm)
    }

    pub fn score(&self, t: &Triple) -> f64 {
        match t {
            Triple::Relational(t) => self.score_relational(t),
            Triple::InstanceOf(t) => self.score_instance_of(t),
            Triple::SubClassOf(t) => self.score_sub_class_of(t),
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        self.extensional.check_invariants()?;
        self.intensional.check_invariants()
    }
}
