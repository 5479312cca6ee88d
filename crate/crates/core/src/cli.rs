//! Command-line front end. [`run`] parses arguments, dispatches one
//! subcommand and turns errors into a one-line `error[category]: message`
//! report plus an exit code.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::error::{Error, ErrorCategory, Result};
use crate::evaluation::{
    classify, link_predict, transitivity_probe, tune_thresholds, RankSetting,
};
use crate::intensional::{load_concept_vectors, ConceptVectorFile};
use crate::ontology::{build_truth_index, load_dataset, Dataset, DatasetStats, LabeledSplit};
use crate::training::{
    load_checkpoint, train, train_from, write_log_csv, TrainOptions,
    TrainingConfig, CHECKPOINT_VERSION,
};

#[derive(Debug, Parser)]
#[command(name = "ontoembed", version, about = "Two-space ontology embedding")]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Tune thresholds on the validation split and classify a split.
    EvalClassify(ClassifyArgs),
    /// Rank heads and tails of relational triples.
    EvalLink(LinkArgs),
    /// Classify triples implied by isA transitivity over the training split.
    ProbeTransitivity(ProbeArgs),
    /// Reduce an encoder vector file to the model dimension.
    ImportVectors(ImportArgs),
    /// Print a checkpoint's header, configuration and tensor shapes.
    InspectCheckpoint(InspectArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Check split counts against a published dataset (YAGO39K, M-YAGO39K, DB99K-242).
    #[arg(long, value_name = "NAME")]
    pub expect_stats: Option<String>,
    /// Keep this fraction of every split (deterministic for the seed).
    #[arg(long, value_name = "FRACTION")]
    pub subsample: Option<f64>,
}

/// One flag per configuration key. Values override the config file.
#[derive(Debug, Args, Default)]
pub struct ConfigFlags {
    #[arg(long)]
    pub dim: Option<String>,
    #[arg(long)]
    pub lr: Option<String>,
    #[arg(long)]
    pub margin_rel: Option<String>,
    #[arg(long)]
    pub margin_ins: Option<String>,
    #[arg(long)]
    pub margin_sub: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long)]
    pub batch_size: Option<String>,
    /// unif or bern
    #[arg(long)]
    pub sampling: Option<String>,
    /// EYE or MAT
    #[arg(long)]
    pub bridge: Option<String>,
    /// UNP or PRE (PRE requires --vectors)
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// L1 or L2
    #[arg(long)]
    pub norm: Option<String>,
    #[arg(long)]
    pub negatives: Option<String>,
    /// true or false
    #[arg(long)]
    pub freeze_intensional: Option<String>,
    #[arg(long)]
    pub eval_every: Option<String>,
    /// accuracy or hits10
    #[arg(long)]
    pub selection: Option<String>,
    #[arg(long)]
    pub threads: Option<String>,
}

impl ConfigFlags {
    fn pairs(&self) -> [(&'static str, &Option<String>); 18] {
        [
            ("dim", &self.dim),
            ("lr", &self.lr),
            ("margin_rel", &self.margin_rel),
            ("margin_ins", &self.margin_ins),
            ("margin_sub", &self.margin_sub),
            ("alpha", &self.alpha),
            ("epochs", &self.epochs),
            ("batch_size", &self.batch_size),
            ("sampling", &self.sampling),
            ("bridge", &self.bridge),
            ("init", &self.init),
            ("seed", &self.seed),
            ("norm", &self.norm),
            ("negatives", &self.negatives),
            ("freeze_intensional", &self.freeze_intensional),
            ("eval_every", &self.eval_every),
            ("selection", &self.selection),
            ("threads", &self.threads),
        ]
    }

    pub fn apply(&self, cfg: &mut TrainingConfig) -> Result<()> {
        for (key, value) in self.pairs() {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Checkpoint to write (best validated model when validation is on).
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch loss log (CSV).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Pretrained concept vectors; implies --init PRE.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Continue from this checkpoint up to its configured epoch count.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[command(flatten)]
    pub flags: ConfigFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitName {
    Valid,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Table,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Split to classify; thresholds always come from the validation split.
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitName,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Setting used for Hits@N (both MRR variants are always reported).
    #[arg(long, default_value = "filter")]
    pub setting: String,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitName,
    /// Write per-query ranks as `query_id direction raw_rank filter_rank`.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Worker threads for ranking.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Encoder vector file (`count dim` header, then `id v1 … vD`).
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Dataset whose concept vocabulary the vectors index.
    #[arg(long)]
    pub data: PathBuf,
    /// Model dimension to reduce to.
    #[arg(long)]
    pub dim: usize,
    /// Seed for the random rows of concepts without a vector.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
}

fn load_data(args: &DataArgs, seed: u64) -> Result<Dataset> {
    let stats = match &args.expect_stats {
        Some(name) => Some(
            DatasetStats::by_name(name)
                .ok_or_else(|| Error::Config(format!("unknown dataset name {name:?}")))?,
        ),
        None => None,
    };
    let mut dataset = load_dataset(&args.data, stats.as_ref())?;
    if let Some(f) = args.subsample {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::Config(format!("subsample fraction {f} not in (0, 1]")));
        }
        dataset = dataset.subsample(f, seed);
    }
    Ok(dataset.with_generated_negatives(seed))
}

fn split(dataset: &Dataset, name: SplitName) -> &LabeledSplit {
    match name {
        SplitName::Valid => &dataset.valid,
        SplitName::Test => &dataset.test,
    }
}

fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let options = TrainOptions {
        checkpoint: Some(args.out.clone()),
        stop_after: None,
    };
    let outcome = if let Some(resume) = &args.resume {
        let mut state = load_checkpoint(resume)?;
        let before = state.config.clone();
        args.flags.apply(&mut state.config)?;
        if (state.config.dim, state.config.bridge, state.config.init)
            != (before.dim, before.bridge, before.init)
        {
            return Err(Error::Config(
                "dim, bridge and init cannot change when resuming".into(),
            ));
        }
        let dataset = load_data(&args.data, state.config.seed)?;
        info!("resuming from epoch {}", state.epoch);
        train_from(state, &dataset, &options)?
    } else {
        let mut cfg = match &args.config {
            Some(path) => TrainingConfig::read(path)?,
            None => TrainingConfig::default(),
        };
        args.flags.apply(&mut cfg)?;
        let dataset = load_data(&args.data, cfg.seed)?;
        let pretrained = match &args.vectors {
            Some(path) => Some(load_concept_vectors(
                &ConceptVectorFile::read(path)?,
                dataset.vocabulary.num_concepts(),
                cfg.dim,
                cfg.seed,
            )?),
            None => None,
        };
        if pretrained.is_none() && cfg.init == crate::intensional::InitMode::Pretrained {
            return Err(Error::Config("init PRE requires --vectors".into()));
        }
        train(&dataset, cfg, pretrained, &options)?
    };
    if let Some(path) = &args.log {
        write_log_csv(&outcome.log, path)?;
    }
    let last = outcome.log.last();
    writeln!(
        out,
        "epochs,L_rel,L_ins,L_sub,L,best_validation\n{},{},{},{},{},{}",
        outcome.state.epoch,
        last.map_or(0.0, |r| r.loss.rel),
        last.map_or(0.0, |r| r.loss.ins),
        last.map_or(0.0, |r| r.loss.sub),
        last.map_or(0.0, |r| r.loss.total),
        outcome
            .best
            .as_ref()
            .map_or_else(|| "none".to_string(), |(_, s)| format!("{s:.6}")),
    )
    .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_classify(args: &ClassifyArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_checkpoint(&args.ckpt)?;
    let dataset = load_data(&args.data, model.config.seed)?;
    let thresholds = tune_thresholds(&model, &dataset.valid);
    for (key, delta) in thresholds.iter() {
        info!("threshold {key}: {delta}");
    }
    let results = classify(&model, &thresholds, split(&dataset, args.split))?;
    let text = match args.format {
        Format::Csv => results.to_csv(),
        Format::Table => results.to_table(),
    };
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_link(args: &LinkArgs, out: &mut dyn Write) -> Result<()> {
    let setting: RankSetting = args.setting.parse()?;
    if args.threads == 0 {
        return Err(Error::Config("threads must be at least 1".into()));
    }
    let model = load_checkpoint(&args.ckpt)?;
    let dataset = load_data(&args.data, model.config.seed)?;
    let truth = build_truth_index(&dataset);
    let queries: Vec<_> = split(&dataset, args.split).positive_relational().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let report = pool.install(|| link_predict(&model, &queries, &truth, setting));
    if let Some(path) = &args.dump {
        report.write_rank_dump(path)?;
    }
    let text = match args.format {
        Format::Csv => report.to_csv(),
        Format::Table => report.to_table(),
    };
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_probe(args: &ProbeArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_checkpoint(&args.ckpt)?;
    let dataset = load_data(&args.data, model.config.seed)?;
    let thresholds = tune_thresholds(&model, &dataset.valid);
    let report = transitivity_probe(&model, &thresholds, &dataset.train)?;
    out.write_all(report.to_csv().as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_import(args: &ImportArgs, out: &mut dyn Write) -> Result<()> {
    if args.dim == 0 {
        return Err(Error::Config("dim must be at least 1".into()));
    }
    let file = ConceptVectorFile::read(&args.input)?;
    let dataset = load_dataset(&args.data, None)?;
    let m = load_concept_vectors(&file, dataset.vocabulary.num_concepts(), args.dim, args.seed)?;
    ConceptVectorFile::from_matrix(&m).write(&args.out)?;
    writeln!(
        out,
        "wrote {} vectors of dim {} (input dim {}, {} rows)",
        m.rows(),
        m.cols(),
        file.dim,
        file.rows.len()
    )
    .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_inspect(args: &InspectArgs, out: &mut dyn Write) -> Result<()> {
    let s = load_checkpoint(&args.ckpt)?;
    let ext = &s.extensional;
    let int = &s.intensional;
    let mut text = format!(
        "format_version {CHECKPOINT_VERSION}\nepoch {}\ninstances {}\nrelations {}\nconcepts {}\ndim {}\n",
        s.epoch,
        ext.num_instances(),
        ext.num_relations(),
        ext.num_concepts(),
        ext.dim(),
    );
    text.push_str(&format!(
        "bridge {}\ninit {}\ninvariants {}\n[config]\n{}",
        int.bridge.kind().as_str(),
        int.init_mode.as_str(),
        if s.check_invariants().is_ok() { "ok" } else { "violated" },
        s.config.to_text()
    ));
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

/// Runs one subcommand with the given already-parsed arguments.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::EvalClassify(a) => cmd_classify(a, out),
        Command::EvalLink(a) => cmd_link(a, out),
        Command::ProbeTransitivity(a) => cmd_probe(a, out),
        Command::ImportVectors(a) => cmd_import(a, out),
        Command::InspectCheckpoint(a) => cmd_inspect(a, out),
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code: 0 on success, 2 for usage errors, 3 for
/// data errors, 4 for numeric failures.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    let first = text.lines().next().unwrap_or("invalid arguments");
                    let msg = first.trim_start_matches("error: ");
                    let _ = writeln!(err, "error[{}]: {msg}", ErrorCategory::Usage.as_str());
                    ErrorCategory::Usage.exit_code()
                }
            };
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .format_timestamp(None)
        .try_init();
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let category = e.category();
            let _ = writeln!(err, "error[{}]: {e}", category.as_str());
            category.exit_code()
        }
    }
}
