//! Acceptance runner. Prints one `PASS`/`FAIL`/`SKIP` line per criterion
//! followed by a summary line.
//!
//! Set `ACCEPTANCE_STRICT=1` to turn any failure into a non-zero exit code.
//! The long YAGO39K run is gated on `YAGO39K_DIR` (and optionally
//! `YAGO39K_VECTORS` for pretrained concept vectors).

use std::collections::HashSet;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ontoembed::evaluation::{
    best_cut, classify, link_predict, transitivity_probe, tune_thresholds, Direction,
    RankSetting, ThresholdKey,
};
use ontoembed::extensional::NormKind;
use ontoembed::intensional::{Bridge, BridgeKind};
use ontoembed::linalg::Matrix;
use ontoembed::ontology::{
    save_dataset, InstanceOfTriple, Labeled, LabeledSplit, RelationalTriple, SubClassOfTriple,
    TrainSplit, Triple, TruthIndex,
};
use ontoembed::synthetic::SyntheticSpec;
use ontoembed::training::{
    build_batches, corrupt, epoch_loss, hinge_rank_loss, train, BernStats, Gradient,
    NegativeSampler, ParamId, Sampling, TrainOptions, TrainOutcome,
};
use ontoembed::{ModelState, TrainingConfig};

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    name: &'static str,
    status: Status,
    detail: String,
}

impl Outcome {
    fn check(name: &'static str, ok: bool, detail: String) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { name, status, detail }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// Model with every parameter drawn at random, away from the projection
/// boundaries.
fn random_model(
    rng: &mut ChaCha8Rng,
    sizes: (usize, usize, usize),
    dim: usize,
    alpha: f64,
    bridge: BridgeKind,
    norm: NormKind,
) -> ModelState {
    let (ni, nr, nc) = sizes;
    let cfg = TrainingConfig {
        dim,
        alpha,
        bridge,
        norm,
        ..TrainingConfig::default()
    };
    let mut m = ModelState::init(ni, nr, nc, cfg, None).unwrap();
    let e = &mut m.extensional;
    e.instances = Matrix::uniform(ni, dim, -1.0, 1.0, rng);
    e.relations = Matrix::uniform(nr, dim, -1.0, 1.0, rng);
    e.centers = Matrix::uniform(nc, dim, -1.0, 1.0, rng);
    e.axes = Matrix::uniform(nc, dim, 0.5, 1.5, rng);
    e.radii = (0..nc).map(|_| rng.gen_range(0.2..1.2)).collect();
    m.intensional.concepts = Matrix::uniform(nc, dim, -1.0, 1.0, rng);
    if let Bridge::Learnable(b) = &mut m.intensional.bridge {
        for (k, v) in b.as_mut_slice().iter_mut().enumerate() {
            let diag = if k % (dim + 1) == 0 { 1.0 } else { 0.0 };
            *v = diag + rng.gen_range(-0.5..0.5);
        }
    }
    m
}

fn all_params(m: &ModelState) -> Vec<ParamId> {
    let e = &m.extensional;
    let d = e.dim();
    let mut ids = Vec::new();
    for j in 0..d {
        ids.extend((0..e.num_instances()).map(|i| ParamId::Instance(i, j)));
        ids.extend((0..e.num_relations()).map(|r| ParamId::Relation(r, j)));
        ids.extend((0..e.num_concepts()).map(|c| ParamId::Center(c, j)));
        ids.extend((0..e.num_concepts()).map(|c| ParamId::Axis(c, j)));
        ids.extend((0..e.num_concepts()).map(|c| ParamId::ConceptVector(c, j)));
        if matches!(m.intensional.bridge, Bridge::Learnable(_)) {
            ids.extend((0..d).map(|a| ParamId::Bridge(a, j)));
        }
    }
    ids.extend((0..e.num_concepts()).map(ParamId::Radius));
    ids
}

/// Distance of every score's non-smooth points from the current parameters:
/// the hinge arguments of the two extensional scores and, under L1, each
/// translation residual.
fn kink_distance(m: &ModelState, ins: &InstanceOfTriple, sub: &SubClassOfTriple, rel: &RelationalTriple) -> f64 {
    let e = &m.extensional;
    let c = e.concept(ins.concept);
    let a = (c.scaled_distance_sq(e.instance(ins.instance)) - c.radius * c.radius).abs();
    let (ci, cj) = (e.concept(sub.sub), e.concept(sub.sup));
    let gap: f64 = (0..e.dim())
        .map(|k| (ci.center[k] / ci.axes[k] - cj.center[k] / cj.axes[k]).powi(2))
        .sum();
    let b = (gap + ci.radius * ci.radius - cj.radius * cj.radius).abs();
    let mut d = a.min(b);
    if m.config.norm == NormKind::L1 {
        for k in 0..e.dim() {
            let r = e.instance(rel.head)[k] + e.relation(rel.relation)[k] - e.instance(rel.tail)[k];
            d = d.min(r.abs());
        }
    }
    d
}

/// `|analytic − numeric| / max(|analytic|, |numeric|, FLOOR)`: relative
/// error, falling back to absolute error for derivatives below the floor.
const GRAD_FLOOR: f64 = 1e-3;

type ScoreAndGradient = (
    &'static str,
    Box<dyn Fn(&ModelState) -> f64>,
    Box<dyn Fn(&mut Gradient, &ModelState)>,
);

fn gradient_check() -> Outcome {
    let ((max_err, worst, checked), took) = timed(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let eps = 1e-5;
        let mut max_err: f64 = 0.0;
        let mut worst = String::new();
        let mut checked = 0usize;
        for k in 0..100 {
            let alpha = [0.0, 0.5][k % 2];
            let bridge = [BridgeKind::Identity, BridgeKind::Matrix][(k / 2) % 2];
            let norm = if k % 5 == 4 { NormKind::L1 } else { NormKind::L2 };
            let (m, ins, sub, rel) = loop {
                let m = random_model(&mut rng, (4, 2, 3), 4, alpha, bridge, norm);
                let ins = InstanceOfTriple::new(rng.gen_range(0..4), rng.gen_range(0..3));
                let s = rng.gen_range(0..3);
                let sub = SubClassOfTriple::new(s, (s + rng.gen_range(1..3)) % 3);
                let rel = RelationalTriple::new(rng.gen_range(0..4), rng.gen_range(0..2), rng.gen_range(0..4));
                if kink_distance(&m, &ins, &sub, &rel) > 1e-2 {
                    break (m, ins, sub, rel);
                }
            };
            let scores: [ScoreAndGradient; 3] = [
                ("instanceOf", Box::new(move |m| m.score_instance_of(&ins)), Box::new(move |g, m| g.add_instance_of(m, &ins, 1.0))),
                ("subClassOf", Box::new(move |m| m.score_sub_class_of(&sub)), Box::new(move |g, m| g.add_sub_class_of(m, &sub, 1.0))),
                ("relational", Box::new(move |m| m.score_relational(&rel)), Box::new(move |g, m| g.add_relational(m, &rel, 1.0))),
            ];
            for (name, score, grad) in &scores {
                let mut g = Gradient::default();
                grad(&mut g, &m);
                let mut probe = m.clone();
                for id in all_params(&m) {
                    let x = m.param(id);
                    probe.set_param(id, x + eps);
                    let up = score(&probe);
                    probe.set_param(id, x - eps);
                    let down = score(&probe);
                    probe.set_param(id, x);
                    let numeric = (up - down) / (2.0 * eps);
                    let analytic = g.get(id);
                    let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR);
                    checked += 1;
                    if err > max_err {
                        max_err = err;
                        worst = format!("{name} {id:?} config {k}: analytic {analytic:.6e} numeric {numeric:.6e}");
                    }
                }
            }
        }
        (max_err, worst, checked)
    });
    Outcome::check(
        "gradient-correctness",
        max_err < 1e-4 && took.as_secs_f64() < 30.0,
        format!(
            "max rel err {max_err:.2e} over {checked} partials in 100 configs (worst: {worst}); {:.2} s",
            took.as_secs_f64()
        ),
    )
}

mod oracle {
    pub fn ins_ext(x: &[f64], c: &[f64], b: &[f64], r: f64) -> f64 {
        let mut s = 0.0;
        for k in 0..x.len() {
            s += ((x[k] - c[k]) / b[k]) * ((x[k] - c[k]) / b[k]);
        }
        f64::max(s - r * r, 0.0)
    }

    pub fn sub_ext(ci: &[f64], bi: &[f64], ri: f64, cj: &[f64], bj: &[f64], rj: f64) -> f64 {
        let mut s = 0.0;
        for k in 0..ci.len() {
            let u = ci[k] / bi[k] - cj[k] / bj[k];
            s += u * u;
        }
        f64::max(s + ri * ri - rj * rj, 0.0)
    }

    pub fn rel(h: &[f64], r: &[f64], t: &[f64], l1: bool) -> f64 {
        let mut s = 0.0;
        for k in 0..h.len() {
            let e = h[k] + r[k] - t[k];
            s += if l1 { e.abs() } else { e * e };
        }
        s
    }

    fn len(a: &[f64]) -> f64 {
        a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn cos(a: &[f64], b: &[f64]) -> f64 {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        d / (len(a) * len(b))
    }

    /// `m` is row-major `d × d`.
    pub fn ins_int(m: &[f64], x: &[f64], c: &[f64]) -> f64 {
        let d = x.len();
        let v: Vec<f64> = (0..d).map(|i| (0..d).map(|j| m[i * d + j] * x[j]).sum()).collect();
        1.0 - cos(&v, c)
    }

    pub fn sub_int(a: &[f64], b: &[f64]) -> f64 {
        1.0 - cos(a, b) + len(a) - len(b)
    }
}

fn scoring_oracles() -> Outcome {
    let ((max_err, compared), took) = timed(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut max_err: f64 = 0.0;
        let mut compared = 0usize;
        let mut note = |got: f64, want: f64| {
            max_err = max_err.max((got - want).abs() / want.abs().max(1.0));
            compared += 1;
        };
        for k in 0..50 {
            let dim = rng.gen_range(1..12);
            let bridge = [BridgeKind::Identity, BridgeKind::Matrix][k % 2];
            let norm = [NormKind::L2, NormKind::L1][(k / 2) % 2];
            let m = random_model(&mut rng, (5, 3, 4), dim, 0.5, bridge, norm);
            let e = &m.extensional;
            let bridge_rows: Vec<f64> = match &m.intensional.bridge {
                Bridge::Learnable(b) => b.as_slice().to_vec(),
                Bridge::Identity => (0..dim * dim).map(|i| f64::from(u8::from(i % (dim + 1) == 0))).collect(),
            };
            let (i, c, c2) = (rng.gen_range(0..5), rng.gen_range(0..4), rng.gen_range(0..4));
            let (h, r, t) = (rng.gen_range(0..5), rng.gen_range(0..3), rng.gen_range(0..5));
            let want_ins = oracle::ins_ext(e.instance(i), e.centers.row(c), e.axes.row(c), e.radii[c]);
            note(e.score_instance_of(i, c), want_ins);
            let want_sub = oracle::sub_ext(
                e.centers.row(c), e.axes.row(c), e.radii[c],
                e.centers.row(c2), e.axes.row(c2), e.radii[c2],
            );
            note(e.score_sub_class_of(c, c2), want_sub);
            note(
                e.score_relational(h, r, t, norm),
                oracle::rel(e.instance(h), e.relation(r), e.instance(t), norm == NormKind::L1),
            );
            let want_ins_int = oracle::ins_int(&bridge_rows, e.instance(i), m.intensional.concept(c));
            note(m.intensional.score_instance_of(i, c, e), want_ins_int);
            let want_sub_int = oracle::sub_int(m.intensional.concept(c), m.intensional.concept(c2));
            note(m.intensional.score_sub_class_of(c, c2), want_sub_int);
            note(m.score_instance_of(&InstanceOfTriple::new(i, c)), want_ins + 0.5 * want_ins_int);
            note(m.score_sub_class_of(&SubClassOfTriple::new(c, c2)), want_sub + 0.5 * want_sub_int);
        }
        (max_err, compared)
    });
    Outcome::check(
        "scoring-oracles",
        max_err <= 1e-10 && took.as_secs_f64() < 5.0,
        format!(
            "max rel err {max_err:.2e} over {compared} comparisons in 50 configs; {:.2} s",
            took.as_secs_f64()
        ),
    )
}

/// Rank of `truth_entity` among `candidates` sorted by score, ties placed
/// ahead of the true entity.
fn brute_rank(mut scored: Vec<(f64, usize)>, truth_entity: usize) -> usize {
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| (a.1 == truth_entity).cmp(&(b.1 == truth_entity))));
    scored.iter().position(|&(_, e)| e == truth_entity).unwrap() + 1
}

fn link_prediction_oracle(rng: &mut ChaCha8Rng, round: usize) -> Result<usize, String> {
    let (ne, nr) = (20, 5);
    let mut m = random_model(rng, (ne, nr, 1), 3, 0.0, BridgeKind::Identity, NormKind::L2);
    if round % 2 == 1 {
        // Integer coordinates produce many tied scores.
        let e = &mut m.extensional;
        for v in e.instances.as_mut_slice().iter_mut().chain(e.relations.as_mut_slice()) {
            *v = f64::from(rng.gen_range(-1i32..=1));
        }
    }
    let mut known = HashSet::new();
    while known.len() < 60 {
        known.insert(RelationalTriple::new(rng.gen_range(0..ne), rng.gen_range(0..nr), rng.gen_range(0..ne)));
    }
    let mut truth = TruthIndex::default();
    for t in &known {
        truth.insert_relational(*t);
    }
    let test: Vec<RelationalTriple> = known.iter().copied().take(25).collect();
    let mut compared = 0;
    for setting in [RankSetting::Raw, RankSetting::Filter] {
        let report = link_predict(&m, &test, &truth, setting);
        if report.ranks.len() != 2 * test.len() {
            return Err(format!("{} ranks for {} queries", report.ranks.len(), test.len()));
        }
        for q in &report.ranks {
            let t = test[q.query_id];
            let build = |e: usize| match q.direction {
                Direction::Head => RelationalTriple::new(e, t.relation, t.tail),
                Direction::Tail => RelationalTriple::new(t.head, t.relation, e),
            };
            let true_entity = match q.direction {
                Direction::Head => t.head,
                Direction::Tail => t.tail,
            };
            let all: Vec<(f64, usize)> = (0..ne).map(|e| (m.score_relational(&build(e)), e)).collect();
            let raw = brute_rank(all.clone(), true_entity);
            let filtered: Vec<_> = all
                .into_iter()
                .filter(|&(_, e)| e == true_entity || !known.contains(&build(e)))
                .collect();
            let filter = brute_rank(filtered, true_entity);
            if (q.raw, q.filter) != (raw, filter) {
                return Err(format!("query {} {}: got ({}, {}), expected ({raw}, {filter})", q.query_id, q.direction, q.raw, q.filter));
            }
            compared += 1;
        }
        let expected_mrr = report.ranks.iter().map(|q| 1.0 / q.filter as f64).sum::<f64>() / report.ranks.len() as f64;
        if (report.mrr_filter - expected_mrr).abs() > 1e-12 {
            return Err("filtered MRR disagrees with its ranks".into());
        }
    }
    Ok(compared)
}

/// Smallest threshold among score values and +∞ maximising the accuracy of
/// `score < threshold`, by trying every candidate.
fn exhaustive_cut(scored: &[(f64, bool)]) -> (f64, f64) {
    let mut candidates: Vec<f64> = scored.iter().map(|s| s.0).collect();
    candidates.push(f64::INFINITY);
    candidates.sort_by(f64::total_cmp);
    let mut best = (f64::NAN, -1.0);
    for t in candidates {
        let correct = scored.iter().filter(|(s, l)| (*s < t) == *l).count();
        let acc = correct as f64 / scored.len() as f64;
        if acc > best.1 {
            best = (t, acc);
        }
    }
    best
}

fn threshold_oracle(rng: &mut ChaCha8Rng, round: usize) -> Result<(), String> {
    let ni = 12;
    let nc = 6;
    let mut m = random_model(rng, (ni, 2, nc), 3, 0.5, BridgeKind::Matrix, NormKind::L2);
    if round % 2 == 1 {
        let e = &mut m.extensional;
        for v in e.instances.as_mut_slice().iter_mut().chain(e.relations.as_mut_slice()) {
            *v = f64::from(rng.gen_range(-1i32..=1));
        }
    }
    let n = rng.gen_range(2..40);
    let mut split = LabeledSplit::default();
    let mut label = |k: usize| if k < 2 { k == 0 } else { rng.gen_bool(0.5) };
    let labels: Vec<bool> = (0..3 * n).map(&mut label).collect();
    let mut rng2 = ChaCha8Rng::seed_from_u64(round as u64);
    for k in 0..n {
        let r = if k < 4 { k % 2 } else { rng2.gen_range(0..2) };
        split.relational.push(Labeled {
            triple: RelationalTriple::new(rng2.gen_range(0..ni), r, rng2.gen_range(0..ni)),
            label: if k < 4 { k < 2 } else { labels[k] },
        });
        split.instance_of.push(Labeled {
            triple: InstanceOfTriple::new(rng2.gen_range(0..ni), rng2.gen_range(0..nc)),
            label: labels[n + k] ^ (k == 1),
        });
        split.sub_class_of.push(Labeled {
            triple: SubClassOfTriple::new(rng2.gen_range(0..nc), rng2.gen_range(0..nc)),
            label: labels[2 * n + k] ^ (k == 1),
        });
    }
    let table = tune_thresholds(&m, &split);
    let mut groups: Vec<(ThresholdKey, Vec<(f64, bool)>)> = (0..2)
        .map(|r| {
            let s = split.relational.iter().filter(|l| l.triple.relation == r);
            (ThresholdKey::Relation(r), s.map(|l| (m.score_relational(&l.triple), l.label)).collect())
        })
        .collect();
    groups.push((ThresholdKey::InstanceOf, split.instance_of.iter().map(|l| (m.score_instance_of(&l.triple), l.label)).collect()));
    groups.push((ThresholdKey::SubClassOf, split.sub_class_of.iter().map(|l| (m.score_sub_class_of(&l.triple), l.label)).collect()));
    for (key, scored) in groups {
        let delta = table.get(key).ok_or_else(|| format!("no threshold for {key}"))?;
        let single_class = scored.iter().all(|s| s.1) || scored.iter().all(|s| !s.1);
        if single_class {
            if delta != f64::INFINITY || best_cut(&scored).is_some() {
                return Err(format!("{key}: single-class data should give +inf"));
            }
            continue;
        }
        let (t, acc) = exhaustive_cut(&scored);
        let ours = scored.iter().filter(|(s, l)| (*s < delta) == *l).count() as f64 / scored.len() as f64;
        let same_partition = scored.iter().all(|(s, _)| (*s < delta) == (*s < t));
        if ours != acc || !same_partition {
            return Err(format!("{key}: delta {delta} acc {ours}, oracle {t} acc {acc}"));
        }
    }
    Ok(())
}

fn metric_oracles() -> Outcome {
    let (result, took) = timed(|| -> Result<usize, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut compared = 0;
        for round in 0..4 {
            compared += link_prediction_oracle(&mut rng, round)?;
        }
        for round in 0..50 {
            threshold_oracle(&mut rng, round)?;
        }
        Ok(compared)
    });
    match result {
        Ok(ranks) => Outcome::check(
            "metric-oracles",
            took.as_secs_f64() < 60.0,
            format!(
                "{ranks} ranks equal brute force (raw and filter, 4 toy KBs); thresholds equal exhaustive search on 50 score sets; {:.2} s",
                took.as_secs_f64()
            ),
        ),
        Err(e) => Outcome::check("metric-oracles", false, e),
    }
}

fn synthetic_config() -> TrainingConfig {
    TrainingConfig {
        dim: 10,
        lr: 0.005,
        margin_rel: 1.0,
        margin_ins: 2.0,
        margin_sub: 2.0,
        alpha: 0.5,
        epochs: 500,
        batch_size: 100,
        sampling: Sampling::Unif,
        bridge: BridgeKind::Identity,
        seed: 0,
        threads: 1,
        ..TrainingConfig::default()
    }
}

struct SyntheticRun {
    dataset: ontoembed::ontology::Dataset,
    outcome: TrainOutcome,
    took: Duration,
}

fn synthetic_convergence(run: &SyntheticRun) -> Outcome {
    let m = &run.outcome.state;
    let thresholds = tune_thresholds(m, &run.dataset.valid);
    let results = classify(m, &thresholds, &run.dataset.test).unwrap();
    let acc = |k| results.get(k).map_or(0.0, |r| r.accuracy);
    let ins = acc(ontoembed::ontology::TripleKind::InstanceOf);
    let sub = acc(ontoembed::ontology::TripleKind::SubClassOf);
    Outcome::check(
        "synthetic-convergence",
        ins >= 0.95 && sub >= 0.95 && run.took.as_secs_f64() < 300.0,
        format!(
            "test accuracy instanceOf {:.2}% subClassOf {:.2}% (target >= 95% each) after {} epochs; {:.2} s",
            100.0 * ins,
            100.0 * sub,
            m.epoch,
            run.took.as_secs_f64()
        ),
    )
}

fn transitivity(run: &SyntheticRun) -> Outcome {
    let m = &run.outcome.state;
    let thresholds = tune_thresholds(m, &run.dataset.valid);
    let r = transitivity_probe(m, &thresholds, &run.dataset.train).unwrap();
    let hits = |f: Option<f64>, n: usize| f.map_or(0.0, |f| f * n as f64);
    let total = r.instance_of_count + r.sub_class_of_count;
    let pooled = (hits(r.instance_of, r.instance_of_count) + hits(r.sub_class_of, r.sub_class_of_count))
        / total.max(1) as f64;
    let show = |f: Option<f64>| f.map_or("undefined".to_string(), |f| format!("{:.2}%", 100.0 * f));
    Outcome::check(
        "transitivity-probe",
        total > 0 && pooled >= 0.90,
        format!(
            "{:.2}% of {total} materialized triples positive (instanceOf {} of {}, subClassOf {} of {})",
            100.0 * pooled,
            show(r.instance_of),
            r.instance_of_count,
            show(r.sub_class_of),
            r.sub_class_of_count
        ),
    )
}

/// Per-kind hinge sums recomputed from scores, independent of the loss code.
fn loss_oracle(m: &ModelState, batches: &[ontoembed::training::Batch]) -> (f64, f64, f64) {
    let c = &m.config;
    let (mut rel, mut ins, mut sub) = (0.0, 0.0, 0.0);
    for b in batches {
        for (p, n) in &b.relational {
            rel += f64::max(0.0, m.score_relational(p) + c.margin_rel - m.score_relational(n));
        }
        for (p, n) in &b.instance_of {
            ins += f64::max(0.0, m.score_instance_of(p) + c.margin_ins - m.score_instance_of(n));
        }
        for (p, n) in &b.sub_class_of {
            sub += f64::max(0.0, m.score_sub_class_of(p) + c.margin_sub - m.score_sub_class_of(n));
        }
    }
    (rel, ins, sub)
}

fn decomposition_and_sampling(run: &SyntheticRun) -> Outcome {
    let exact = run
        .outcome
        .log
        .iter()
        .all(|r| r.loss.total == r.loss.rel + r.loss.ins + r.loss.sub);

    let d = &run.dataset;
    let m = &run.outcome.state;
    let truth = ontoembed::ontology::build_truth_index(d);
    let stats = BernStats::from_train(&d.train, d.vocabulary.num_relations());
    let mut sampler = NegativeSampler::new(
        Sampling::Unif,
        &stats,
        &truth,
        d.vocabulary.num_instances(),
        d.vocabulary.num_concepts(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let batches = build_batches(&d.train, 100, 1, &mut sampler, &mut rng);
    let got = epoch_loss(m, &batches);
    let (rel, ins, sub) = loss_oracle(m, &batches);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
    let parts_ok = close(got.rel, rel) && close(got.ins, ins) && close(got.sub, sub)
        && got.total == got.rel + got.ins + got.sub
        && close(hinge_rank_loss(1.0, 0.5, 0.2), 0.7);

    // Relation 0 has one head with three tails: tph = 3, hpt = 1.
    let train = TrainSplit {
        relational: (1..4).map(|t| RelationalTriple::new(0, 0, t)).collect(),
        ..TrainSplit::default()
    };
    let stats = BernStats::from_train(&train, 1);
    let mut truth = TruthIndex::default();
    for t in &train.relational {
        truth.insert_relational(*t);
    }
    let expected = 3.0 / 4.0;
    let draws = 100_000;
    let positive = Triple::Relational(RelationalTriple::new(0, 0, 1));
    let mut heads = 0usize;
    for _ in 0..draws {
        match corrupt(&positive, Sampling::Bern, &stats, &truth, 1000, 1, &mut rng) {
            Some(Triple::Relational(n)) if n.head != 0 => heads += 1,
            Some(_) => {}
            None => panic!("corruption budget exhausted"),
        }
    }
    let freq = heads as f64 / draws as f64;
    Outcome::check(
        "decomposition-and-sampling",
        exact && parts_ok && (freq - expected).abs() <= 0.01,
        format!(
            "L = L_rel + L_ins + L_sub exactly in all {} epochs: {exact}; per-kind sums match recomputation: {parts_ok}; bern head frequency {freq:.4} vs {expected:.4} over {draws} draws",
            run.outcome.log.len()
        ),
    )
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ontoembed").chain(args.iter().copied());
    let code = ontoembed::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned(), String::from_utf8_lossy(&err).into_owned())
}

/// Trains and classifies through the command-line entry point, as a full
/// YAGO39K run would, and returns (instanceOf, subClassOf) test accuracy.
/// A task with no test triples reports `None`.
fn benchmark_harness(
    data: &Path,
    extra: &[&str],
    work: &Path,
) -> Result<(Option<f64>, Option<f64>), String> {
    let ckpt = work.join("model.ckpt");
    let data = data.to_str().unwrap();
    let mut train_args = vec!["train", "--data", data, "--out", ckpt.to_str().unwrap()];
    train_args.extend_from_slice(extra);
    let (code, out, err) = cli(&train_args);
    if code != 0 {
        return Err(format!("train exited {code}: {err}"));
    }
    let mut eval_args = vec!["eval-classify", "--data", data, "--ckpt", ckpt.to_str().unwrap()];
    if let Some(pos) = extra.iter().position(|a| *a == "--subsample") {
        eval_args.extend_from_slice(&extra[pos..pos + 2]);
    }
    let (code, csv, err) = cli(&eval_args);
    if code != 0 {
        return Err(format!("eval-classify exited {code}: {err}"));
    }
    if !out.starts_with("epochs,") {
        return Err(format!("unexpected train summary: {out}"));
    }
    let acc = |task: &str| {
        csv.lines()
            .find(|l| l.starts_with(task))
            .and_then(|l| l.split(',').nth(1))
            .and_then(|v| v.parse::<f64>().ok())
    };
    Ok((acc("instanceOf"), acc("subClassOf")))
}

fn percent(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |a| format!("{:.2}%", 100.0 * a))
}

fn benchmark_subsample() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (data, source) = match std::env::var("YAGO39K_DIR") {
        Ok(d) => (std::path::PathBuf::from(d), "YAGO39K"),
        Err(_) => {
            let path = dir.path().join("synthetic");
            save_dataset(&SyntheticSpec::default().generate(0), &path).unwrap();
            (path, "synthetic stand-in (YAGO39K_DIR unset)")
        }
    };
    let (result, took) = timed(|| {
        benchmark_harness(
            &data,
            &["--subsample", "0.05", "--dim", "20", "--epochs", "20", "--lr", "0.001"],
            dir.path(),
        )
    });
    match result {
        Ok((ins, sub)) => Outcome::check(
            "benchmark-harness-5pct",
            took.as_secs_f64() < 900.0,
            format!(
                "end-to-end on a 5% subsample of {source}: instanceOf {} subClassOf {}; {:.1} s",
                percent(ins),
                percent(sub),
                took.as_secs_f64()
            ),
        ),
        Err(e) => Outcome::check("benchmark-harness-5pct", false, e),
    }
}

fn benchmark_full() -> Outcome {
    let Ok(data) = std::env::var("YAGO39K_DIR") else {
        return Outcome {
            name: "yago39k-full",
            status: Status::Skip,
            detail: "set YAGO39K_DIR to run (hours); targets instanceOf 89.26% +/- 2.0, subClassOf 90.00% +/- 2.5".into(),
        };
    };
    let dir = tempfile::tempdir().unwrap();
    let vectors = std::env::var("YAGO39K_VECTORS").ok();
    let mut extra = vec![
        "--dim", "100", "--lr", "0.001", "--margin-ins", "0.4", "--margin-sub", "0.3",
        "--alpha", "0.5", "--epochs", "1000", "--sampling", "unif", "--bridge", "EYE",
        "--expect-stats", "YAGO39K",
    ];
    if let Some(v) = &vectors {
        extra.extend_from_slice(&["--vectors", v]);
    }
    let (result, took) = timed(|| benchmark_harness(Path::new(&data), &extra, dir.path()));
    match result {
        Ok((ins, sub)) => Outcome::check(
            "yago39k-full",
            ins.is_some_and(|a| (100.0 * a - 89.26).abs() <= 2.0)
                && sub.is_some_and(|a| (100.0 * a - 90.00).abs() <= 2.5),
            format!(
                "instanceOf {} subClassOf {} ({} init); {:.0} s",
                percent(ins),
                percent(sub),
                if vectors.is_some() { "PRE" } else { "UNP" },
                took.as_secs_f64()
            ),
        ),
        Err(e) => Outcome::check("yago39k-full", false, e),
    }
}

fn main() {
    // `cargo test` passes libtest flags; listing mode must print nothing.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut outcomes = vec![gradient_check(), scoring_oracles(), metric_oracles()];

    let dataset = SyntheticSpec::default().generate(0);
    let (outcome, took) = timed(|| train(&dataset, synthetic_config(), None, &TrainOptions::default()).unwrap());
    let run = SyntheticRun { dataset, outcome, took };
    outcomes.push(synthetic_convergence(&run));
    outcomes.push(transitivity(&run));
    outcomes.push(decomposition_and_sampling(&run));
    outcomes.push(benchmark_subsample());
    outcomes.push(benchmark_full());

    let mut passed = 0;
    let mut failed = 0;
    for o in &outcomes {
        let tag = match o.status {
            Status::Pass => {
                passed += 1;
                "PASS"
            }
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::Skip => "SKIP",
        };
        println!("{tag} {}: {}", o.name, o.detail);
    }
    println!(
        "acceptance: {passed} passed, {failed} failed, {} skipped",
        outcomes.len() - passed - failed
    );
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
