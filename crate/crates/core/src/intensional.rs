//! Intensional space: one free vector per concept plus a bridge that maps
//! instance points from the extensional space ("virtual" instances).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::extensional::ExtensionalParams;
use crate::linalg::{dot, norm, Matrix};

pub(crate) const INT_INIT_STREAM: u64 = 2;
pub(crate) const BRIDGE_INIT_STREAM: u64 = 3;

/// Standard deviation of the noise added to the identity when a learnable
/// bridge is initialised.
pub const BRIDGE_INIT_NOISE: f64 = 0.01;

static ZERO_COSINE_EVENTS: AtomicU64 = AtomicU64::new(0);

/// Number of cosine evaluations that hit a zero vector since process start.
pub fn zero_cosine_events() -> u64 {
    ZERO_COSINE_EVENTS.load(Ordering::Relaxed)
}

/// How the intensional concept vectors were initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// Loaded from a text-encoder vector file.
    Pretrained,
    /// Random, same scheme as the extensional vectors.
    #[default]
    Random,
}

impl InitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InitMode::Pretrained => "PRE",
            InitMode::Random => "UNP",
        }
    }
}

impl std::str::FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PRE" => Ok(InitMode::Pretrained),
            "UNP" => Ok(InitMode::Random),
            _ => Err(Error::Config(format!("unknown init mode {s:?} (expected PRE or UNP)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BridgeKind {
    /// Fixed identity, no parameters.
    #[default]
    Identity,
    /// Learnable d×d matrix.
    Matrix,
}

impl BridgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BridgeKind::Identity => "EYE",
            BridgeKind::Matrix => "MAT",
        }
    }
}

impl std::str::FromStr for BridgeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EYE" => Ok(BridgeKind::Identity),
            "MAT" => Ok(BridgeKind::Matrix),
            _ => Err(Error::Config(format!("unknown bridge {s:?} (expected EYE or MAT)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Bridge {
    Identity,
    Learnable(Matrix),
}

impl Bridge {
    pub fn kind(&self) -> BridgeKind {
        match self {
            Bridge::Identity => BridgeKind::Identity,
            Bridge::Learnable(_) => BridgeKind::Matrix,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Bridge::Identity => x.to_vec(),
            Bridge::Learnable(m) => m.mul_vec(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensionalParams {
    pub concepts: Matrix,
    pub bridge: Bridge,
    pub init_mode: InitMode,
}

impl IntensionalParams {
    pub fn dim(&self) -> usize {
        self.concepts.cols()
    }

    pub fn concept(&self, c: usize) -> &[f64] {
        self.concepts.row(c)
    }

    pub fn virtual_instance(&self, i: usize, ext: &ExtensionalParams) -> Vec<f64> {
        self.bridge.apply(ext.instance(i))
    }

    pub fn score_instance_of(&self, i: usize, c: usize, ext: &ExtensionalParams) -> f64 {
        instance_of_score(&self.virtual_instance(i, ext), self.concept(c))
    }

    pub fn score_sub_class_of(&self, sub: usize, sup: usize) -> f64 {
        sub_class_of_score(self.concept(sub), self.concept(sup))
    }

    pub fn check_invariants(&self) -> Result<()> {
        if !self.concepts.is_finite() {
            return Err(Error::NonFinite("intensional concept vectors".into()));
        }
        if let Bridge::Learnable(m) = &self.bridge {
            if !m.is_finite() {
                return Err(Error::NonFinite("bridge matrix".into()));
            }
        }
        Ok(())
    }
}

/// Cosine similarity, or `None` when either vector is exactly zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        ZERO_COSINE_EVENTS.fetch_add(1, Ordering::Relaxed);
        return None;
    }
    Some(dot(a, b) / (na * nb))
}

/// `1 − cos(a, b)`; a zero vector scores the neutral value 1.
pub fn instance_of_score(virtual_instance: &[f64], concept: &[f64]) -> f64 {
    1.0 - cosine(virtual_instance, concept).unwrap_or(0.0)
}

/// `1 − cos(sub, sup) + ‖sub‖ − ‖sup‖`. Unbounded below by design of the
/// objective; no hinge is applied.
pub fn sub_class_of_score(sub: &[f64], sup: &[f64]) -> f64 {
    1.0 - cosine(sub, sup).unwrap_or(0.0) + norm(sub) - norm(sup)
}

pub fn combine_instance_of(ext_score: f64, int_score: f64, alpha: f64) -> f64 {
    ext_score + alpha * int_score
}

pub fn combine_sub_class_of(ext_score: f64, int_score: f64, alpha: f64) -> f64 {
    ext_score + alpha * int_score
}

/// Random concept vectors, uniform in `±6/√d`.
pub fn init_random_concepts(num_concepts: usize, dim: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INT_INIT_STREAM);
    let bound = 6.0 / (dim as f64).sqrt();
    Matrix::uniform(num_concepts, dim, -bound, bound, &mut rng)
}

pub fn init_bridge(kind: BridgeKind, dim: usize, seed: u64) -> Bridge {
    match kind {
        BridgeKind::Identity => Bridge::Identity,
        BridgeKind::Matrix => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(BRIDGE_INIT_STREAM);
            let noise = Normal::new(0.0, BRIDGE_INIT_NOISE).expect("positive std");
            let mut m = Matrix::identity(dim);
            for v in m.as_mut_slice() {
                *v += noise.sample(&mut rng);
            }
            Bridge::Learnable(m)
        }
    }
}

/// Builds intensional parameters. With `pretrained` vectors the rows are
/// taken from them (already at the model dimension); otherwise random.
pub fn init_intensional(
    num_concepts: usize,
    dim: usize,
    bridge: BridgeKind,
    pretrained: Option<Matrix>,
    seed: u64,
) -> Result<IntensionalParams> {
    let (concepts, init_mode) = match pretrained {
        Some(m) => {
            if m.shape() != (num_concepts, dim) {
                return Err(Error::VectorFile(format!(
                    "pretrained matrix has shape {:?}, expected ({num_concepts}, {dim})",
                    m.shape()
                )));
            }
            (m, InitMode::Pretrained)
        }
        None => (init_random_concepts(num_concepts, dim, seed), InitMode::Random),
    };
    Ok(IntensionalParams {
        concepts,
        bridge: init_bridge(bridge, dim, seed),
        init_mode,
    })
}

/// Exported text-encoder vectors, one row per concept.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptVectorFile {
    pub dim: usize,
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl ConceptVectorFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::VectorFile("empty file".into()))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let parse_usize = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::VectorFile(format!("bad {what} {s:?} in header")))
        };
        if head.len() != 2 {
            return Err(Error::VectorFile("header must be \"count dim\"".into()));
        }
        let count = parse_usize(head[0], "count")?;
        let dim = parse_usize(head[1], "dim")?;
        if dim == 0 {
            return Err(Error::VectorFile("dim must be positive".into()));
        }
        let mut rows = Vec::with_capacity(count);
        for (ln, line) in lines {
            let line_no = ln + 1;
            let mut fields = line.split_whitespace();
            let id_field = fields.next().unwrap_or_default();
            let id: usize = id_field.parse().map_err(|_| {
                Error::VectorFile(format!("line {line_no}: bad concept id {id_field:?}"))
            })?;
            if let Some((prev, _)) = rows.last() {
                if id <= *prev {
                    return Err(Error::VectorFile(format!(
                        "line {line_no}: concept ids must be strictly ascending ({id} after {prev})"
                    )));
                }
            }
            let values = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| {
                        Error::VectorFile(format!("line {line_no}: bad float {f:?}"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != dim {
                return Err(Error::VectorFile(format!(
                    "line {line_no}: expected {dim} values, found {}",
                    values.len()
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::VectorFile(format!(
                    "line {line_no}: non-finite value for concept {id}"
                )));
            }
            rows.push((id, values));
        }
        if rows.len() != count {
            return Err(Error::VectorFile(format!(
                "header count {count} but {} rows",
                rows.len()
            )));
        }
        Ok(Self { dim, rows })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Serialises using the shortest round-trip float representation.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.rows.len(), self.dim);
        for (id, values) in &self.rows {
            let _ = write!(out, "{id}");
            for v in values {
                let _ = write!(out, " {v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        Self {
            dim: m.cols(),
            rows: (0..m.rows()).map(|i| (i, m.row(i).to_vec())).collect(),
        }
    }
}

/// Principal-component projection of `rows` (n×D) onto the top `dim`
/// directions, after mean-centring. Eigenvector signs are fixed so the
/// largest-magnitude component is positive, making the result reproducible.
pub fn pca_reduce(rows: &[Vec<f64>], dim: usize) -> Matrix {
    let n = rows.len();
    let full = rows.first().map_or(0, Vec::len);
    assert!(dim <= full, "cannot reduce {full} dimensions to {dim}");
    let mut mean = vec![0.0; full];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n.max(1) as f64);

    let centred = DMatrix::from_fn(n, full, |i, j| rows[i][j] - mean[j]);
    let cov = centred.transpose() * &centred / (n.max(2) - 1) as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..full).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut basis = DMatrix::<f64>::zeros(full, dim);
    for (k, &col) in order.iter().take(dim).enumerate() {
        let v = eig.eigenvectors.column(col);
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for j in 0..full {
            basis[(j, k)] = sign * v[j];
        }
    }
    let projected = centred * basis;
    Matrix::from_vec(
        n,
        dim,
        (0..n)
            .flat_map(|i| (0..dim).map(move |k| (i, k)))
            .map(|(i, k)| projected[(i, k)])
            .collect(),
    )
}

/// Turns an encoder export into an |C|×`target_dim` matrix. Wider files are
/// reduced with [`pca_reduce`]; concepts missing from the file (or whose
/// reduced vector is exactly zero) get the random-init row for `seed`.
pub fn load_concept_vectors(
    file: &ConceptVectorFile,
    num_concepts: usize,
    target_dim: usize,
    seed: u64,
) -> Result<Matrix> {
    if file.dim < target_dim {
        return Err(Error::VectorFile(format!(
            "vector dim {} is smaller than model dim {target_dim}",
            file.dim
        )));
    }
    if let Some((id, _)) = file.rows.iter().find(|(id, _)| *id >= num_concepts) {
        return Err(Error::VectorFile(format!(
            "concept id {id} out of range ({num_concepts} concepts)"
        )));
    }
    if let Some((id, _)) = file.rows.iter().find(|(_, v)| v.iter().any(|x| !x.is_finite())) {
        return Err(Error::VectorFile(format!("non-finite vector for concept {id}")));
    }

    let vectors: Vec<Vec<f64>> = file.rows.iter().map(|(_, v)| v.clone()).collect();
    let reduced = if file.dim == target_dim {
        Matrix::from_rows(&vectors)
    } else {
        pca_reduce(&vectors, target_dim)
    };

    let mut out = init_random_concepts(num_concepts, target_dim, seed);
    let mut present = vec![false; num_concepts];
    let mut zero_rows = 0;
    for (k, (id, _)) in file.rows.iter().enumerate() {
        let row = reduced.row(k);
        if row.iter().all(|&v| v == 0.0) {
            zero_rows += 1;
            continue;
        }
        out.row_mut(*id).copy_from_slice(row);
        present[*id] = true;
    }
    let missing = present.iter().filter(|p| !**p).count();
    if missing > 0 {
        warn!(
            "{missing} of {num_concepts} concepts have no usable pretrained vector ({zero_rows} zero after reduction); using random init"
        );
    }
    Ok(out)
}
