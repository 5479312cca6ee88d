//! Extensional space: instances are points, instance-relations are
//! translations, and every concept is an axis-aligned ellipsoid region
//! `{x : Σ_j ((x_j − center_j) / axes_j)² ≤ radius²}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{norm, Matrix};

/// Lower bound applied to every semi-axis and radius after an update.
pub const AXIS_FLOOR: f64 = 1e-3;
pub const RADIUS_FLOOR: f64 = 1e-3;

pub(crate) const EXT_INIT_STREAM: u64 = 1;

/// Distance used by the relational score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormKind {
    L1,
    /// Squared Euclidean residual.
    #[default]
    L2,
}

impl NormKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::L1 => "L1",
            NormKind::L2 => "L2",
        }
    }
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L1" => Ok(NormKind::L1),
            "L2" => Ok(NormKind::L2),
            _ => Err(Error::Config(format!("unknown norm {s:?} (expected L1 or L2)"))),
        }
    }
}

/// Borrowed view of one concept region.
#[derive(Debug, Clone, Copy)]
pub struct EllipsoidConcept<'a> {
    pub center: &'a [f64],
    pub axes: &'a [f64],
    pub radius: f64,
}

impl EllipsoidConcept<'_> {
    /// `Σ_j ((x_j − center_j) / axes_j)²`
    pub fn scaled_distance_sq(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.center)
            .zip(self.axes)
            .map(|((xj, cj), bj)| {
                let u = (xj - cj) / bj;
                u * u
            })
            .sum()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.scaled_distance_sq(x) <= self.radius * self.radius
    }

    /// Instance-in-region hinge.
    pub fn membership_score(&self, x: &[f64]) -> f64 {
        (self.scaled_distance_sq(x) - self.radius * self.radius).max(0.0)
    }

    /// Sub-region hinge of `self` inside `sup`.
    pub fn subsumption_score(&self, sup: &EllipsoidConcept<'_>) -> f64 {
        let centre_gap: f64 = self
            .center
            .iter()
            .zip(self.axes)
            .zip(sup.center.iter().zip(sup.axes))
            .map(|((ci, bi), (cj, bj))| {
                let u = ci / bi - cj / bj;
                u * u
            })
            .sum();
        (centre_gap + self.radius * self.radius - sup.radius * sup.radius).max(0.0)
    }
}

pub fn translation_score(head: &[f64], relation: &[f64], tail: &[f64], norm: NormKind) -> f64 {
    let residuals = head
        .iter()
        .zip(relation)
        .zip(tail)
        .map(|((h, r), t)| h + r - t);
    match norm {
        NormKind::L2 => residuals.map(|e| e * e).sum(),
        NormKind::L1 => residuals.map(f64::abs).sum(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionalParams {
    pub instances: Matrix,
    pub relations: Matrix,
    pub centers: Matrix,
    pub axes: Matrix,
    pub radii: Vec<f64>,
}

impl ExtensionalParams {
    pub fn dim(&self) -> usize {
        self.instances.cols()
    }

    pub fn num_instances(&self) -> usize {
        self.instances.rows()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.rows()
    }

    pub fn num_concepts(&self) -> usize {
        self.radii.len()
    }

    pub fn instance(&self, i: usize) -> &[f64] {
        self.instances.row(i)
    }

    pub fn relation(&self, r: usize) -> &[f64] {
        self.relations.row(r)
    }

    pub fn concept(&self, c: usize) -> EllipsoidConcept<'_> {
        EllipsoidConcept {
            center: self.centers.row(c),
            axes: self.axes.row(c),
            radius: self.radii[c],
        }
    }

    pub fn score_instance_of(&self, i: usize, c: usize) -> f64 {
        self.concept(c).membership_score(self.instance(i))
    }

    pub fn score_sub_class_of(&self, sub: usize, sup: usize) -> f64 {
        self.concept(sub).subsumption_score(&self.concept(sup))
    }

    pub fn score_relational(&self, h: usize, r: usize, t: usize, norm: NormKind) -> f64 {
        translation_score(self.instance(h), self.relation(r), self.instance(t), norm)
    }

    pub fn contains(&self, c: usize, point: &[f64]) -> bool {
        self.concept(c).contains(point)
    }

    pub fn project_instance(&mut self, i: usize) {
        let row = self.instances.row_mut(i);
        let n = norm(row);
        if n > 1.0 {
            row.iter_mut().for_each(|x| *x /= n);
        }
    }

    pub fn project_concept(&mut self, c: usize) {
        for b in self.axes.row_mut(c) {
            if *b < AXIS_FLOOR {
                *b = AXIS_FLOOR;
            }
        }
        if self.radii[c] < RADIUS_FLOOR {
            self.radii[c] = RADIUS_FLOOR;
        }
    }

    /// Applies every constraint: unit-ball instances, floored axes and radii.
    pub fn project(&mut self) {
        for i in 0..self.num_instances() {
            self.project_instance(i);
        }
        for c in 0..self.num_concepts() {
            self.project_concept(c);
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        let finite = self.instances.is_finite()
            && self.relations.is_finite()
            && self.centers.is_finite()
            && self.axes.is_finite()
            && self.radii.iter().all(|r| r.is_finite());
        if !finite {
            return Err(Error::NonFinite("extensional parameters".into()));
        }
        if self.axes.as_slice().iter().any(|&b| b < AXIS_FLOOR) {
            return Err(Error::NonFinite("semi-axis below floor".into()));
        }
        if self.radii.iter().any(|&r| r < RADIUS_FLOOR) {
            return Err(Error::NonFinite("radius below floor".into()));
        }
        Ok(())
    }
}

/// Random initialisation: vectors uniform in `±6/√d`, axes uniform in
/// `[0.5, 1.0)`, radius 1. Instances are then projected into the unit ball.
pub fn init_extensional(
    num_instances: usize,
    num_relations: usize,
    num_concepts: usize,
    dim: usize,
    seed: u64,
) -> Result<ExtensionalParams> {
    if dim == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    if num_instances == 0 || num_relations == 0 || num_concepts == 0 {
        return Err(Error::Config(format!(
            "empty vocabulary (instances={num_instances}, relations={num_relations}, concepts={num_concepts})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(EXT_INIT_STREAM);
    let bound = 6.0 / (dim as f64).sqrt();
    let instances = Matrix::uniform(num_instances, dim, -bound, bound, &mut rng);
    let relations = Matrix::uniform(num_relations, dim, -bound, bound, &mut rng);
    let centers = Matrix::uniform(num_concepts, dim, -bound, bound, &mut rng);
    let axes = Matrix::uniform(num_concepts, dim, 0.5, 1.0, &mut rng);
    let mut params = ExtensionalParams {
        instances,
        relations,
        centers,
        axes,
        radii: vec![1.0; num_concepts],
    };
    params.project();
    Ok(params)
}
