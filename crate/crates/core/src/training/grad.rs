//! Analytic gradients of the triple scores, accumulated sparsely by row.

use std::collections::BTreeMap;

use super::ModelState;
use crate::error::{Error, Result};
use crate::extensional::NormKind;
use crate::intensional::Bridge;
use crate::linalg::{axpy, dot, norm, Matrix};
use crate::ontology::{InstanceOfTriple, RelationalTriple, SubClassOfTriple};

/// Address of one scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamId {
    Instance(usize, usize),
    Relation(usize, usize),
    Center(usize, usize),
    Axis(usize, usize),
    Radius(usize),
    ConceptVector(usize, usize),
    Bridge(usize, usize),
}

impl ModelState {
    pub fn param(&self, id: ParamId) -> f64 {
        let ext = &self.extensional;
        match id {
            ParamId::Instance(i, j) => ext.instances.get(i, j),
            ParamId::Relation(r, j) => ext.relations.get(r, j),
            ParamId::Center(c, j) => ext.centers.get(c, j),
            ParamId::Axis(c, j) => ext.axes.get(c, j),
            ParamId::Radius(c) => ext.radii[c],
            ParamId::ConceptVector(c, j) => self.intensional.concepts.get(c, j),
            ParamId::Bridge(a, b) => match &self.intensional.bridge {
                Bridge::Learnable(m) => m.get(a, b),
                Bridge::Identity => f64::from(u8::from(a == b)),
            },
        }
    }

    /// Overwrites one parameter. Writing into a fixed identity bridge is a
    /// no-op.
    pub fn set_param(&mut self, id: ParamId, value: f64) {
        let ext = &mut self.extensional;
        match id {
            ParamId::Instance(i, j) => ext.instances.set(i, j, value),
            ParamId::Relation(r, j) => ext.relations.set(r, j, value),
            ParamId::Center(c, j) => ext.centers.set(c, j, value),
            ParamId::Axis(c, j) => ext.axes.set(c, j, value),
            ParamId::Radius(c) => ext.radii[c] = value,
            ParamId::ConceptVector(c, j) => self.intensional.concepts.set(c, j, value),
            ParamId::Bridge(a, b) => {
                if let Bridge::Learnable(m) = &mut self.intensional.bridge {
                    m.set(a, b, value);
                }
            }
        }
    }
}

fn row_entry(map: &mut BTreeMap<usize, Vec<f64>>, key: usize, dim: usize) -> &mut Vec<f64> {
    map.entry(key).or_insert_with(|| vec![0.0; dim])
}

/// `(∂cos/∂a, ∂cos/∂b)`, or `None` if either vector is zero.
fn cosine_grads(a: &[f64], b: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let cos = dot(a, b) / (na * nb);
    let ga = a
        .iter()
        .zip(b)
        .map(|(x, y)| y / (na * nb) - cos * x / (na * na))
        .collect();
    let gb = a
        .iter()
        .zip(b)
        .map(|(x, y)| x / (na * nb) - cos * y / (nb * nb))
        .collect();
    Some((ga, gb))
}

/// Sparse gradient over the model parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient {
    pub instances: BTreeMap<usize, Vec<f64>>,
    pub relations: BTreeMap<usize, Vec<f64>>,
    pub centers: BTreeMap<usize, Vec<f64>>,
    pub axes: BTreeMap<usize, Vec<f64>>,
    pub radii: BTreeMap<usize, f64>,
    pub concept_vectors: BTreeMap<usize, Vec<f64>>,
    pub bridge: Option<Matrix>,
}

impl Gradient {
    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
            && self.relations.is_empty()
            && self.centers.is_empty()
            && self.axes.is_empty()
            && self.radii.is_empty()
            && self.concept_vectors.is_empty()
            && self.bridge.is_none()
    }

    pub fn get(&self, id: ParamId) -> f64 {
        let row = |m: &BTreeMap<usize, Vec<f64>>, k: usize, j: usize| {
            m.get(&k).map_or(0.0, |v| v[j])
        };
        match id {
            ParamId::Instance(i, j) => row(&self.instances, i, j),
            ParamId::Relation(r, j) => row(&self.relations, r, j),
            ParamId::Center(c, j) => row(&self.centers, c, j),
            ParamId::Axis(c, j) => row(&self.axes, c, j),
            ParamId::Radius(c) => self.radii.get(&c).copied().unwrap_or(0.0),
            ParamId::ConceptVector(c, j) => row(&self.concept_vectors, c, j),
            ParamId::Bridge(a, b) => self.bridge.as_ref().map_or(0.0, |m| m.get(a, b)),
        }
    }

    /// Adds `other` into `self`.
    pub fn merge(&mut self, other: Gradient) {
        fn merge_rows(into: &mut BTreeMap<usize, Vec<f64>>, from: BTreeMap<usize, Vec<f64>>) {
            for (k, v) in from {
                match into.get_mut(&k) {
                    Some(dst) => axpy(1.0, &v, dst),
                    None => {
                        into.insert(k, v);
                    }
                }
            }
        }
        merge_rows(&mut self.instances, other.instances);
        merge_rows(&mut self.relations, other.relations);
        merge_rows(&mut self.centers, other.centers);
        merge_rows(&mut self.axes, other.axes);
        merge_rows(&mut self.concept_vectors, other.concept_vectors);
        for (k, v) in other.radii {
            *self.radii.entry(k).or_insert(0.0) += v;
        }
        if let Some(b) = other.bridge {
            match &mut self.bridge {
                Some(dst) => axpy(1.0, b.as_slice(), dst.as_mut_slice()),
                None => self.bridge = Some(b),
            }
        }
    }

    /// Fails on the first non-finite entry, naming the parameter.
    pub fn check_finite(&self) -> Result<()> {
        let rows = [
            ("instance", &self.instances),
            ("relation", &self.relations),
            ("center", &self.centers),
            ("axes", &self.axes),
            ("concept vector", &self.concept_vectors),
        ];
        for (what, map) in rows {
            for (k, v) in map {
                if let Some(j) = v.iter().position(|x| !x.is_finite()) {
                    return Err(Error::NonFinite(format!("gradient of {what} {k}[{j}]")));
                }
            }
        }
        for (k, v) in &self.radii {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("gradient of radius {k}")));
            }
        }
        if let Some(m) = &self.bridge {
            if let Some(p) = m.as_slice().iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "gradient of bridge [{}, {}]",
                    p / m.cols(),
                    p % m.cols()
                )));
            }
        }
        Ok(())
    }

    /// Adds `scale · ∇ f_rel(h, r, t)`.
    pub fn add_relational(&mut self, model: &ModelState, t: &RelationalTriple, scale: f64) {
        let ext = &model.extensional;
        let d = ext.dim();
        let h = ext.instance(t.head);
        let r = ext.relation(t.relation);
        let tl = ext.instance(t.tail);
        let g: Vec<f64> = h
            .iter()
            .zip(r)
            .zip(tl)
            .map(|((h, r), t)| {
                let e = h + r - t;
                match model.config.norm {
                    NormKind::L2 => 2.0 * e,
                    NormKind::L1 => {
                        if e > 0.0 {
                            1.0
                        } else if e < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                }
            })
            .collect();
        axpy(scale, &g, row_entry(&mut self.instances, t.head, d));
        axpy(scale, &g, row_entry(&mut self.relations, t.relation, d));
        axpy(-scale, &g, row_entry(&mut self.instances, t.tail, d));
    }

    /// Adds `scale · ∇ f_ins(i, c)`, the extensional hinge plus
    /// `α ·` the intensional cosine term.
    pub fn add_instance_of(&mut self, model: &ModelState, t: &InstanceOfTriple, scale: f64) {
        let ext = &model.extensional;
        let d = ext.dim();
        let x = ext.instance(t.instance);
        let region = ext.concept(t.concept);

        if region.scaled_distance_sq(x) - region.radius * region.radius > 0.0 {
            let mut gx = vec![0.0; d];
            let mut gb = vec![0.0; d];
            for j in 0..d {
                let diff = x[j] - region.center[j];
                let b = region.axes[j];
                gx[j] = 2.0 * diff / (b * b);
                gb[j] = -2.0 * diff * diff / (b * b * b);
            }
            axpy(scale, &gx, row_entry(&mut self.instances, t.instance, d));
            axpy(-scale, &gx, row_entry(&mut self.centers, t.concept, d));
            axpy(scale, &gb, row_entry(&mut self.axes, t.concept, d));
            *self.radii.entry(t.concept).or_insert(0.0) += scale * (-2.0 * region.radius);
        }

        let alpha = model.config.alpha;
        if alpha == 0.0 {
            return;
        }
        let int = &model.intensional;
        let v = int.bridge.apply(x);
        let c = int.concept(t.concept);
        let Some((gcos_v, gcos_c)) = cosine_grads(&v, c) else {
            return;
        };
        // f_in = 1 − cos(v, c)
        let s = -scale * alpha;
        match &int.bridge {
            Bridge::Identity => axpy(s, &gcos_v, row_entry(&mut self.instances, t.instance, d)),
            Bridge::Learnable(m) => {
                let gx = m.tr_mul_vec(&gcos_v);
                axpy(s, &gx, row_entry(&mut self.instances, t.instance, d));
                let gm = self.bridge.get_or_insert_with(|| Matrix::zeros(d, d));
                for (a, gva) in gcos_v.iter().enumerate() {
                    axpy(s * gva, x, gm.row_mut(a));
                }
            }
        }
        if !model.config.freeze_intensional {
            axpy(s, &gcos_c, row_entry(&mut self.concept_vectors, t.concept, d));
        }
    }

    /// Adds `scale · ∇ f_sub(sub, sup)`.
    pub fn add_sub_class_of(&mut self, model: &ModelState, t: &SubClassOfTriple, scale: f64) {
        let ext = &model.extensional;
        let d = ext.dim();
        let sub = ext.concept(t.sub);
        let sup = ext.concept(t.sup);

        let mut gap = vec![0.0; d];
        for (j, g) in gap.iter_mut().enumerate() {
            *g = sub.center[j] / sub.axes[j] - sup.center[j] / sup.axes[j];
        }
        let raw = dot(&gap, &gap) + sub.radius * sub.radius - sup.radius * sup.radius;
        if raw > 0.0 {
            let mut gc_sub = vec![0.0; d];
            let mut gb_sub = vec![0.0; d];
            let mut gc_sup = vec![0.0; d];
            let mut gb_sup = vec![0.0; d];
            for j in 0..d {
                let u = gap[j];
                let (ci, bi) = (sub.center[j], sub.axes[j]);
                let (cj, bj) = (sup.center[j], sup.axes[j]);
                gc_sub[j] = 2.0 * u / bi;
                gb_sub[j] = -2.0 * u * ci / (bi * bi);
                gc_sup[j] = -2.0 * u / bj;
                gb_sup[j] = 2.0 * u * cj / (bj * bj);
            }
            let (r_sub, r_sup) = (sub.radius, sup.radius);
            axpy(scale, &gc_sub, row_entry(&mut self.centers, t.sub, d));
            axpy(scale, &gb_sub, row_entry(&mut self.axes, t.sub, d));
            axpy(scale, &gc_sup, row_entry(&mut self.centers, t.sup, d));
            axpy(scale, &gb_sup, row_entry(&mut self.axes, t.sup, d));
            *self.radii.entry(t.sub).or_insert(0.0) += scale * 2.0 * r_sub;
            *self.radii.entry(t.sup).or_insert(0.0) += scale * (-2.0 * r_sup);
        }

        let alpha = model.config.alpha;
        if alpha == 0.0 || model.config.freeze_intensional {
            return;
        }
        let int = &model.intensional;
        let a = int.concept(t.sub);
        let b = int.concept(t.sup);
        let mut ga = vec![0.0; d];
        let mut gb = vec![0.0; d];
        // f_in = 1 − cos(a, b) + ‖a‖ − ‖b‖
        if let Some((gcos_a, gcos_b)) = cosine_grads(a, b) {
            axpy(-1.0, &gcos_a, &mut ga);
            axpy(-1.0, &gcos_b, &mut gb);
        }
        let (na, nb) = (norm(a), norm(b));
        if na > 0.0 {
            axpy(1.0 / na, a, &mut ga);
        }
        if nb > 0.0 {
            axpy(-1.0 / nb, b, &mut gb);
        }
        let s = scale * alpha;
        axpy(s, &ga, row_entry(&mut self.concept_vectors, t.sub, d));
        axpy(s, &gb, row_entry(&mut self.concept_vectors, t.sup, d));
    }

    /// `θ ← θ − lr·g`, then re-projects every touched instance and concept.
    pub fn apply(&self, model: &mut ModelState, lr: f64) {
        let ext = &mut model.extensional;
        for (&i, g) in &self.instances {
            axpy(-lr, g, ext.instances.row_mut(i));
            ext.project_instance(i);
        }
        for (&r, g) in &self.relations {
            axpy(-lr, g, ext.relations.row_mut(r));
        }
        for (&c, g) in &self.centers {
            axpy(-lr, g, ext.centers.row_mut(c));
        }
        for (&c, g) in &self.axes {
            axpy(-lr, g, ext.axes.row_mut(c));
        }
        for (&c, g) in &self.radii {
            ext.radii[c] -= lr * g;
        }
        for &c in self.axes.keys().chain(self.radii.keys()) {
            ext.project_concept(c);
        }
        let int = &mut model.intensional;
        for (&c, g) in &self.concept_vectors {
            axpy(-lr, g, int.concepts.row_mut(c));
        }
        if let (Some(g), Bridge::Learnable(m)) = (&self.bridge, &mut int.bridge) {
            axpy(-lr, g.as_slice(), m.as_mut_slice());
        }
    }
}
