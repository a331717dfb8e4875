//! Exact polyhedral geometry: constraint and generator representations,
//! cone duality, relative interiors, Minkowski sums with cones, and linear
//! programming over partially open systems.
//!
//! Partially open polyhedra carry a strictness flag per row ([`Rel::Lt`]).
//! Sets obtained by summing or intersecting are kept as [`LiftedSystem`]s
//! with auxiliary variables; they are projected only when an x-space
//! description is actually needed.

mod builder;
mod dd;
mod fm;
mod lifted;

pub use builder::{term, Expr, SystemBuilder};
pub use dd::{cone_generators, ConeGenerators};
pub use lifted::{LiftedSystem, Membership, OptValue, Optimum};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{dot, is_zero_vec, neg, primitive, zeros, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rel {
    Le,
    Lt,
    Eq,
}

/// One row `a·x rel b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Row {
    pub a: Vec<Rational>,
    pub rel: Rel,
    pub b: Rational,
}

impl Row {
    pub fn new(a: Vec<Rational>, rel: Rel, b: Rational) -> Self {
        Row { a, rel, b }
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        let lhs = dot(&self.a, x);
        match self.rel {
            Rel::Le => lhs <= self.b,
            Rel::Lt => lhs < self.b,
            Rel::Eq => lhs == self.b,
        }
    }

    /// Same row with `(a, b)` scaled to coprime integers (positive factor).
    pub fn normalized(&self) -> Row {
        let mut all = self.a.clone();
        all.push(self.b.clone());
        let mut p = primitive(&all);
        let b = p.pop().unwrap();
        let mut row = Row::new(p, self.rel, b);
        if row.rel == Rel::Eq && crate::rational::leading_sign(&row.a) < 0 {
            row.a = neg(&row.a);
            row.b = -row.b;
        }
        row
    }

    fn is_trivial(&self) -> Option<bool> {
        if !is_zero_vec(&self.a) {
            return None;
        }
        let z = Rational::zero();
        Some(match self.rel {
            Rel::Le => z <= self.b,
            Rel::Lt => z < self.b,
            Rel::Eq => z == self.b,
        })
    }
}

/// `{x ∈ ℝ^d : a·x rel b for every row}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FaceForm {
    dim: usize,
    rows: Vec<Row>,
}

impl FaceForm {
    pub fn new(dim: usize, rows: Vec<Row>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("ambient dimension must be positive"));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.a.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has {} coefficients, expected {dim}",
                    r.a.len()
                )));
            }
        }
        Ok(FaceForm { dim, rows })
    }

    pub fn universe(dim: usize) -> Self {
        FaceForm {
            dim,
            rows: Vec::new(),
        }
    }

    /// Canonical empty set `{0·x ≤ -1}`.
    pub fn empty(dim: usize) -> Self {
        FaceForm {
            dim,
            rows: vec![Row::new(zeros(dim), Rel::Le, -Rational::one())],
        }
    }

    pub fn point(p: &[Rational]) -> Self {
        let dim = p.len();
        let rows = (0..dim)
            .map(|i| Row::new(crate::rational::unit(dim, i), Rel::Eq, p[i].clone()))
            .collect();
        FaceForm { dim, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn is_closed(&self) -> bool {
        self.rows.iter().all(|r| r.rel != Rel::Lt)
    }

    /// Replaces every strict row by its non-strict version. This is the
    /// topological closure whenever the set is nonempty.
    pub fn closure(&self) -> FaceForm {
        FaceForm {
            dim: self.dim,
            rows: self
                .rows
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    if r.rel == Rel::Lt {
                        r.rel = Rel::Le;
                    }
                    r
                })
                .collect(),
        }
    }

    /// Direct evaluation of every row at `x`.
    pub fn contains(&self, x: &[Rational]) -> bool {
        x.len() == self.dim && self.rows.iter().all(|r| r.holds(x))
    }

    pub fn lift(&self) -> LiftedSystem {
        LiftedSystem::from_faces(self)
    }

    pub fn is_empty(&self) -> bool {
        self.lift().feasible_point().is_none()
    }

    /// Intersection by row concatenation.
    pub fn intersect(&self, other: &FaceForm) -> Result<FaceForm> {
        if self.dim != other.dim {
            return Err(Error::invalid("dimension mismatch in intersection"));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(FaceForm {
            dim: self.dim,
            rows,
        })
    }

    /// Generator form of a closed polyhedron.
    pub fn to_gen(&self) -> Result<GenForm> {
        if !self.is_closed() {
            return Err(Error::invalid("generator conversion needs a closed system"));
        }
        let d = self.dim;
        let mut ineqs = Vec::new();
        let mut eqs = Vec::new();
        for r in &self.rows {
            let mut h = r.a.clone();
            h.push(-&r.b);
            match r.rel {
                Rel::Eq => eqs.push(h),
                _ => ineqs.push(h),
            }
        }
        let mut t = zeros(d + 1);
        t[d] = -Rational::one();
        ineqs.push(t);
        let g = cone_generators(d + 1, &ineqs, &eqs);
        let mut points = Vec::new();
        let mut rays = Vec::new();
        for r in g.rays {
            let t = r[d].clone();
            if t.is_zero() {
                rays.push(r[..d].to_vec());
            } else {
                points.push(r[..d].iter().map(|x| x / &t).collect::<Vec<_>>());
            }
        }
        if points.is_empty() {
            return Ok(GenForm::empty(d));
        }
        points.sort();
        let lineality = g.lineality.into_iter().map(|l| l[..d].to_vec()).collect();
        Ok(GenForm {
            dim: d,
            points,
            rays,
            lineality,
        })
    }

    /// Relative interior: rows that hold with equality on all of the
    /// (closed) set become `Eq`, every other inequality becomes strict.
    /// A strict input is treated through its closure.
    pub fn relative_interior(&self) -> Result<FaceForm> {
        let closed = self.closure();
        let sys = closed.lift();
        // an empty set with strict rows can have a nonempty relaxation
        if sys.feasible_point().is_none() || (!self.is_closed() && self.is_empty()) {
            return Err(Error::EmptyInput(
                "relative interior of an empty set".to_string(),
            ));
        }
        let mut rows = Vec::with_capacity(closed.rows.len());
        for r in &closed.rows {
            if let Some(true) = r.is_trivial() {
                continue;
            }
            let rel = match r.rel {
                Rel::Eq => Rel::Eq,
                _ => match sys.minimize(&r.a).value {
                    OptValue::Finite(v) if v == r.b => Rel::Eq,
                    OptValue::Finite(_) | OptValue::MinusInfinity => Rel::Lt,
                    _ => return Err(Error::internal("row minimization over nonempty set")),
                },
            };
            rows.push(Row::new(r.a.clone(), rel, r.b.clone()));
        }
        Ok(FaceForm {
            dim: self.dim,
            rows,
        })
    }

    /// Set inclusion for partially open systems, decided by linear programs.
    pub fn is_subset_of(&self, other: &FaceForm) -> bool {
        assert_eq!(self.dim, other.dim);
        let sys = self.lift();
        if sys.feasible_point().is_none() {
            return true;
        }
        other.rows.iter().all(|r| {
            let hi = sys.optimize(&r.a);
            let below = |strict: bool| match &hi.value {
                OptValue::Finite(v) => *v < r.b || (*v == r.b && !(strict && hi.attained)),
                _ => false,
            };
            match r.rel {
                Rel::Le => below(false),
                Rel::Lt => below(true),
                Rel::Eq => {
                    below(false)
                        && matches!(sys.minimize(&r.a).value, OptValue::Finite(v) if v >= r.b)
                }
            }
        })
    }

    pub fn denotes_same(&self, other: &FaceForm) -> bool {
        self.is_subset_of(other) && other.is_subset_of(self)
    }
}

/// `conv(points) + cone(rays) + span(lineality)`; empty when `points` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GenForm {
    dim: usize,
    points: Vec<Vec<Rational>>,
    rays: Vec<Vec<Rational>>,
    lineality: Vec<Vec<Rational>>,
}

impl GenForm {
    pub fn new(
        dim: usize,
        points: Vec<Vec<Rational>>,
        rays: Vec<Vec<Rational>>,
        lineality: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("ambient dimension must be positive"));
        }
        for v in points.iter().chain(&rays).chain(&lineality) {
            if v.len() != dim {
                return Err(Error::invalid(format!(
                    "generator has {} coordinates, expected {dim}",
                    v.len()
                )));
            }
        }
        if points.is_empty() {
            return Ok(GenForm::empty(dim));
        }
        Ok(GenForm {
            dim,
            points,
            rays,
            lineality,
        })
    }

    pub fn empty(dim: usize) -> Self {
        GenForm {
            dim,
            points: Vec::new(),
            rays: Vec::new(),
            lineality: Vec::new(),
        }
    }

    pub fn point(p: Vec<Rational>) -> Self {
        GenForm {
            dim: p.len(),
            points: vec![p],
            rays: Vec::new(),
            lineality: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<Rational>] {
        &self.points
    }

    pub fn rays(&self) -> &[Vec<Rational>] {
        &self.rays
    }

    pub fn lineality(&self) -> &[Vec<Rational>] {
        &self.lineality
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Irredundant constraint form: facets as `Le` rows, affine hull as `Eq` rows.
    pub fn to_faces(&self) -> FaceForm {
        let d = self.dim;
        if self.is_empty() {
            return FaceForm::empty(d);
        }
        let mut ineqs = Vec::new();
        for p in &self.points {
            let mut h = p.clone();
            h.push(Rational::one());
            ineqs.push(h);
        }
        for r in &self.rays {
            let mut h = r.clone();
            h.push(Rational::zero());
            ineqs.push(h);
        }
        let eqs: Vec<Vec<Rational>> = self
            .lineality
            .iter()
            .map(|l| {
                let mut h = l.clone();
                h.push(Rational::zero());
                h
            })
            .collect();
        let g = cone_generators(d + 1, &ineqs, &eqs);
        let mut rows = Vec::new();
        for e in &g.lineality {
            rows.push(Row::new(e[..d].to_vec(), Rel::Eq, -&e[d]).normalized());
        }
        for r in &g.rays {
            if is_zero_vec(&r[..d]) {
                continue;
            }
            rows.push(Row::new(r[..d].to_vec(), Rel::Le, -&r[d]).normalized());
        }
        FaceForm { dim: d, rows }
    }

    /// Relative interior as a lifted system over the generator weights:
    /// `x = Σλ v + Σμ r + Σν l` with `λ > 0`, `Σλ = 1`, `μ > 0`.
    pub fn ri_lifted(&self) -> LiftedSystem {
        self.weights_system(Rel::Lt)
    }

    /// The closed set as a lifted system over nonnegative weights.
    pub fn closed_lifted(&self) -> LiftedSystem {
        self.weights_system(Rel::Le)
    }

    fn weights_system(&self, sign_rel: Rel) -> LiftedSystem {
        let d = self.dim;
        if self.is_empty() {
            return LiftedSystem::empty(d);
        }
        let np = self.points.len();
        let nr = self.rays.len();
        let nl = self.lineality.len();
        let aux = np + nr + nl;
        let width = d + aux;
        let mut rows = Vec::new();
        for i in 0..d {
            let mut a = zeros(width);
            a[i] = Rational::one();
            for (k, g) in self
                .points
                .iter()
                .chain(&self.rays)
                .chain(&self.lineality)
                .enumerate()
            {
                a[d + k] = -&g[i];
            }
            rows.push(Row::new(a, Rel::Eq, Rational::zero()));
        }
        let mut sum = zeros(width);
        for k in 0..np {
            sum[d + k] = Rational::one();
        }
        rows.push(Row::new(sum, Rel::Eq, Rational::one()));
        for k in 0..np + nr {
            let mut a = zeros(width);
            a[d + k] = -Rational::one();
            rows.push(Row::new(a, sign_rel, Rational::zero()));
        }
        LiftedSystem::new(d, aux, rows).expect("well-formed weight system")
    }

    /// Keeps the first `keep` coordinates of every generator.
    pub fn project(&self, keep: usize) -> GenForm {
        assert!(keep >= 1 && keep <= self.dim);
        let cut = |vs: &[Vec<Rational>]| -> Vec<Vec<Rational>> {
            vs.iter().map(|v| v[..keep].to_vec()).collect()
        };
        if self.is_empty() {
            return GenForm::empty(keep);
        }
        GenForm {
            dim: keep,
            points: cut(&self.points),
            rays: cut(&self.rays)
                .into_iter()
                .filter(|r| !is_zero_vec(r))
                .collect(),
            lineality: cut(&self.lineality)
                .into_iter()
                .filter(|r| !is_zero_vec(r))
                .collect(),
        }
    }

    /// True when every generator lies in the closed polyhedron `f`.
    pub fn inside_closed(&self, f: &FaceForm) -> bool {
        let f = f.closure();
        self.points.iter().all(|p| f.contains(p))
            && f.rows.iter().all(|r| {
                self.rays.iter().all(|v| {
                    let s = dot(&r.a, v);
                    match r.rel {
                        Rel::Eq => s.is_zero(),
                        _ => !s.is_positive(),
                    }
                }) && self.lineality.iter().all(|l| dot(&r.a, l).is_zero())
            })
    }
}

/// Union of the generator lists; denotes `cl conv(∪ Pᵢ)`. Empty inputs
/// contribute nothing.
pub fn conv_union(ps: &[GenForm]) -> Result<GenForm> {
    let Some(first) = ps.first() else {
        return Err(Error::invalid("conv_union of an empty list"));
    };
    let d = first.dim;
    if ps.iter().any(|p| p.dim != d) {
        return Err(Error::invalid("dimension mismatch in conv_union"));
    }
    let mut out = GenForm::empty(d);
    for p in ps.iter().filter(|p| !p.is_empty()) {
        out.points.extend(p.points.iter().cloned());
        out.rays.extend(p.rays.iter().cloned());
        out.lineality.extend(p.lineality.iter().cloned());
    }
    Ok(out)
}

/// A polyhedral cone, kept in whichever representation it was built in.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PolyCone {
    /// Rows with `b = 0` and relation `Le` or `Eq`.
    Faces(FaceForm),
    /// Rays and lineality; the only point is the origin.
    Gens(GenForm),
}

impl PolyCone {
    pub fn from_generators(
        dim: usize,
        rays: Vec<Vec<Rational>>,
        lineality: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        Ok(PolyCone::Gens(GenForm::new(
            dim,
            vec![zeros(dim)],
            rays,
            lineality,
        )?))
    }

    pub fn from_rows(dim: usize, rows: Vec<Row>) -> Result<Self> {
        for r in &rows {
            if !r.b.is_zero() || r.rel == Rel::Lt {
                return Err(Error::invalid("cone rows must read a·x ≤ 0 or a·x = 0"));
            }
        }
        Ok(PolyCone::Faces(FaceForm::new(dim, rows)?))
    }

    /// `ℝ^d`.
    pub fn whole(dim: usize) -> Self {
        PolyCone::Faces(FaceForm::universe(dim))
    }

    /// `{0}`.
    pub fn origin(dim: usize) -> Self {
        PolyCone::Gens(GenForm::point(zeros(dim)))
    }

    pub fn dim(&self) -> usize {
        match self {
            PolyCone::Faces(f) => f.dim,
            PolyCone::Gens(g) => g.dim,
        }
    }

    /// `{y : ⟨x, y⟩ ≤ 0 for all x in the cone}`; generators of the cone
    /// become constraint normals and vice versa.
    pub fn polar(&self) -> PolyCone {
        match self {
            PolyCone::Gens(g) => {
                let mut rows = Vec::new();
                for r in &g.rays {
                    rows.push(Row::new(r.clone(), Rel::Le, Rational::zero()));
                }
                for l in &g.lineality {
                    rows.push(Row::new(l.clone(), Rel::Eq, Rational::zero()));
                }
                PolyCone::Faces(FaceForm { dim: g.dim, rows })
            }
            PolyCone::Faces(f) => {
                let mut rays = Vec::new();
                let mut lineality = Vec::new();
                for r in &f.rows {
                    if is_zero_vec(&r.a) {
                        continue;
                    }
                    match r.rel {
                        Rel::Eq => lineality.push(r.a.clone()),
                        _ => rays.push(r.a.clone()),
                    }
                }
                PolyCone::Gens(GenForm {
                    dim: f.dim,
                    points: vec![zeros(f.dim)],
                    rays,
                    lineality,
                })
            }
        }
    }

    /// Conjugate cone `−C°`.
    pub fn conjugate(&self) -> PolyCone {
        self.polar().negated()
    }

    pub fn negated(&self) -> PolyCone {
        match self {
            PolyCone::Gens(g) => PolyCone::Gens(GenForm {
                dim: g.dim,
                points: g.points.clone(),
                rays: g.rays.iter().map(|r| neg(r)).collect(),
                lineality: g.lineality.clone(),
            }),
            PolyCone::Faces(f) => PolyCone::Faces(FaceForm {
                dim: f.dim,
                rows: f
                    .rows
                    .iter()
                    .map(|r| Row::new(neg(&r.a), r.rel, Rational::zero()))
                    .collect(),
            }),
        }
    }

    pub fn to_faces(&self) -> FaceForm {
        match self {
            PolyCone::Faces(f) => f.clone(),
            PolyCone::Gens(g) => g.to_faces(),
        }
    }

    pub fn to_gens(&self) -> GenForm {
        match self {
            PolyCone::Gens(g) => g.clone(),
            PolyCone::Faces(f) => f.to_gen().expect("cone rows are closed"),
        }
    }

    /// Product with `ℝ^extra` on trailing coordinates.
    pub fn times_space(&self, extra: usize) -> PolyCone {
        let d = self.dim();
        let pad = |v: &[Rational]| {
            let mut v = v.to_vec();
            v.extend(zeros(extra));
            v
        };
        match self {
            PolyCone::Faces(f) => PolyCone::Faces(FaceForm {
                dim: d + extra,
                rows: f
                    .rows
                    .iter()
                    .map(|r| Row::new(pad(&r.a), r.rel, Rational::zero()))
                    .collect(),
            }),
            PolyCone::Gens(g) => {
                let mut lineality: Vec<_> = g.lineality.iter().map(|l| pad(l)).collect();
                for i in 0..extra {
                    lineality.push(crate::rational::unit(d + extra, d + i));
                }
                PolyCone::Gens(GenForm {
                    dim: d + extra,
                    points: vec![zeros(d + extra)],
                    rays: g.rays.iter().map(|r| pad(r)).collect(),
                    lineality,
                })
            }
        }
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        match self {
            PolyCone::Faces(f) => f.contains(x),
            PolyCone::Gens(g) => {
                let coords: Vec<usize> = (0..g.dim).collect();
                g.closed_lifted()
                    .with_fixed(&coords, x)
                    .feasible_point_full()
                    .is_some()
            }
        }
    }

    /// Lineality space as a list of spanning vectors.
    pub fn lineality(&self) -> Vec<Vec<Rational>> {
        self.to_gens().lineality.clone()
    }

    /// Each generator (or row normal) multiplied by its own positive factor.
    pub fn rescaled(&self, factors: &[Rational]) -> PolyCone {
        let f = |k: usize, v: &[Rational]| -> Vec<Rational> {
            let s = &factors[k % factors.len()];
            assert!(s.is_positive());
            v.iter().map(|x| x * s).collect()
        };
        match self {
            PolyCone::Gens(g) => PolyCone::Gens(GenForm {
                dim: g.dim,
                points: g.points.clone(),
                rays: g.rays.iter().enumerate().map(|(k, r)| f(k, r)).collect(),
                lineality: g.lineality.clone(),
            }),
            PolyCone::Faces(ff) => PolyCone::Faces(FaceForm {
                dim: ff.dim,
                rows: ff
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(k, r)| Row::new(f(k, &r.a), r.rel, Rational::zero()))
                    .collect(),
            }),
        }
    }
}

#[cfg(test)]
mod tests;
