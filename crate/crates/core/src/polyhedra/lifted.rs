use num_traits::{One, Signed, Zero};

use super::{FaceForm, GenForm, PolyCone, Rel, Row};
use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram, LpOutcome};
use crate::rational::{dot, zeros, Rational};

/// `{x ∈ ℝ^d : ∃u ∈ ℝ^m such that every row holds on (x, u)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedSystem {
    dim: usize,
    aux: usize,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OptValue {
    Finite(Rational),
    PlusInfinity,
    MinusInfinity,
    Infeasible,
}

/// Result of optimizing a linear objective over a (partially open) set.
///
/// `value` is the supremum (or infimum) over the set, computed on its
/// closure. `attained` says whether some point of the set itself reaches it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Optimum {
    pub value: OptValue,
    pub attained: bool,
    pub witness: Option<Vec<Rational>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Set,
    RelativeInterior,
}

impl LiftedSystem {
    pub fn new(dim: usize, aux: usize, rows: Vec<Row>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("ambient dimension must be positive"));
        }
        if rows.iter().any(|r| r.a.len() != dim + aux) {
            return Err(Error::invalid("lifted row width mismatch"));
        }
        Ok(LiftedSystem { dim, aux, rows })
    }

    pub fn from_faces(f: &FaceForm) -> Self {
        LiftedSystem {
            dim: f.dim(),
            aux: 0,
            rows: f.rows().to_vec(),
        }
    }

    pub fn universe(dim: usize) -> Self {
        LiftedSystem {
            dim,
            aux: 0,
            rows: Vec::new(),
        }
    }

    pub fn empty(dim: usize) -> Self {
        LiftedSystem::from_faces(&FaceForm::empty(dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn aux(&self) -> usize {
        self.aux
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn with_row(mut self, row: Row) -> Self {
        assert_eq!(row.a.len(), self.dim + self.aux);
        self.rows.push(row);
        self
    }

    /// Adds `a·x rel b` on the x-coordinates only.
    pub fn with_x_row(self, a: &[Rational], rel: Rel, b: Rational) -> Self {
        let mut full = a.to_vec();
        full.extend(zeros(self.aux));
        self.with_row(Row::new(full, rel, b))
    }

    /// Fixes the x-coordinates listed in `coords` to `values`.
    pub fn with_fixed(mut self, coords: &[usize], values: &[Rational]) -> Self {
        for (&i, v) in coords.iter().zip(values) {
            let mut a = zeros(self.dim + self.aux);
            a[i] = Rational::one();
            self.rows.push(Row::new(a, Rel::Eq, v.clone()));
        }
        self
    }

    pub fn closure(&self) -> LiftedSystem {
        let mut out = self.clone();
        for r in &mut out.rows {
            if r.rel == Rel::Lt {
                r.rel = Rel::Le;
            }
        }
        out
    }

    /// Concatenation over independent auxiliary blocks.
    pub fn intersect(&self, other: &LiftedSystem) -> Result<LiftedSystem> {
        if self.dim != other.dim {
            return Err(Error::invalid("dimension mismatch in intersection"));
        }
        let d = self.dim;
        let width = d + self.aux + other.aux;
        let mut rows = Vec::with_capacity(self.rows.len() + other.rows.len());
        for r in &self.rows {
            let mut a = r.a.clone();
            a.extend(zeros(other.aux));
            rows.push(Row::new(a, r.rel, r.b.clone()));
        }
        for r in &other.rows {
            let mut a = zeros(width);
            a[..d].clone_from_slice(&r.a[..d]);
            a[d + self.aux..].clone_from_slice(&r.a[d..]);
            rows.push(Row::new(a, r.rel, r.b.clone()));
        }
        Ok(LiftedSystem {
            dim: d,
            aux: self.aux + other.aux,
            rows,
        })
    }

    /// `{p + q : p in self, q in cone}`, strictness of `self` preserved.
    ///
    /// The summand `p` is substituted as `x − q`, so the auxiliary block is
    /// `(u, coordinates of q)`.
    pub fn minkowski_sum_cone(&self, cone: &PolyCone) -> Result<LiftedSystem> {
        let d = self.dim;
        if cone.dim() != d {
            return Err(Error::invalid("dimension mismatch in Minkowski sum"));
        }
        let m = self.aux;
        match cone {
            PolyCone::Gens(g) => {
                let gens: Vec<&Vec<Rational>> = g.rays().iter().chain(g.lineality()).collect();
                let k = gens.len();
                let width = d + m + k;
                let mut rows = Vec::with_capacity(self.rows.len() + g.rays().len());
                for r in &self.rows {
                    let mut a = r.a.clone();
                    for g in &gens {
                        a.push(-dot(&r.a[..d], g));
                    }
                    rows.push(Row::new(a, r.rel, r.b.clone()));
                }
                for j in 0..g.rays().len() {
                    let mut a = zeros(width);
                    a[d + m + j] = -Rational::one();
                    rows.push(Row::new(a, Rel::Le, Rational::zero()));
                }
                Ok(LiftedSystem {
                    dim: d,
                    aux: m + k,
                    rows,
                })
            }
            PolyCone::Faces(f) => {
                let width = d + m + d;
                let mut rows = Vec::with_capacity(self.rows.len() + f.rows().len());
                for r in &self.rows {
                    let mut a = r.a.clone();
                    a.extend(r.a[..d].iter().map(|x| -x));
                    rows.push(Row::new(a, r.rel, r.b.clone()));
                }
                for r in f.rows() {
                    let mut a = zeros(width);
                    a[d + m..].clone_from_slice(&r.a);
                    rows.push(Row::new(a, r.rel, Rational::zero()));
                }
                Ok(LiftedSystem {
                    dim: d,
                    aux: m + d,
                    rows,
                })
            }
        }
    }

    fn base_lp(&self) -> LinearProgram {
        let n = self.dim + self.aux;
        let mut lp = LinearProgram::new(n);
        for r in &self.rows {
            let cmp = match r.rel {
                Rel::Eq => Cmp::Eq,
                _ => Cmp::Le,
            };
            lp.add(r.a.clone(), cmp, r.b.clone());
        }
        lp
    }

    /// A point of the set in full `(x, u)` coordinates, or `None` if empty.
    ///
    /// Solves `max ε` with every strict row relaxed to `a·(x,u) + ε ≤ b` and
    /// `ε ≤ 1`; the set is nonempty iff the optimum is positive.
    pub fn feasible_point_full(&self) -> Option<Vec<Rational>> {
        let n = self.dim + self.aux;
        let mut lp = LinearProgram::new(n + 1);
        for r in &self.rows {
            let mut a = r.a.clone();
            let cmp = match r.rel {
                Rel::Eq => Cmp::Eq,
                Rel::Le => Cmp::Le,
                Rel::Lt => Cmp::Le,
            };
            a.push(if r.rel == Rel::Lt {
                Rational::one()
            } else {
                Rational::zero()
            });
            lp.add(a, cmp, r.b.clone());
        }
        lp.add_sparse(&[(n, Rational::one())], Cmp::Le, Rational::one());
        lp.objective[n] = Rational::one();
        match lp.maximize() {
            LpOutcome::Optimal { value, mut x } if value.is_positive() => {
                x.truncate(n);
                Some(x)
            }
            LpOutcome::Optimal { .. } | LpOutcome::Infeasible => None,
            LpOutcome::Unbounded { .. } => unreachable!("epsilon is capped"),
        }
    }

    /// A point of the denoted x-set, or `None` if the set is empty.
    pub fn feasible_point(&self) -> Option<Vec<Rational>> {
        self.feasible_point_full().map(|mut x| {
            x.truncate(self.dim);
            x
        })
    }

    pub fn is_empty(&self) -> bool {
        self.feasible_point_full().is_none()
    }

    /// `sup {c·x : x in the set}` with attainment.
    pub fn optimize(&self, c: &[Rational]) -> Optimum {
        assert_eq!(c.len(), self.dim);
        if self.is_empty() {
            return Optimum {
                value: OptValue::Infeasible,
                attained: false,
                witness: None,
            };
        }
        let mut lp = self.base_lp();
        lp.objective[..self.dim].clone_from_slice(c);
        match lp.maximize() {
            LpOutcome::Optimal { value, .. } => {
                let face = self.clone().with_x_row(c, Rel::Eq, value.clone());
                let witness = face.feasible_point();
                Optimum {
                    value: OptValue::Finite(value),
                    attained: witness.is_some(),
                    witness,
                }
            }
            LpOutcome::Unbounded { .. } => Optimum {
                value: OptValue::PlusInfinity,
                attained: false,
                witness: None,
            },
            LpOutcome::Infeasible => Optimum {
                value: OptValue::Infeasible,
                attained: false,
                witness: None,
            },
        }
    }

    /// `inf {c·x : x in the set}` with attainment.
    pub fn minimize(&self, c: &[Rational]) -> Optimum {
        let neg: Vec<Rational> = c.iter().map(|x| -x).collect();
        let mut o = self.optimize(&neg);
        o.value = match o.value {
            OptValue::Finite(v) => OptValue::Finite(-v),
            OptValue::PlusInfinity => OptValue::MinusInfinity,
            other => other,
        };
        o
    }

    pub fn contains(&self, x: &[Rational], mode: Membership) -> bool {
        assert_eq!(x.len(), self.dim);
        match mode {
            Membership::Set => {
                if self.aux == 0 {
                    return self.rows.iter().all(|r| r.holds(x));
                }
                let coords: Vec<usize> = (0..self.dim).collect();
                self.clone()
                    .with_fixed(&coords, x)
                    .feasible_point_full()
                    .is_some()
            }
            Membership::RelativeInterior => {
                let closed_x = if self.aux == 0 {
                    FaceForm::new(self.dim, self.rows.clone())
                        .expect("valid rows")
                        .closure()
                } else {
                    self.project_closure().to_faces()
                };
                match closed_x.relative_interior() {
                    Ok(ri) => ri.contains(x),
                    Err(_) => false,
                }
            }
        }
    }

    /// Generators of the closure of the x-projection (empty if the set is
    /// empty). Uses a double-description conversion in the lifted space.
    pub fn project_closure(&self) -> GenForm {
        if self.is_empty() {
            return GenForm::empty(self.dim);
        }
        let full = FaceForm::new(self.dim + self.aux, self.closure().rows)
            .expect("valid rows")
            .to_gen()
            .expect("closed system");
        full.project(self.dim)
    }

    /// Exact x-space constraint form, strictness included, by Fourier–Motzkin
    /// elimination of the auxiliary variables.
    pub fn eliminate_aux(&self) -> FaceForm {
        super::fm::eliminate(self)
    }

    pub(super) fn parts(&self) -> (usize, usize, &[Row]) {
        (self.dim, self.aux, &self.rows)
    }
}
