use num_traits::{One, Zero};

use super::{LiftedSystem, PolyCone, Rel, Row};
use crate::rational::Rational;

/// Sparse linear expression: `Σ coeff · var`.
pub type Expr = Vec<(usize, Rational)>;

/// Incremental construction of a [`LiftedSystem`] over named variable
/// indices. The first `dim` variables are the x-coordinates, every variable
/// created later is auxiliary.
#[derive(Debug, Clone)]
pub struct SystemBuilder {
    dim: usize,
    vars: usize,
    rows: Vec<(Expr, Rel, Rational)>,
}

impl SystemBuilder {
    pub fn new(dim: usize) -> Self {
        SystemBuilder {
            dim,
            vars: dim,
            rows: Vec::new(),
        }
    }

    pub fn var(&mut self) -> usize {
        self.vars += 1;
        self.vars - 1
    }

    pub fn vars(&mut self, k: usize) -> Vec<usize> {
        (0..k).map(|_| self.var()).collect()
    }

    pub fn row(&mut self, e: Expr, rel: Rel, b: Rational) {
        self.rows.push((e, rel, b));
    }

    /// `var ≥ 0` (or `> 0` when `strict`).
    pub fn nonneg(&mut self, v: usize, strict: bool) {
        let rel = if strict { Rel::Lt } else { Rel::Le };
        self.row(vec![(v, -Rational::one())], rel, Rational::zero());
    }

    /// Requires the vector of expressions `v` to lie in the closed cone `k`.
    pub fn in_cone(&mut self, v: &[Expr], k: &PolyCone) {
        assert_eq!(v.len(), k.dim());
        match k {
            PolyCone::Faces(f) => {
                for r in f.rows() {
                    let mut e = Expr::new();
                    for (a, vi) in r.a.iter().zip(v) {
                        if a.is_zero() {
                            continue;
                        }
                        e.extend(vi.iter().map(|(j, c)| (*j, a * c)));
                    }
                    self.row(e, r.rel, Rational::zero());
                }
            }
            PolyCone::Gens(g) => {
                let mu = self.vars(g.rays().len());
                let nu = self.vars(g.lineality().len());
                for &m in &mu {
                    self.nonneg(m, false);
                }
                for (i, vi) in v.iter().enumerate() {
                    let mut e = vi.clone();
                    for (&m, r) in mu.iter().zip(g.rays()) {
                        if !r[i].is_zero() {
                            e.push((m, -&r[i]));
                        }
                    }
                    for (&m, l) in nu.iter().zip(g.lineality()) {
                        if !l[i].is_zero() {
                            e.push((m, -&l[i]));
                        }
                    }
                    self.row(e, Rel::Eq, Rational::zero());
                }
            }
        }
    }

    pub fn finish(self) -> LiftedSystem {
        let width = self.vars;
        let rows = self
            .rows
            .into_iter()
            .map(|(e, rel, b)| {
                let mut a = vec![Rational::zero(); width];
                for (j, c) in e {
                    a[j] += c;
                }
                Row::new(a, rel, b)
            })
            .collect();
        LiftedSystem::new(self.dim, width - self.dim, rows).expect("builder rows have full width")
    }
}

/// `Σ coeff · var` for a single variable.
pub fn term(v: usize, c: Rational) -> Expr {
    vec![(v, c)]
}
