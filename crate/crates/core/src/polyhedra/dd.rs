//! Double-description conversion for polyhedral cones.
//!
//! [`cone_generators`] turns `{x : A x ≤ 0, E x = 0}` into a lineality basis
//! plus the extreme rays of the pointed part. Constraints are inserted one at
//! a time; adjacency of rays is decided combinatorially from their zero sets.

use num_traits::{Signed, Zero};

use crate::rational::{dot, primitive, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet(vec![0; n.div_ceil(64).max(1)])
    }

    fn full(upto: usize, n: usize) -> Self {
        let mut s = BitSet::new(n);
        for i in 0..upto {
            s.insert(i);
        }
        s
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, other: &BitSet) -> BitSet {
        BitSet(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn is_subset(&self, other: &BitSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

struct Ray {
    v: Vec<Rational>,
    zero: BitSet,
}

/// Generators of a polyhedral cone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeGenerators {
    /// Extreme rays of the pointed part, reduced modulo the lineality space,
    /// primitive-integer scaled and sorted.
    pub rays: Vec<Vec<Rational>>,
    /// Basis of the lineality space in reduced row echelon form.
    pub lineality: Vec<Vec<Rational>>,
}

fn axpy(y: &[Rational], s: &Rational, x: &[Rational]) -> Vec<Rational> {
    y.iter().zip(x).map(|(a, b)| a - s * b).collect()
}

/// Extreme rays and lineality of `{x ∈ ℝⁿ : a·x ≤ 0 for a in ineqs, e·x = 0 for e in eqs}`.
pub fn cone_generators(n: usize, ineqs: &[Vec<Rational>], eqs: &[Vec<Rational>]) -> ConeGenerators {
    let mut constraints: Vec<Vec<Rational>> = Vec::with_capacity(2 * eqs.len() + ineqs.len());
    for e in eqs {
        constraints.push(e.clone());
        constraints.push(e.iter().map(|x| -x).collect());
    }
    constraints.extend(ineqs.iter().cloned());
    let total = constraints.len();

    let mut lin: Vec<Vec<Rational>> = (0..n).map(|i| crate::rational::unit(n, i)).collect();
    let mut rays: Vec<Ray> = Vec::new();

    for (k, a) in constraints.iter().enumerate() {
        debug_assert_eq!(a.len(), n);
        if let Some(pos) = lin.iter().position(|l| !dot(a, l).is_zero()) {
            let mut pivot = lin.remove(pos);
            let mut s = dot(a, &pivot);
            if s.is_positive() {
                pivot = pivot.iter().map(|x| -x).collect();
                s = -s;
            }
            for l in lin.iter_mut() {
                let t = dot(a, l);
                if !t.is_zero() {
                    *l = axpy(l, &(t / &s), &pivot);
                }
            }
            for r in rays.iter_mut() {
                let t = dot(a, &r.v);
                if !t.is_zero() {
                    r.v = primitive(&axpy(&r.v, &(t / &s), &pivot));
                }
                r.zero.insert(k);
            }
            rays.push(Ray {
                v: primitive(&pivot),
                zero: BitSet::full(k, total),
            });
            continue;
        }

        let vals: Vec<Rational> = rays.iter().map(|r| dot(a, &r.v)).collect();
        let plus: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_positive()).collect();
        if plus.is_empty() {
            for (r, v) in rays.iter_mut().zip(&vals) {
                if v.is_zero() {
                    r.zero.insert(k);
                }
            }
            continue;
        }
        let minus: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_negative()).collect();
        let pointed_dim = n - lin.len();

        let mut created = Vec::new();
        for &p in &plus {
            for &m in &minus {
                let common = rays[p].zero.and(&rays[m].zero);
                if pointed_dim >= 2 && common.count() + 2 < pointed_dim {
                    continue;
                }
                let adjacent = (0..rays.len())
                    .filter(|&o| o != p && o != m)
                    .all(|o| !common.is_subset(&rays[o].zero));
                if !adjacent {
                    continue;
                }
                let v: Vec<Rational> = rays[m]
                    .v
                    .iter()
                    .zip(&rays[p].v)
                    .map(|(rm, rp)| &vals[p] * rm - &vals[m] * rp)
                    .collect();
                let mut zero = common;
                zero.insert(k);
                created.push(Ray {
                    v: primitive(&v),
                    zero,
                });
            }
        }

        let mut next: Vec<Ray> = Vec::with_capacity(rays.len() + created.len());
        for (i, mut r) in rays.into_iter().enumerate() {
            if vals[i].is_positive() {
                continue;
            }
            if vals[i].is_zero() {
                r.zero.insert(k);
            }
            next.push(r);
        }
        next.extend(created);
        rays = next;
    }

    canonicalize(n, rays.into_iter().map(|r| r.v).collect(), lin)
}

/// Reduced row echelon form of `vectors` (zero rows dropped), rows scaled so
/// the pivot is 1.
pub fn rref(n: usize, vectors: &[Vec<Rational>]) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let mut m: Vec<Vec<Rational>> = vectors.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(p) = (row..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].recip();
        m[row] = m[row].iter().map(|x| x * &inv).collect();
        for i in 0..m.len() {
            if i != row && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                m[i] = axpy(&m[i], &f, &m[row]);
            }
        }
        pivots.push(col);
        row += 1;
    }
    m.truncate(row);
    (m, pivots)
}

/// Reduces `v` modulo the row space of an RREF basis.
pub fn reduce(v: &[Rational], basis: &[Vec<Rational>], pivots: &[usize]) -> Vec<Rational> {
    let mut out = v.to_vec();
    for (b, &p) in basis.iter().zip(pivots) {
        if !out[p].is_zero() {
            let f = out[p].clone();
            out = axpy(&out, &f, b);
        }
    }
    out
}

fn canonicalize(n: usize, rays: Vec<Vec<Rational>>, lin: Vec<Vec<Rational>>) -> ConeGenerators {
    let (basis, pivots) = rref(n, &lin);
    let mut out: Vec<Vec<Rational>> = rays
        .iter()
        .map(|r| primitive(&reduce(r, &basis, &pivots)))
        .filter(|r| r.iter().any(|x| !x.is_zero()))
        .collect();
    out.sort();
    out.dedup();
    ConeGenerators {
        rays: out,
        lineality: basis.iter().map(|b| primitive(b)).collect(),
    }
}
