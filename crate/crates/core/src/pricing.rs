//! Frictionless markets with polyhedral cone constraints on the portfolio:
//! no-arbitrage check, recursive price bounds for a claim, the extended
//! market as a selection problem, and a whole-tree hedging LP.

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::polyhedra::{
    conv_union, Expr, FaceForm, GenForm, OptValue, PolyCone, Rel, Row, SystemBuilder,
};
use crate::rational::{dot, sub, unit, zeros, Rational};
use crate::selection::{backward_recursion, SelectionProblem};
use crate::tree::{AdaptedVector, NodeMap, ScenarioTree};

/// Discounted prices `S`, constraint cones `B` at interior nodes, and a
/// claim `f` at the leaves.
#[derive(Debug, Clone)]
pub struct ConstrainedMarket {
    tree: ScenarioTree,
    s: AdaptedVector,
    b: NodeMap<PolyCone>,
    f: NodeMap<Rational>,
    dim: usize,
}

impl ConstrainedMarket {
    /// Missing cones mean no constraint; a missing claim means `f = 0`.
    pub fn new(
        tree: ScenarioTree,
        s: AdaptedVector,
        b: NodeMap<PolyCone>,
        f: NodeMap<Rational>,
    ) -> Result<Self> {
        let n = tree.len();
        if s.len() != n || b.len() != n || f.len() != n {
            return Err(Error::invalid("node maps do not match the tree"));
        }
        let dim = s.get(0).map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::invalid(
                "price vector at the root is missing or empty",
            ));
        }
        let mut cones = NodeMap::new(n);
        let mut claim = NodeMap::new(n);
        for i in 0..n {
            let id = tree.id(i);
            match s.get(i) {
                Some(v) if v.len() == dim => {}
                Some(v) => {
                    return Err(Error::invalid(format!(
                        "node {id}: price has {} entries, expected {dim}",
                        v.len()
                    )))
                }
                None => return Err(Error::invalid(format!("node {id}: price is missing"))),
            }
            if tree.is_leaf(i) {
                claim.set(i, f.get(i).cloned().unwrap_or_else(Rational::zero));
            } else {
                let c = b.get(i).cloned().unwrap_or_else(|| PolyCone::whole(dim));
                if c.dim() != dim {
                    return Err(Error::invalid(format!(
                        "node {id}: cone has dimension {}, expected {dim}",
                        c.dim()
                    )));
                }
                cones.set(i, c);
            }
        }
        Ok(ConstrainedMarket {
            tree,
            s,
            b: cones,
            f: claim,
            dim,
        })
    }

    pub fn tree(&self) -> &ScenarioTree {
        &self.tree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self, n: usize) -> &[Rational] {
        self.s.get(n).expect("validated")
    }

    pub fn b(&self, n: usize) -> &PolyCone {
        self.b.get(n).expect("interior node")
    }

    pub fn f(&self, leaf: usize) -> &Rational {
        self.f.get(leaf).expect("leaf")
    }

    /// The same market with another claim.
    pub fn with_claim(&self, f: NodeMap<Rational>) -> Result<Self> {
        ConstrainedMarket::new(self.tree.clone(), self.s.clone(), self.b.clone(), f)
    }
}

/// `[lower, upper]` with open or closed ends; `None` is an infinite end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceInterval {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
    pub lower_attained: bool,
    pub upper_attained: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Super,
    Sub,
}

/// Initial capital and a strategy `γ(n) ∈ B(n)` at interior nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HedgeCertificate {
    pub side: Side,
    pub initial: Rational,
    pub gamma: NodeMap<Vec<Rational>>,
}

impl HedgeCertificate {
    /// Replays the strategy on every path.
    pub fn verify(&self, m: &ConstrainedMarket) -> bool {
        let tree = m.tree();
        for n in tree.internal() {
            match self.gamma.get(n) {
                Some(g) if g.len() == m.dim && m.b(n).contains(g) => {}
                _ => return false,
            }
        }
        tree.leaves().all(|l| {
            let g = gain(m, &self.gamma, l);
            match self.side {
                Side::Super => &self.initial + g >= *m.f(l),
                Side::Sub => &self.initial - g <= *m.f(l),
            }
        })
    }
}

/// `G_T^γ` along the path to `leaf`.
pub fn gain(m: &ConstrainedMarket, gamma: &NodeMap<Vec<Rational>>, leaf: usize) -> Rational {
    let path = m.tree.path(leaf);
    path.windows(2)
        .map(|w| dot(gamma.get(w[0]).unwrap(), &sub(m.s(w[1]), m.s(w[0]))))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaReport {
    pub arbitrage_free: bool,
    /// Nodes where the singleton selection recursion first becomes empty.
    pub failing: Vec<usize>,
}

/// Selection problem `V_t = {S_t}`, `C_t = B_t`.
pub fn singleton_problem(m: &ConstrainedMarket) -> Result<SelectionProblem> {
    let n = m.tree.len();
    let v = NodeMap::from_fn(n, |i| Some(FaceForm::point(m.s(i))));
    SelectionProblem::new(m.tree.clone(), v, m.b.clone(), m.dim)
}

pub fn check_na(m: &ConstrainedMarket) -> Result<NaReport> {
    let rec = backward_recursion(&singleton_problem(m)?)?;
    Ok(NaReport {
        arbitrage_free: rec.solvable(),
        failing: rec.failing,
    })
}

/// Direct search for an arbitrage: an admissible `γ` with `G_T ≥ 0` on every
/// path and `Σ_leaves G_T ≥ 1`. Returns the strategy when one exists.
pub fn arbitrage_lp(m: &ConstrainedMarket) -> Option<NodeMap<Vec<Rational>>> {
    let tree = &m.tree;
    let d = m.dim;
    let internal: Vec<usize> = tree.internal().collect();
    let slot = |n: usize| internal.binary_search(&n).unwrap();
    let mut b = SystemBuilder::new(internal.len() * d);
    for &n in &internal {
        let g: Vec<Expr> = (0..d)
            .map(|i| vec![(slot(n) * d + i, Rational::one())])
            .collect();
        b.in_cone(&g, m.b(n));
    }
    let mut total = Expr::new();
    for l in tree.leaves() {
        let e = gain_expr(m, l, &slot);
        let neg: Expr = e.iter().map(|(j, c)| (*j, -c)).collect();
        b.row(neg, Rel::Le, Rational::zero());
        total.extend(e);
    }
    let neg_total = total.into_iter().map(|(j, c)| (j, -c)).collect();
    b.row(neg_total, Rel::Le, -Rational::one());
    let x = b.finish().feasible_point()?;
    Some(NodeMap::from_fn(tree.len(), |n| {
        internal
            .binary_search(&n)
            .ok()
            .map(|k| x[k * d..(k + 1) * d].to_vec())
    }))
}

fn gain_expr(m: &ConstrainedMarket, leaf: usize, slot: &dyn Fn(usize) -> usize) -> Expr {
    let d = m.dim;
    let path = m.tree.path(leaf);
    let mut e = Expr::new();
    for w in path.windows(2) {
        let ds = sub(m.s(w[1]), m.s(w[0]));
        for (i, v) in ds.into_iter().enumerate() {
            if !v.is_zero() {
                e.push((slot(w[0]) * d + i, v));
            }
        }
    }
    e
}

/// The market extended by the claim as a `(d+1)`-dimensional selection
/// problem: `V_t = {S_t} × ℝ`, `V_T = {(S_T, f)}`, `C_t = B_t × ℝ`.
pub fn market_extension(m: &ConstrainedMarket) -> Result<SelectionProblem> {
    let d = m.dim;
    let tree = &m.tree;
    let v = NodeMap::from_fn(tree.len(), |n| {
        if tree.is_leaf(n) {
            let mut p = m.s(n).to_vec();
            p.push(m.f(n).clone());
            Some(FaceForm::point(&p))
        } else {
            let rows = (0..d)
                .map(|i| Row::new(unit(d + 1, i), Rel::Eq, m.s(n)[i].clone()))
                .collect();
            Some(FaceForm::new(d + 1, rows).expect("rows have width d+1"))
        }
    });
    let c = m.b.map(|_, b| b.times_space(1));
    SelectionProblem::new(tree.clone(), v, c, d + 1)
}

/// Upper and lower arbitrage-free bounds at every node, computed backward
/// from the leaves. Infinite ends are reported as `None`.
pub fn price_bounds(m: &ConstrainedMarket) -> Result<NodeMap<PriceInterval>> {
    let na = check_na(m)?;
    if !na.arbitrage_free {
        let at = na
            .failing
            .first()
            .map(|&n| m.tree.id(n).to_string())
            .unwrap_or_default();
        return Err(Error::precondition(format!(
            "the market admits arbitrage (first failing node {at})"
        )));
    }
    let tree = &m.tree;
    let mut out: NodeMap<PriceInterval> = NodeMap::new(tree.len());
    for l in tree.leaves() {
        let f = m.f(l).clone();
        out.set(
            l,
            PriceInterval {
                lower: Some(f.clone()),
                upper: Some(f),
                lower_attained: true,
                upper_attained: true,
            },
        );
    }
    for t in (0..tree.horizon()).rev() {
        let layer: Vec<usize> = tree.at_depth(t).collect();
        let vals: Vec<Result<PriceInterval>> =
            layer.par_iter().map(|&n| node_bounds(m, &out, n)).collect();
        for (&n, v) in layer.iter().zip(vals) {
            out.set(n, v?);
        }
    }
    Ok(out)
}

fn node_bounds(
    m: &ConstrainedMarket,
    done: &NodeMap<PriceInterval>,
    n: usize,
) -> Result<PriceInterval> {
    let d = m.dim;
    let coords: Vec<usize> = (0..d).collect();
    let cone = m.b(n).times_space(1).conjugate();
    let mut y = zeros(d + 1);
    y[d] = Rational::one();
    let bound = |upper: bool| -> Result<(Option<Rational>, bool)> {
        let kids: Vec<GenForm> = m
            .tree
            .children(n)
            .iter()
            .map(|&c| {
                let iv = done.get(c).unwrap();
                let end = if upper { &iv.upper } else { &iv.lower };
                let mut p = m.s(c).to_vec();
                p.push(end.clone().unwrap_or_else(Rational::zero));
                let rays = match end {
                    Some(_) => vec![],
                    None if upper => vec![y.clone()],
                    None => vec![y.iter().map(|v| -v).collect()],
                };
                GenForm::new(d + 1, vec![p], rays, vec![])
            })
            .collect::<Result<_>>()?;
        let sys = conv_union(&kids)?
            .ri_lifted()
            .minkowski_sum_cone(&cone)?
            .with_fixed(&coords, m.s(n));
        let opt = if upper {
            sys.optimize(&y)
        } else {
            sys.minimize(&y)
        };
        match opt.value {
            OptValue::Finite(v) => Ok((Some(v), opt.attained)),
            OptValue::PlusInfinity | OptValue::MinusInfinity => Ok((None, false)),
            OptValue::Infeasible => Err(Error::internal(format!(
                "no arbitrage-free extension at node {}",
                m.tree.id(n)
            ))),
        }
    };
    let (upper, upper_attained) = bound(true)?;
    let (lower, lower_attained) = bound(false)?;
    Ok(PriceInterval {
        lower,
        upper,
        lower_attained,
        upper_attained,
    })
}

/// Result of the whole-tree hedging LP. `value` is `None` when the optimum
/// is infinite (`+∞` for an impossible superhedge, `−∞` under arbitrage, and
/// symmetrically for the sub side).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HedgeValue {
    pub value: Option<Rational>,
    pub unbounded: bool,
    pub cert: Option<HedgeCertificate>,
}

/// `inf {x : x + G_T^γ ≥ f}` (super) or `sup {x : x − G_T^γ ≤ f}` (sub) over
/// admissible `γ`, as one linear program over all nodes.
pub fn superhedge_oracle(m: &ConstrainedMarket, side: Side) -> Result<HedgeValue> {
    let tree = &m.tree;
    let d = m.dim;
    let internal: Vec<usize> = tree.internal().collect();
    let slot = |n: usize| 1 + internal.binary_search(&n).unwrap() * d;
    let mut b = SystemBuilder::new(1 + internal.len() * d);
    for &n in &internal {
        let g: Vec<Expr> = (0..d)
            .map(|i| vec![(slot(n) + i, Rational::one())])
            .collect();
        b.in_cone(&g, m.b(n));
    }
    for l in tree.leaves() {
        let mut g = Expr::new();
        let path = tree.path(l);
        for w in path.windows(2) {
            for (i, v) in sub(m.s(w[1]), m.s(w[0])).into_iter().enumerate() {
                if !v.is_zero() {
                    g.push((slot(w[0]) + i, v));
                }
            }
        }
        // super: −x − G ≤ −f; sub: x − G ≤ f
        let (sx, rhs) = match side {
            Side::Super => (-Rational::one(), -m.f(l)),
            Side::Sub => (Rational::one(), m.f(l).clone()),
        };
        let mut e: Expr = g.into_iter().map(|(j, c)| (j, -c)).collect();
        e.push((0, sx));
        b.row(e, Rel::Le, rhs);
    }
    let sys = b.finish();
    let mut obj = zeros(sys.dim());
    obj[0] = Rational::one();
    let opt = match side {
        Side::Super => sys.minimize(&obj),
        Side::Sub => sys.optimize(&obj),
    };
    match opt.value {
        OptValue::Finite(v) => {
            let w = opt
                .witness
                .ok_or_else(|| Error::internal("hedging LP optimum without a witness"))?;
            let gamma = NodeMap::from_fn(tree.len(), |n| {
                internal
                    .binary_search(&n)
                    .ok()
                    .map(|_| w[slot(n)..slot(n) + d].to_vec())
            });
            let cert = HedgeCertificate {
                side,
                initial: v.clone(),
                gamma,
            };
            if !cert.verify(m) {
                return Err(Error::internal("hedging certificate does not replay"));
            }
            Ok(HedgeValue {
                value: Some(v),
                unbounded: false,
                cert: Some(cert),
            })
        }
        OptValue::Infeasible => Ok(HedgeValue {
            value: None,
            unbounded: false,
            cert: None,
        }),
        OptValue::PlusInfinity | OptValue::MinusInfinity => Ok(HedgeValue {
            value: None,
            unbounded: true,
            cert: None,
        }),
    }
}
