//! Finite filtered probability spaces as explicit event trees.
//!
//! Nodes at depth `t` are the atoms of `ℱ_t`. Every node carries its
//! conditional probability given its parent; all probabilities are positive,
//! so "almost surely" statements become per-node statements.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::polyhedra::{conv_union, GenForm, LiftedSystem, PolyCone};
use crate::rational::{format_rational, Rational};

/// A node as it appears in an input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawNode {
    pub id: String,
    pub parent: Option<String>,
    pub prob: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Conditional probability given the parent (1 for the root).
    pub prob: Rational,
    pub children: Vec<usize>,
}

/// Validated scenario tree. Node indices are breadth-first, children in
/// input order, so indices are sorted by depth and the root is index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioTree {
    nodes: Vec<Node>,
    horizon: usize,
}

impl ScenarioTree {
    pub fn validate(raw: &[RawNode]) -> Result<ScenarioTree> {
        if raw.is_empty() {
            return Err(Error::invalid("tree has no nodes"));
        }
        let mut by_id: HashMap<&str, usize> = HashMap::new();
        for (i, n) in raw.iter().enumerate() {
            if by_id.insert(n.id.as_str(), i).is_some() {
                return Err(Error::invalid(format!("duplicate node id {:?}", n.id)));
            }
        }
        let roots: Vec<usize> = (0..raw.len())
            .filter(|&i| raw[i].parent.is_none())
            .collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(Error::invalid("tree has no root")),
            _ => {
                return Err(Error::invalid(format!(
                    "tree has several roots: {:?} and {:?}",
                    raw[roots[0]].id, raw[roots[1]].id
                )))
            }
        };
        if !raw[root].prob.is_one() {
            return Err(Error::invalid(format!(
                "root node {:?} must have probability 1",
                raw[root].id
            )));
        }
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); raw.len()];
        for (i, n) in raw.iter().enumerate() {
            if let Some(p) = &n.parent {
                let Some(&pi) = by_id.get(p.as_str()) else {
                    return Err(Error::invalid(format!(
                        "orphan node {:?}: parent {:?} does not exist",
                        n.id, p
                    )));
                };
                if !n.prob.is_positive() {
                    return Err(Error::invalid(format!(
                        "zero-probability node {:?} (probability {})",
                        n.id,
                        format_rational(&n.prob)
                    )));
                }
                kids[pi].push(i);
            }
        }

        let mut order = vec![root];
        let mut depth = vec![usize::MAX; raw.len()];
        depth[root] = 0;
        let mut head = 0;
        while head < order.len() {
            let i = order[head];
            head += 1;
            for &c in &kids[i] {
                depth[c] = depth[i] + 1;
                order.push(c);
            }
        }
        if order.len() != raw.len() {
            let lost = (0..raw.len()).find(|&i| depth[i] == usize::MAX).unwrap();
            return Err(Error::invalid(format!(
                "orphan node {:?}: not reachable from the root",
                raw[lost].id
            )));
        }

        let mut index = vec![0; raw.len()];
        for (new, &old) in order.iter().enumerate() {
            index[old] = new;
        }
        let nodes: Vec<Node> = order
            .iter()
            .map(|&old| Node {
                id: raw[old].id.clone(),
                parent: raw[old].parent.as_ref().map(|p| index[by_id[p.as_str()]]),
                depth: depth[old],
                prob: if old == root {
                    Rational::one()
                } else {
                    raw[old].prob.clone()
                },
                children: kids[old].iter().map(|&c| index[c]).collect(),
            })
            .collect();

        for n in &nodes {
            if n.children.is_empty() {
                continue;
            }
            let sum: Rational = n.children.iter().map(|&c| nodes[c].prob.clone()).sum();
            if !sum.is_one() {
                return Err(Error::invalid(format!(
                    "probabilities sum {} ≠ 1 at node {}",
                    format_rational(&sum),
                    n.id
                )));
            }
        }
        let horizon = nodes.iter().map(|n| n.depth).max().unwrap_or(0);
        if let Some(bad) = nodes
            .iter()
            .find(|n| n.children.is_empty() && n.depth != horizon)
        {
            return Err(Error::invalid(format!(
                "leaf {:?} at depth {} but the horizon is {}",
                bad.id, bad.depth, horizon
            )));
        }
        Ok(ScenarioTree { nodes, horizon })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.nodes[i].children
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.nodes[i].children.is_empty()
    }

    pub fn depth(&self, i: usize) -> usize {
        self.nodes[i].depth
    }

    pub fn prob(&self, i: usize) -> &Rational {
        &self.nodes[i].prob
    }

    pub fn id(&self, i: usize) -> &str {
        &self.nodes[i].id
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn at_depth(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| self.nodes[i].depth == t)
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| self.nodes[i].children.is_empty())
    }

    pub fn internal(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| !self.nodes[i].children.is_empty())
    }

    /// Nodes from the root down to `i`, inclusive.
    pub fn path(&self, i: usize) -> Vec<usize> {
        let mut p = vec![i];
        let mut cur = i;
        while let Some(q) = self.nodes[cur].parent {
            p.push(q);
            cur = q;
        }
        p.reverse();
        p
    }

    /// Unconditional probability of the atom `i`.
    pub fn path_prob(&self, i: usize) -> Rational {
        self.path(i)
            .iter()
            .map(|&k| self.nodes[k].prob.clone())
            .product()
    }

    /// Nodes of the subtree rooted at `i`, `i` first, breadth-first.
    pub fn subtree(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let mut head = 0;
        while head < out.len() {
            let k = out[head];
            head += 1;
            out.extend(self.nodes[k].children.iter().copied());
        }
        out
    }
}

/// A value attached to (some of) the nodes of a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMap<T> {
    values: Vec<Option<T>>,
}

pub type AdaptedVector = NodeMap<Vec<Rational>>;

impl<T> NodeMap<T> {
    pub fn new(len: usize) -> Self {
        NodeMap {
            values: (0..len).map(|_| None).collect(),
        }
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> Option<T>) -> Self {
        NodeMap {
            values: (0..len).map(&mut f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(Option::is_none)
    }

    pub fn get(&self, i: usize) -> Option<&T> {
        self.values.get(i).and_then(Option::as_ref)
    }

    pub fn set(&mut self, i: usize, v: T) {
        self.values[i] = Some(v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &T)> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.as_ref().map(|v| (i, v)))
    }

    pub fn map<U>(&self, mut f: impl FnMut(usize, &T) -> U) -> NodeMap<U> {
        NodeMap {
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| v.as_ref().map(|v| f(i, v)))
                .collect(),
        }
    }
}

/// The conditional support of a set-valued map at a node: on a tree it is
/// the union of the values at the children.
#[derive(Debug, Clone, PartialEq)]
pub enum Support<'a> {
    /// Some child carries the empty set, so the operator is empty by convention.
    Empty,
    Sets(Vec<&'a GenForm>),
}

pub fn conditional_support<'a>(
    tree: &ScenarioTree,
    next: &'a NodeMap<GenForm>,
    n: usize,
) -> Result<Support<'a>> {
    let mut sets = Vec::with_capacity(tree.children(n).len());
    for &c in tree.children(n) {
        let Some(g) = next.get(c) else {
            return Err(Error::internal(format!(
                "missing set at child {:?} of {:?}",
                tree.id(c),
                tree.id(n)
            )));
        };
        if g.is_empty() {
            return Ok(Support::Empty);
        }
        sets.push(g);
    }
    if sets.is_empty() {
        return Err(Error::internal(format!(
            "node {:?} has no children",
            tree.id(n)
        )));
    }
    Ok(Support::Sets(sets))
}

fn support_hull(tree: &ScenarioTree, next: &NodeMap<GenForm>, n: usize) -> Result<Option<GenForm>> {
    match conditional_support(tree, next, n)? {
        Support::Empty => Ok(None),
        Support::Sets(sets) => {
            let owned: Vec<GenForm> = sets.into_iter().cloned().collect();
            conv_union(&owned).map(Some)
        }
    }
}

/// `ri(conv 𝒦(W_{t+1}, ℱ_t))(n) + C*(n)` with strictness kept exactly.
/// An empty conditional support yields the empty system.
pub fn one_step_target(
    tree: &ScenarioTree,
    n: usize,
    next: &NodeMap<GenForm>,
    cone: &PolyCone,
) -> Result<LiftedSystem> {
    let d = cone.dim();
    match support_hull(tree, next, n)? {
        None => Ok(LiftedSystem::empty(d)),
        Some(hull) => hull.ri_lifted().minkowski_sum_cone(&cone.conjugate()),
    }
}

/// Generators of the closure of [`one_step_target`]:
/// `conv 𝒦(W_{t+1}, ℱ_t)(n) + C*(n)`. Empty when the support is empty.
pub fn closed_one_step_target(
    tree: &ScenarioTree,
    n: usize,
    next: &NodeMap<GenForm>,
    cone: &PolyCone,
) -> Result<GenForm> {
    let d = cone.dim();
    match support_hull(tree, next, n)? {
        None => Ok(GenForm::empty(d)),
        Some(hull) => {
            let conj = cone.conjugate().to_gens();
            let mut rays = hull.rays().to_vec();
            rays.extend(conj.rays().iter().cloned());
            let mut lineality = hull.lineality().to_vec();
            lineality.extend(conj.lineality().iter().cloned());
            GenForm::new(d, hull.points().to_vec(), rays, lineality)
        }
    }
}

/// Checks that sibling probabilities sum to one for a measure given as
/// conditional probabilities; used for equivalent measures built on a tree.
pub fn conditional_sums_ok(tree: &ScenarioTree, q: &NodeMap<Rational>) -> bool {
    tree.internal().all(|n| {
        let s: Option<Rational> = tree.children(n).iter().map(|&c| q.get(c).cloned()).sum();
        matches!(s, Some(s) if s.is_one())
    }) && q.iter().all(|(_, v)| !v.is_zero())
}
