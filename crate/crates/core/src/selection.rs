//! The C-martingale selection problem on a scenario tree: the backward
//! nonemptiness recursion, the forward construction of a selector together
//! with an equivalent measure, and an independent verifier.

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::memo::{cached, Table};
use crate::polyhedra::{
    conv_union, term, Expr, FaceForm, GenForm, LiftedSystem, PolyCone, Rel, SystemBuilder,
};
use crate::rational::{format_rational, sub, Rational};
use crate::tree::{closed_one_step_target, one_step_target, AdaptedVector, NodeMap, ScenarioTree};

/// `(tree, V, C)` with `V_t(n)` relatively open and `C_t(n)` a polyhedral cone.
#[derive(Debug, Clone)]
pub struct SelectionProblem {
    tree: ScenarioTree,
    v: NodeMap<FaceForm>,
    c: NodeMap<PolyCone>,
    dim: usize,
}

impl SelectionProblem {
    /// Validates the data. Missing cones at interior nodes mean `C = ℝ^d`.
    pub fn new(
        tree: ScenarioTree,
        v: NodeMap<FaceForm>,
        c: NodeMap<PolyCone>,
        dim: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("ambient dimension must be positive"));
        }
        let n = tree.len();
        if v.len() != n || c.len() != n {
            return Err(Error::invalid("node maps do not match the tree"));
        }
        let mut cones = NodeMap::new(n);
        for i in 0..n {
            let id = tree.id(i);
            let Some(vi) = v.get(i) else {
                return Err(Error::invalid(format!("node {id}: V is missing")));
            };
            if vi.dim() != dim {
                return Err(Error::invalid(format!(
                    "node {id}: V has dimension {}, expected {dim}",
                    vi.dim()
                )));
            }
            let ri = match vi.relative_interior() {
                Ok(ri) => ri,
                Err(Error::EmptyInput(_)) => {
                    return Err(Error::invalid(format!("node {id}: V is empty")))
                }
                Err(e) => return Err(e),
            };
            if !ri.denotes_same(vi) {
                return Err(Error::invalid(format!(
                    "node {id}: V is not relatively open"
                )));
            }
            if tree.is_leaf(i) {
                continue;
            }
            let ci = c.get(i).cloned().unwrap_or_else(|| PolyCone::whole(dim));
            if ci.dim() != dim {
                return Err(Error::invalid(format!(
                    "node {id}: C has dimension {}, expected {dim}",
                    ci.dim()
                )));
            }
            cones.set(i, ci);
        }
        Ok(SelectionProblem {
            tree,
            v,
            c: cones,
            dim,
        })
    }

    /// For sets that are relatively open by construction: skips the openness
    /// LPs of [`SelectionProblem::new`].
    pub(crate) fn from_open_parts(
        tree: ScenarioTree,
        v: NodeMap<FaceForm>,
        c: NodeMap<PolyCone>,
        dim: usize,
    ) -> Self {
        let n = tree.len();
        let cones = NodeMap::from_fn(n, |i| {
            if tree.is_leaf(i) {
                None
            } else {
                Some(c.get(i).cloned().unwrap_or_else(|| PolyCone::whole(dim)))
            }
        });
        SelectionProblem {
            tree,
            v,
            c: cones,
            dim,
        }
    }

    pub fn tree(&self) -> &ScenarioTree {
        &self.tree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn v(&self, n: usize) -> &FaceForm {
        self.v.get(n).expect("validated")
    }

    /// Cone at an interior node.
    pub fn c(&self, n: usize) -> &PolyCone {
        self.c.get(n).expect("interior node")
    }
}

/// A closed `W_t(n)` in both representations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WSet {
    pub faces: FaceForm,
    pub gens: GenForm,
}

impl WSet {
    fn empty(d: usize) -> Self {
        WSet {
            faces: FaceForm::empty(d),
            gens: GenForm::empty(d),
        }
    }

    fn from_closed(f: &FaceForm) -> Result<Self> {
        let gens = f.to_gen()?;
        let faces = gens.to_faces();
        Ok(WSet { faces, gens })
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recursion {
    pub w: NodeMap<WSet>,
    /// Nodes where emptiness first appears: `W` is empty there while every
    /// child value is nonempty.
    pub failing: Vec<usize>,
}

impl Recursion {
    pub fn solvable(&self) -> bool {
        self.failing.is_empty()
    }

    pub fn w(&self, n: usize) -> &WSet {
        self.w.get(n).expect("every node is evaluated")
    }

    pub fn faces(&self) -> NodeMap<FaceForm> {
        self.w.map(|_, w| w.faces.clone())
    }
}

/// Child points and conditional probabilities of one forward step.
type Step = Vec<(Vec<Rational>, Rational)>;

thread_local! {
    // Each entry is a pure function of its key; enumerated families repeat
    // the same subtrees many times over.
    static LEAVES: Table<FaceForm, WSet> = Default::default();
    static STEPS: Table<(FaceForm, PolyCone, Vec<GenForm>), WSet> = Default::default();
    static ROOTS: Table<FaceForm, Vec<Rational>> = Default::default();
    static FORWARD: Table<(Vec<Rational>, PolyCone, Vec<WSet>), Step> = Default::default();
}

/// `W_T = cl V_T`, `W_t = cl(V_t ∩ Y_t)` with
/// `Y_t = ri conv 𝒦(W_{t+1}, ℱ_t) + C_t*`.
///
/// The closure of the intersection is computed as `cl V ∩ cl Y` once the
/// intersection is known to be nonempty.
pub fn backward_recursion(prob: &SelectionProblem) -> Result<Recursion> {
    let tree = &prob.tree;
    let d = prob.dim;
    let mut w: NodeMap<WSet> = NodeMap::new(tree.len());
    let mut gens: NodeMap<GenForm> = NodeMap::new(tree.len());
    for t in (0..=tree.horizon()).rev() {
        let layer: Vec<usize> = tree.at_depth(t).collect();
        let vals: Vec<Result<WSet>> = layer
            .par_iter()
            .map(|&n| {
                let v = prob.v(n);
                if tree.is_leaf(n) {
                    return cached(&LEAVES, v.clone(), || WSet::from_closed(&v.closure()));
                }
                let c = prob.c(n);
                let kids = tree
                    .children(n)
                    .iter()
                    .map(|&k| gens.get(k).unwrap().clone());
                cached(&STEPS, (v.clone(), c.clone(), kids.collect()), || {
                    let y = one_step_target(tree, n, &gens, c)?;
                    if v.lift().intersect(&y)?.is_empty() {
                        return Ok(WSet::empty(d));
                    }
                    let cl_y = closed_one_step_target(tree, n, &gens, c)?.to_faces();
                    WSet::from_closed(&v.closure().intersect(&cl_y)?)
                })
            })
            .collect();
        for (&n, val) in layer.iter().zip(vals) {
            let val = val?;
            gens.set(n, val.gens.clone());
            w.set(n, val);
        }
    }
    let failing = (0..tree.len())
        .filter(|&n| {
            w.get(n).unwrap().is_empty()
                && tree
                    .children(n)
                    .iter()
                    .all(|&c| !w.get(c).unwrap().is_empty())
        })
        .collect();
    Ok(Recursion { w, failing })
}

/// The two sets whose intersection is empty at a failing node:
/// `V_t(n)` and `Y_t(n)`.
pub fn failure_sets(
    prob: &SelectionProblem,
    rec: &Recursion,
    n: usize,
) -> Result<(FaceForm, LiftedSystem)> {
    let gens = rec.w.map(|_, w| w.gens.clone());
    if prob.tree.is_leaf(n) {
        return Err(Error::precondition("leaves never fail"));
    }
    let y = one_step_target(&prob.tree, n, &gens, prob.c(n))?;
    Ok((prob.v(n).clone(), y))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Solvable,
    Unsolvable { nodes: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionResult {
    pub status: Status,
    pub w: NodeMap<FaceForm>,
    pub xi: AdaptedVector,
    /// `δ(c) = q(c)/p(c)` on non-root nodes.
    pub delta: NodeMap<Rational>,
    /// Density process, `z = 1` at the root.
    pub z: NodeMap<Rational>,
    /// Conditional probabilities of `Q`; 1 at the root.
    pub q: NodeMap<Rational>,
}

impl SelectionResult {
    pub fn solvable(&self) -> bool {
        self.status == Status::Solvable
    }
}

/// Backward recursion followed, when solvable, by the forward construction.
pub fn solve(prob: &SelectionProblem) -> Result<SelectionResult> {
    let rec = backward_recursion(prob)?;
    if !rec.solvable() {
        let n = prob.tree.len();
        return Ok(SelectionResult {
            status: Status::Unsolvable {
                nodes: rec.failing.clone(),
            },
            w: rec.faces(),
            xi: NodeMap::new(n),
            delta: NodeMap::new(n),
            z: NodeMap::new(n),
            q: NodeMap::new(n),
        });
    }
    forward_select(prob, &rec)
}

fn kernel(msg: String) -> Error {
    Error::internal(format!("kernel inconsistency: {msg}"))
}

/// Builds `ξ`, `δ`, `z` and `Q` node by node from the root.
pub fn forward_select(prob: &SelectionProblem, rec: &Recursion) -> Result<SelectionResult> {
    if !rec.solvable() {
        return Err(Error::precondition(
            "forward_select needs a solvable recursion",
        ));
    }
    let tree = &prob.tree;
    let len = tree.len();
    let mut xi: AdaptedVector = NodeMap::new(len);
    let mut delta = NodeMap::new(len);
    let mut z = NodeMap::new(len);
    let mut q = NodeMap::new(len);

    let root = tree.root();
    let w0 = &rec.w(root).faces;
    let x0 = cached(&ROOTS, w0.clone(), || {
        w0.relative_interior()?
            .lift()
            .feasible_point()
            .ok_or_else(|| kernel("ri W at the root is empty".into()))
    })?;
    xi.set(root, x0);
    z.set(root, Rational::one());
    q.set(root, Rational::one());

    for t in 0..tree.horizon() {
        let layer: Vec<usize> = tree.at_depth(t).collect();
        let steps: Vec<Result<Step>> = layer
            .par_iter()
            .map(|&n| {
                let x = xi.get(n).unwrap();
                let kids = tree.children(n).iter().map(|&c| rec.w(c).clone());
                cached(
                    &FORWARD,
                    (x.clone(), prob.c(n).clone(), kids.collect()),
                    || {
                        let eta = decompose(prob, rec, n, x)?;
                        lift_children(prob, rec, n, &eta)
                    },
                )
            })
            .collect();
        for (&n, step) in layer.iter().zip(steps) {
            let zn = z.get(n).unwrap().clone();
            for (&c, (point, weight)) in tree.children(n).iter().zip(step?) {
                let dc = &weight / tree.prob(c);
                z.set(c, &zn * &dc);
                delta.set(c, dc);
                q.set(c, weight);
                xi.set(c, point);
            }
        }
    }
    Ok(SelectionResult {
        status: Status::Solvable,
        w: rec.faces(),
        xi,
        delta,
        z,
        q,
    })
}

/// `η ∈ ri conv 𝒦(W_{t+1}, ℱ_t)(n)` with `η − ξ ∈ C°`.
fn decompose(
    prob: &SelectionProblem,
    rec: &Recursion,
    n: usize,
    x: &[Rational],
) -> Result<Vec<Rational>> {
    let kids: Vec<GenForm> = prob
        .tree
        .children(n)
        .iter()
        .map(|&c| rec.w(c).gens.clone())
        .collect();
    let hull = conv_union(&kids)?.ri_lifted();
    let shifted = FaceForm::point(x)
        .lift()
        .minkowski_sum_cone(&prob.c(n).polar())?;
    hull.intersect(&shifted)?
        .feasible_point()
        .ok_or_else(|| kernel(format!("no decomposition at node {}", prob.tree.id(n))))
}

/// Child points `ξ(c) ∈ ri W(c)` and weights `w(c) > 0`, `Σw = 1`, with
/// `Σ w(c) ξ(c) = η`, found through the homogenized variables `z = w ξ`.
fn lift_children(
    prob: &SelectionProblem,
    rec: &Recursion,
    n: usize,
    eta: &[Rational],
) -> Result<Vec<(Vec<Rational>, Rational)>> {
    let d = prob.dim;
    let kids = prob.tree.children(n);
    let k = kids.len();
    let stride = d + 1;
    let mut b = SystemBuilder::new(k * stride);
    for (i, e) in eta.iter().enumerate() {
        let sum: Expr = (0..k).map(|j| (j * stride + i, Rational::one())).collect();
        b.row(sum, Rel::Eq, e.clone());
    }
    let wsum: Expr = (0..k).map(|j| (j * stride + d, Rational::one())).collect();
    b.row(wsum, Rel::Eq, Rational::one());
    for (j, &c) in kids.iter().enumerate() {
        let wj = j * stride + d;
        b.nonneg(wj, true);
        for r in rec.w(c).faces.relative_interior()?.rows() {
            let mut e: Expr =
                r.a.iter()
                    .enumerate()
                    .filter(|(_, a)| !a.is_zero())
                    .map(|(i, a)| (j * stride + i, a.clone()))
                    .collect();
            if !r.b.is_zero() {
                e.push((wj, -&r.b));
            }
            b.row(e, r.rel, Rational::zero());
        }
    }
    let sol = b
        .finish()
        .feasible_point()
        .ok_or_else(|| kernel(format!("no lifting at node {}", prob.tree.id(n))))?;
    Ok((0..k)
        .map(|j| {
            let w = sol[j * stride + d].clone();
            let p = sol[j * stride..j * stride + d]
                .iter()
                .map(|v| v / &w)
                .collect();
            (p, w)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    /// `ξ_t(n) ∈ V_t(n)`.
    Membership,
    /// `q > 0` and children sum to one.
    Equivalence,
    /// `Σ q(c)(ξ(c) − ξ(n)) ∈ C°(n)`.
    Martingale,
    /// `ξ_t(n) ∈ W_t(n)`.
    InW,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub node: usize,
    pub check: Check,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub failures: Vec<Failure>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn has(&self, node: usize, check: Check) -> bool {
        self.failures
            .iter()
            .any(|f| f.node == node && f.check == check)
    }
}

/// Checks a solver output against the problem definition and against `W`.
pub fn verify_selector(result: &SelectionResult, prob: &SelectionProblem) -> Report {
    verify_parts(prob, &result.xi, &result.q, Some(&result.w))
}

/// Checks (i)–(iii) of the definition, plus `ξ ∈ W` when `w` is given.
pub fn verify_parts(
    prob: &SelectionProblem,
    xi: &AdaptedVector,
    q: &NodeMap<Rational>,
    w: Option<&NodeMap<FaceForm>>,
) -> Report {
    let tree = &prob.tree;
    let mut failures = Vec::new();
    let mut fail = |node: usize, check: Check, detail: String| {
        failures.push(Failure {
            node,
            check,
            detail,
        })
    };
    for n in 0..tree.len() {
        let id = tree.id(n);
        let x = match xi.get(n) {
            Some(x) if x.len() == prob.dim => x,
            _ => {
                fail(
                    n,
                    Check::Membership,
                    format!("node {id}: no selector value"),
                );
                continue;
            }
        };
        if !prob.v(n).contains(x) {
            fail(n, Check::Membership, format!("node {id}: ξ ∉ V"));
        }
        if let Some(w) = w {
            if !w.get(n).is_some_and(|wn| wn.contains(x)) {
                fail(n, Check::InW, format!("node {id}: ξ ∉ W"));
            }
        }
        if tree.is_leaf(n) {
            continue;
        }
        let kids = tree.children(n);
        let qs: Vec<Option<&Rational>> = kids.iter().map(|&c| q.get(c)).collect();
        if qs.iter().any(|v| !v.is_some_and(|v| v.is_positive())) {
            fail(
                n,
                Check::Equivalence,
                format!("node {id}: some child has q ≤ 0"),
            );
            continue;
        }
        let total: Rational = qs.iter().map(|v| (*v).unwrap().clone()).sum();
        if !total.is_one() {
            fail(
                n,
                Check::Equivalence,
                format!("node {id}: q sums to {}", format_rational(&total)),
            );
            continue;
        }
        let mut drift = vec![Rational::zero(); prob.dim];
        let mut complete = true;
        for (&c, qc) in kids.iter().zip(&qs) {
            match xi.get(c) {
                Some(xc) if xc.len() == prob.dim => {
                    for (acc, v) in drift.iter_mut().zip(sub(xc, x)) {
                        *acc += qc.unwrap() * v;
                    }
                }
                _ => complete = false,
            }
        }
        if complete && !prob.c(n).polar().contains(&drift) {
            fail(n, Check::Martingale, format!("node {id}: Q-drift ∉ C°"));
        }
    }
    Report { failures }
}

/// Random candidates for property tests and the acceptance suite.
pub mod fuzz {
    use rand::Rng;

    use super::*;
    use crate::rational::rat;

    /// Positive conditional probabilities with denominators up to 16.
    pub fn random_measure<R: Rng>(tree: &ScenarioTree, rng: &mut R) -> NodeMap<Rational> {
        let mut q = NodeMap::new(tree.len());
        q.set(tree.root(), Rational::one());
        for n in tree.internal() {
            let kids = tree.children(n);
            let raw: Vec<i64> = kids.iter().map(|_| rng.gen_range(1..=8)).collect();
            let total: i64 = raw.iter().sum();
            for (&c, &r) in kids.iter().zip(&raw) {
                q.set(c, rat(r, total));
            }
        }
        q
    }

    fn random_objective<R: Rng>(len: usize, rng: &mut R) -> Vec<Rational> {
        (0..len).map(|_| rat(rng.gen_range(-3..=3), 1)).collect()
    }

    /// Mixes the strict center of `sys` with an optimum of a random
    /// objective over its closure; the result stays in the set.
    fn spread<R: Rng>(sys: &LiftedSystem, rng: &mut R) -> Option<Vec<Rational>> {
        let center = sys.feasible_point()?;
        let c = random_objective(sys.dim(), rng);
        let opt = sys.closure().optimize(&c);
        let Some(edge) = opt.witness else {
            return Some(center);
        };
        let t = rat(rng.gen_range(0..8), 8);
        let s = Rational::one() - &t;
        Some(
            center
                .iter()
                .zip(&edge)
                .map(|(a, b)| &s * a + &t * b)
                .collect(),
        )
    }

    /// A random point of a relatively open set.
    pub fn random_point<R: Rng>(v: &FaceForm, rng: &mut R) -> Option<Vec<Rational>> {
        spread(&v.lift(), rng)
    }

    /// A selector for the given measure found by one linear program over the
    /// whole tree, independently of `W`. `None` when no selector exists for
    /// this `Q`.
    pub fn lp_selector<R: Rng>(
        prob: &SelectionProblem,
        q: &NodeMap<Rational>,
        rng: &mut R,
    ) -> Option<AdaptedVector> {
        let tree = prob.tree();
        let d = prob.dim();
        let var = |n: usize, i: usize| n * d + i;
        let mut b = SystemBuilder::new(tree.len() * d);
        for n in 0..tree.len() {
            for r in prob.v(n).rows() {
                let e: Expr =
                    r.a.iter()
                        .enumerate()
                        .filter(|(_, a)| !a.is_zero())
                        .map(|(i, a)| (var(n, i), a.clone()))
                        .collect();
                b.row(e, r.rel, r.b.clone());
            }
            if tree.is_leaf(n) {
                continue;
            }
            let drift: Vec<Expr> = (0..d)
                .map(|i| {
                    let mut e = term(var(n, i), -Rational::one());
                    for &c in tree.children(n) {
                        e.push((var(c, i), q.get(c).unwrap().clone()));
                    }
                    e
                })
                .collect();
            b.in_cone(&drift, &prob.c(n).polar());
        }
        let flat = spread(&b.finish(), rng)?;
        Some(NodeMap::from_fn(tree.len(), |n| {
            Some(flat[n * d..(n + 1) * d].to_vec())
        }))
    }

    /// A candidate that satisfies `V`-membership node by node with a random
    /// `Q`; interior values are optionally replaced by `Q`-averages of the
    /// children so that the drift vanishes.
    pub fn candidate_selector<R: Rng>(
        prob: &SelectionProblem,
        rng: &mut R,
    ) -> (AdaptedVector, NodeMap<Rational>) {
        let tree = prob.tree();
        let q = random_measure(tree, rng);
        if rng.gen_bool(0.3) {
            if let Some(xi) = lp_selector(prob, &q, rng) {
                return (xi, q);
            }
        }
        let mut xi: AdaptedVector = NodeMap::from_fn(tree.len(), |n| random_point(prob.v(n), rng));
        if rng.gen_bool(0.5) {
            for n in (0..tree.len()).rev().filter(|&n| !tree.is_leaf(n)) {
                let mut avg = vec![Rational::zero(); prob.dim()];
                for &c in tree.children(n) {
                    let xc = xi.get(c).unwrap();
                    for (a, v) in avg.iter_mut().zip(xc) {
                        *a += q.get(c).unwrap() * v;
                    }
                }
                xi.set(n, avg);
            }
        }
        (xi, q)
    }
}
