//! Currency markets with proportional transaction costs given by bid-ask
//! matrices: solvency cones, robust no-arbitrage through martingale
//! selection, strictly consistent price processes, arbitrage certificates
//! and endowment checks.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram, LpOutcome};
use crate::memo::{cached, Table};
use crate::polyhedra::{Expr, FaceForm, GenForm, OptValue, PolyCone, Rel, Row, SystemBuilder};
use crate::rational::{
    dot, format_rational, is_zero_vec, neg, primitive, sub, unit, zeros, Rational,
};
use crate::selection::{backward_recursion, solve, SelectionProblem};
use crate::tree::{AdaptedVector, NodeMap, ScenarioTree};

/// `K` generated by `e_i` and `π^{ij} e_i − e_j`, and its conjugate cone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolvencyPair {
    pub k: PolyCone,
    /// `K* = {y : ⟨g, y⟩ ≥ 0 for every generator g of K}`.
    pub kstar: PolyCone,
    /// Generators of `K*`.
    pub kstar_gens: GenForm,
    /// `ri K*`.
    pub ri_kstar: FaceForm,
    /// `−K` written with the generators of `K*`.
    pub minus_k: PolyCone,
}

impl SolvencyPair {
    /// `x ∈ K ∩ (−K)`.
    pub fn in_lineality(&self, x: &[Rational]) -> bool {
        self.minus_k.contains(x) && self.minus_k.contains(&neg(x))
    }
}

pub fn solvency_cones(pi: &[Vec<Rational>]) -> Result<SolvencyPair> {
    cached(&CONES, pi.to_vec(), || build_cones(pi))
}

thread_local! {
    static CONES: Table<Vec<Vec<Rational>>, SolvencyPair> = Default::default();
}

fn build_cones(pi: &[Vec<Rational>]) -> Result<SolvencyPair> {
    let d = pi.len();
    check_matrix(pi, "")?;
    let mut gens: Vec<Vec<Rational>> = (0..d).map(|i| unit(d, i)).collect();
    for i in 0..d {
        for j in 0..d {
            if i != j {
                let mut g = zeros(d);
                g[i] = pi[i][j].clone();
                g[j] = -Rational::one();
                gens.push(g);
            }
        }
    }
    let rows = gens
        .iter()
        .map(|g| Row::new(neg(g), Rel::Le, Rational::zero()))
        .collect();
    let kstar = PolyCone::from_rows(d, rows)?;
    let kstar_gens = kstar.to_gens();
    let ri_kstar = kstar.to_faces().relative_interior()?;
    let mut minus = Vec::new();
    for r in kstar_gens.rays() {
        minus.push(Row::new(r.clone(), Rel::Le, Rational::zero()));
    }
    for l in kstar_gens.lineality() {
        minus.push(Row::new(l.clone(), Rel::Eq, Rational::zero()));
    }
    Ok(SolvencyPair {
        k: PolyCone::from_generators(d, gens, vec![])?,
        kstar,
        kstar_gens,
        ri_kstar,
        minus_k: PolyCone::from_rows(d, minus)?,
    })
}

fn check_matrix(pi: &[Vec<Rational>], at: &str) -> Result<()> {
    let d = pi.len();
    if d == 0 {
        return Err(Error::invalid(format!("{at}empty bid-ask matrix")));
    }
    for (i, row) in pi.iter().enumerate() {
        if row.len() != d {
            return Err(Error::invalid(format!("{at}bid-ask matrix is not square")));
        }
        if !row[i].is_one() {
            return Err(Error::invalid(format!(
                "{at}diagonal entry π^{{{0}{0}}} = {1} must be 1",
                i + 1,
                format_rational(&row[i])
            )));
        }
        for (j, v) in row.iter().enumerate() {
            if !v.is_positive() {
                return Err(Error::invalid(format!(
                    "{at}entry π^{{{}{}}} = {} must be positive",
                    i + 1,
                    j + 1,
                    format_rational(v)
                )));
            }
        }
    }
    for i in 0..d {
        for k in 0..d {
            for j in 0..d {
                if pi[i][j] > &pi[i][k] * &pi[k][j] {
                    return Err(Error::invalid(format!(
                        "{at}triangle inequality fails for (i,k,j) = ({},{},{}): π^ij = {} > π^ik·π^kj = {}",
                        i + 1,
                        k + 1,
                        j + 1,
                        format_rational(&pi[i][j]),
                        format_rational(&(&pi[i][k] * &pi[k][j]))
                    )));
                }
            }
        }
    }
    Ok(())
}

/// A bid-ask matrix at every node, with its solvency cones.
#[derive(Debug, Clone)]
pub struct BidAskMarket {
    tree: ScenarioTree,
    pi: NodeMap<Vec<Vec<Rational>>>,
    cones: Vec<SolvencyPair>,
    dim: usize,
}

impl BidAskMarket {
    pub fn new(tree: ScenarioTree, pi: NodeMap<Vec<Vec<Rational>>>) -> Result<Self> {
        if pi.len() != tree.len() {
            return Err(Error::invalid("node map does not match the tree"));
        }
        let dim = pi.get(0).map(Vec::len).unwrap_or(0);
        let mut cones = Vec::with_capacity(tree.len());
        for n in 0..tree.len() {
            let at = format!("node {}: ", tree.id(n));
            let Some(m) = pi.get(n) else {
                return Err(Error::invalid(format!("{at}bid-ask matrix is missing")));
            };
            if m.len() != dim {
                return Err(Error::invalid(format!(
                    "{at}matrix has size {}, expected {dim}",
                    m.len()
                )));
            }
            check_matrix(m, &at)?;
            cones.push(solvency_cones(m)?);
        }
        Ok(BidAskMarket {
            tree,
            pi,
            cones,
            dim,
        })
    }

    pub fn tree(&self) -> &ScenarioTree {
        &self.tree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pi(&self, n: usize) -> &[Vec<Rational>] {
        self.pi.get(n).expect("validated")
    }

    pub fn cones(&self, n: usize) -> &SolvencyPair {
        &self.cones[n]
    }
}

/// Selection problem `V_t = ri K_t*`, `C_t = ℝ^d`.
pub fn nar_problem(m: &BidAskMarket) -> Result<SelectionProblem> {
    let n = m.tree.len();
    let v = NodeMap::from_fn(n, |i| Some(m.cones[i].ri_kstar.clone()));
    Ok(SelectionProblem::from_open_parts(
        m.tree.clone(),
        v,
        NodeMap::new(n),
        m.dim,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NarReport {
    pub nar: bool,
    pub w: NodeMap<FaceForm>,
    pub failing: Vec<usize>,
}

pub fn check_nar(m: &BidAskMarket) -> Result<NarReport> {
    let rec = backward_recursion(&nar_problem(m)?)?;
    Ok(NarReport {
        nar: rec.solvable(),
        w: rec.faces(),
        failing: rec.failing,
    })
}

/// `Z = z·ξ` together with the selector and density it was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistentPriceProcess {
    pub z_process: AdaptedVector,
    pub xi: AdaptedVector,
    pub density: NodeMap<Rational>,
}

pub fn consistent_price_process(m: &BidAskMarket) -> Result<ConsistentPriceProcess> {
    let res = solve(&nar_problem(m)?)?;
    if !res.solvable() {
        return Err(Error::precondition(
            "no strictly consistent price process: robust no-arbitrage fails",
        ));
    }
    let z_process = res.xi.map(|n, x| {
        let z = res.z.get(n).unwrap();
        x.iter().map(|v| v * z).collect()
    });
    let failures = check_consistent(m, &z_process);
    if !failures.is_empty() {
        return Err(Error::internal(failures.join("; ")));
    }
    Ok(ConsistentPriceProcess {
        z_process,
        xi: res.xi,
        density: res.z,
    })
}

/// Exact checks of a candidate price process: `Z_t ∈ ri K_t*` and the
/// one-step `P`-martingale identity. Returns one message per failure.
pub fn check_consistent(m: &BidAskMarket, z: &AdaptedVector) -> Vec<String> {
    let tree = &m.tree;
    let mut out = Vec::new();
    for n in 0..tree.len() {
        let Some(zn) = z.get(n) else {
            out.push(format!("node {}: missing value", tree.id(n)));
            continue;
        };
        if !m.cones[n].ri_kstar.contains(zn) {
            out.push(format!("node {}: Z ∉ ri K*", tree.id(n)));
        }
        if tree.is_leaf(n) {
            continue;
        }
        let mut mean = zeros(m.dim);
        for &c in tree.children(n) {
            if let Some(zc) = z.get(c) {
                for (a, v) in mean.iter_mut().zip(zc) {
                    *a += tree.prob(c) * v;
                }
            }
        }
        if &mean != zn {
            out.push(format!("node {}: martingale identity fails", tree.id(n)));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArbitrageCertificate {
    /// Node where the recursion failed.
    pub node: usize,
    /// Vector separating `ri K*` from the hull of the children's `W` there.
    pub separating: Vec<Rational>,
    /// Increments `θ_t − θ_{t−1}`.
    pub x: NodeMap<Vec<Rational>>,
    pub theta: AdaptedVector,
    /// First depth at which an increment of the liquidated strategy (final
    /// holdings sold off) leaves `K ∩ (−K)`.
    pub m: Option<usize>,
    /// Disposal at depth `m`; the increments already include it, so it is zero.
    pub eps: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertificateOutcome {
    Found(ArbitrageCertificate),
    /// No strict arbitrage against `Π` itself was found.
    Failed {
        node: usize,
        separating: Vec<Rational>,
    },
}

/// Self-financing (`θ_t − θ_{t−1} ∈ −K_t`, `θ_{−1} = 0`) with `θ_T ≥ 0` on
/// every leaf and `θ_T ≠ 0` on some leaf.
pub fn verify_arbitrage(m: &BidAskMarket, theta: &AdaptedVector) -> bool {
    let tree = &m.tree;
    for n in 0..tree.len() {
        let Some(t) = theta.get(n) else { return false };
        if t.len() != m.dim {
            return false;
        }
        let prev = match tree.node(n).parent {
            Some(p) => theta.get(p).unwrap().clone(),
            None => zeros(m.dim),
        };
        if !m.cones[n].k.contains(&sub(&prev, t)) {
            return false;
        }
    }
    let leaves: Vec<&Vec<Rational>> = tree.leaves().map(|l| theta.get(l).unwrap()).collect();
    leaves.iter().all(|t| t.iter().all(|v| !v.is_negative()))
        && leaves.iter().any(|t| !is_zero_vec(t))
}

/// A vector `h ∈ K` with `⟨h, y⟩ ≤ 0` on the children's `W`, maximizing the
/// total slack over both generator sets within the box `|h_i| ≤ 1`.
fn separating_vector(m: &BidAskMarket, w: &NodeMap<FaceForm>, n: usize) -> Result<Vec<Rational>> {
    let d = m.dim;
    let mut b = SystemBuilder::new(d);
    let h: Vec<Expr> = (0..d).map(|i| vec![(i, Rational::one())]).collect();
    for i in 0..d {
        b.row(vec![(i, Rational::one())], Rel::Le, Rational::one());
        b.row(vec![(i, -Rational::one())], Rel::Le, Rational::one());
    }
    b.in_cone(&h, &m.cones[n].k);
    let mut obj = zeros(d);
    let ks = &m.cones[n].kstar_gens;
    for g in ks.rays() {
        obj = crate::rational::add(&obj, g);
    }
    for &c in m.tree.children(n) {
        let g = w.get(c).unwrap().to_gen()?;
        for v in g.points().iter().chain(g.rays()) {
            let e: Expr = (0..d).map(|i| (i, v[i].clone())).collect();
            b.row(e, Rel::Le, Rational::zero());
            obj = sub(&obj, v);
        }
        for l in g.lineality() {
            let e: Expr = (0..d).map(|i| (i, l[i].clone())).collect();
            b.row(e, Rel::Eq, Rational::zero());
        }
    }
    let opt = b.finish().optimize(&obj);
    match (opt.value, opt.witness) {
        (OptValue::Finite(_), Some(h)) => Ok(primitive(&h)),
        _ => Err(Error::internal("separation LP has no optimum")),
    }
}

/// Searches for a strict arbitrage supported on `scope` (a subtree). The
/// total of final holdings is maximized under the normalization `≤ 1`, then
/// the increments are made as small as possible in `ℓ¹`.
fn strict_arbitrage(m: &BidAskMarket, scope: &[usize]) -> Option<NodeMap<Vec<Rational>>> {
    let tree = &m.tree;
    let d = m.dim;
    let k = scope.len();
    let pos = |n: usize| scope.iter().position(|&s| s == n);
    let xv = |j: usize, i: usize| j * d + i;
    let uv = |j: usize, i: usize| (k + j) * d + i;
    let leaves: Vec<usize> = scope.iter().copied().filter(|&n| tree.is_leaf(n)).collect();
    let holdings = |l: usize| -> Vec<Expr> {
        let path: Vec<usize> = tree.path(l).into_iter().filter_map(pos).collect();
        (0..d)
            .map(|i| path.iter().map(|&j| (xv(j, i), Rational::one())).collect())
            .collect()
    };
    let mut base = SystemBuilder::new(2 * k * d);
    for (j, &n) in scope.iter().enumerate() {
        let x: Vec<Expr> = (0..d).map(|i| vec![(xv(j, i), Rational::one())]).collect();
        base.in_cone(&x, &m.cones[n].minus_k);
    }
    let mut total = Expr::new();
    for &l in &leaves {
        for e in holdings(l) {
            let negated: Expr = e.iter().map(|(v, c)| (*v, -c)).collect();
            base.row(negated, Rel::Le, Rational::zero());
            total.extend(e);
        }
    }
    let mut first = base.clone();
    first.row(total.clone(), Rel::Le, Rational::one());
    let mut obj = zeros(2 * k * d);
    for (v, c) in &total {
        obj[*v] += c;
    }
    let best = match first.finish().optimize(&obj).value {
        OptValue::Finite(v) if v.is_positive() => v,
        _ => return None,
    };
    let mut second = base;
    second.row(total, Rel::Eq, best);
    let mut cost = zeros(2 * k * d);
    for j in 0..k {
        for i in 0..d {
            second.row(
                vec![(xv(j, i), Rational::one()), (uv(j, i), -Rational::one())],
                Rel::Le,
                Rational::zero(),
            );
            second.row(
                vec![(xv(j, i), -Rational::one()), (uv(j, i), -Rational::one())],
                Rel::Le,
                Rational::zero(),
            );
            cost[uv(j, i)] = Rational::one();
        }
    }
    let sol = second.finish().minimize(&cost).witness?;
    let mut flat: Vec<Rational> = sol[..k * d].to_vec();
    flat = primitive(&flat);
    Some(NodeMap::from_fn(tree.len(), |n| {
        Some(match pos(n) {
            Some(j) => flat[j * d..(j + 1) * d].to_vec(),
            None => zeros(d),
        })
    }))
}

/// Best-effort construction of a strict arbitrage when robust no-arbitrage
/// fails. Any returned certificate has passed [`verify_arbitrage`].
pub fn arbitrage_certificate(m: &BidAskMarket) -> Result<CertificateOutcome> {
    let rep = check_nar(m)?;
    let Some(&node) = rep.failing.first() else {
        return Err(Error::precondition("robust no-arbitrage holds"));
    };
    let separating = separating_vector(m, &rep.w, node)?;
    let tree = &m.tree;
    let x = strict_arbitrage(m, &tree.subtree(node))
        .or_else(|| strict_arbitrage(m, &tree.subtree(tree.root())));
    let Some(x) = x else {
        return Ok(CertificateOutcome::Failed { node, separating });
    };
    let mut theta: AdaptedVector = NodeMap::new(tree.len());
    for n in 0..tree.len() {
        let prev = match tree.node(n).parent {
            Some(p) => theta.get(p).unwrap().clone(),
            None => zeros(m.dim),
        };
        theta.set(n, crate::rational::add(&prev, x.get(n).unwrap()));
    }
    let liquidated = |n: usize| -> Vec<Rational> {
        let xn = x.get(n).unwrap();
        if tree.is_leaf(n) {
            sub(xn, theta.get(n).unwrap())
        } else {
            xn.clone()
        }
    };
    let depth_m = (0..=tree.horizon()).find(|&t| {
        tree.at_depth(t)
            .any(|n| !m.cones[n].in_lineality(&liquidated(n)))
    });
    if !verify_arbitrage(m, &theta) {
        return Ok(CertificateOutcome::Failed { node, separating });
    }
    Ok(CertificateOutcome::Found(ArbitrageCertificate {
        node,
        separating,
        x,
        theta,
        m: depth_m,
        eps: zeros(m.dim),
    }))
}

/// Limits for [`krs_condition_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeGuard {
    pub max_nodes: usize,
    pub max_dim: usize,
}

impl Default for SizeGuard {
    /// Horizon 2, binary branching, two currencies.
    fn default() -> Self {
        SizeGuard {
            max_nodes: 7,
            max_dim: 2,
        }
    }
}

/// Decides whether every adapted `x_t ∈ −K_t` with `Σ x_t = 0` on every path
/// has `x_t ∈ K_t ∩ (−K_t)`, by one LP that maximizes the total distance of
/// the increments from the lineality spaces.
pub fn krs_condition_oracle(m: &BidAskMarket, guard: SizeGuard) -> Result<bool> {
    let tree = &m.tree;
    if tree.len() > guard.max_nodes || m.dim > guard.max_dim {
        return Err(Error::SizeGuard(format!(
            "{} nodes and {} currencies exceed the limits {} and {}",
            tree.len(),
            m.dim,
            guard.max_nodes,
            guard.max_dim
        )));
    }
    let d = m.dim;
    let width = tree.len() * d;
    let mut lp = LinearProgram::new(width);
    let row = |n: usize, a: &[Rational]| {
        let mut c = zeros(width);
        c[n * d..(n + 1) * d].clone_from_slice(a);
        c
    };
    for n in 0..tree.len() {
        for r in m.cones[n].minus_k.to_faces().rows() {
            let cmp = if r.rel == Rel::Eq { Cmp::Eq } else { Cmp::Le };
            lp.add(row(n, &r.a), cmp, Rational::zero());
        }
        for y in m.cones[n].kstar_gens.rays() {
            for (o, yi) in lp.objective[n * d..(n + 1) * d].iter_mut().zip(y) {
                *o -= yi;
            }
        }
    }
    for l in tree.leaves() {
        let path = tree.path(l);
        for i in 0..d {
            let e: Vec<_> = path.iter().map(|&n| (n * d + i, Rational::one())).collect();
            lp.add_sparse(&e, Cmp::Eq, Rational::zero());
        }
    }
    // the objective is nonnegative on the feasible cone; cap it at 1
    lp.add(lp.objective.clone(), Cmp::Le, Rational::one());
    match lp.maximize() {
        LpOutcome::Optimal { value, .. } => Ok(value.is_zero()),
        _ => Err(Error::internal("KRS LP without a finite optimum")),
    }
}

/// `(d+1)`-dimensional set `{(x, y) : x ∈ ri K*, y = ⟨ζ, x⟩}` (or `y` free).
fn graph_over(ri_kstar: &FaceForm, zeta: Option<&[Rational]>, extra: &[&[Rational]]) -> FaceForm {
    let d = ri_kstar.dim();
    let mut rows: Vec<Row> = ri_kstar
        .rows()
        .iter()
        .map(|r| {
            let mut a = r.a.clone();
            a.push(Rational::zero());
            Row::new(a, r.rel, r.b.clone())
        })
        .collect();
    for z in zeta.into_iter().chain(extra.iter().copied()) {
        let mut a = z.to_vec();
        a.push(-Rational::one());
        rows.push(Row::new(a, Rel::Eq, Rational::zero()));
    }
    FaceForm::new(d + 1, rows).expect("rows have width d+1")
}

fn endowment_problem(
    m: &BidAskMarket,
    zeta0: Option<&[Rational]>,
    zeta_t: &NodeMap<Vec<Rational>>,
) -> Result<SelectionProblem> {
    let tree = &m.tree;
    let d = m.dim;
    for l in tree.leaves() {
        match zeta_t.get(l) {
            Some(z) if z.len() == d => {}
            _ => {
                return Err(Error::invalid(format!(
                    "leaf {}: terminal endowment missing or of wrong size",
                    tree.id(l)
                )))
            }
        }
    }
    if zeta0.is_some_and(|z| z.len() != d) {
        return Err(Error::invalid("initial endowment has the wrong size"));
    }
    let v = NodeMap::from_fn(tree.len(), |n| {
        let ri = &m.cones[n].ri_kstar;
        let mut extra: Vec<&[Rational]> = Vec::new();
        if tree.is_leaf(n) {
            extra.push(zeta_t.get(n).unwrap());
        }
        let own = if n == tree.root() { zeta0 } else { None };
        Some(graph_over(ri, own, &extra))
    });
    SelectionProblem::new(tree.clone(), v, NodeMap::new(tree.len()), d + 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndowmentReport {
    pub ok: bool,
    pub process: Option<ConsistentPriceProcess>,
}

fn require_nar(m: &BidAskMarket) -> Result<()> {
    if check_nar(m)?.nar {
        Ok(())
    } else {
        Err(Error::precondition("robust no-arbitrage fails"))
    }
}

/// Whether `ζ₀` can be exchanged into `ζ_T` (the selection problem built on
/// the graphs of the two endowments); when it can, a consistent price
/// process with `⟨ζ₀, Z₀⟩ = E⟨ζ_T, Z_T⟩` is returned.
pub fn endowment_check(
    m: &BidAskMarket,
    zeta0: &[Rational],
    zeta_t: &NodeMap<Vec<Rational>>,
) -> Result<EndowmentReport> {
    require_nar(m)?;
    let tree = &m.tree;
    let d = m.dim;
    let res = solve(&endowment_problem(m, Some(zeta0), zeta_t)?)?;
    if !res.solvable() {
        return Ok(EndowmentReport {
            ok: false,
            process: None,
        });
    }
    let xi: AdaptedVector = res.xi.map(|_, x| x[..d].to_vec());
    let z_process = xi.map(|n, x| {
        let z = res.z.get(n).unwrap();
        x.iter().map(|v| v * z).collect()
    });
    let failures = check_consistent(m, &z_process);
    if !failures.is_empty() {
        return Err(Error::internal(failures.join("; ")));
    }
    let lhs = dot(zeta0, z_process.get(tree.root()).unwrap());
    let rhs: Rational = tree
        .leaves()
        .map(|l| tree.path_prob(l) * dot(zeta_t.get(l).unwrap(), z_process.get(l).unwrap()))
        .sum();
    if lhs != rhs {
        return Err(Error::internal("endowment identity fails"));
    }
    Ok(EndowmentReport {
        ok: true,
        process: Some(ConsistentPriceProcess {
            z_process,
            xi,
            density: res.z,
        }),
    })
}

/// `ri W₀` of the endowment recursion with the initial graph constraint
/// dropped, in `ℝ^{d+1}`. `ζ₀` passes [`endowment_check`] exactly when the
/// graph of `⟨ζ₀, ·⟩` over `ri K₀*` meets this set.
pub fn endowment_set_description(
    m: &BidAskMarket,
    zeta_t: &NodeMap<Vec<Rational>>,
) -> Result<FaceForm> {
    require_nar(m)?;
    let res = backward_recursion(&endowment_problem(m, None, zeta_t)?)?;
    let w0 = &res.w(m.tree.root()).faces;
    if w0.is_empty() {
        return Ok(FaceForm::empty(m.dim + 1));
    }
    w0.relative_interior()
}

/// Membership test used against [`endowment_set_description`].
pub fn graph_meets(m: &BidAskMarket, set: &FaceForm, zeta0: &[Rational]) -> bool {
    let g = graph_over(&m.cones[m.tree.root()].ri_kstar, Some(zeta0), &[]);
    !g.intersect(set).expect("same dimension").is_empty()
}
