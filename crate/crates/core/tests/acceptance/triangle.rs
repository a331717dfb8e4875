//! Equivalence of the recursion verdict, the decomposition LP and the
//! existence of a strictly consistent price process on every two-currency
//! market with `T ≤ 2`, branching `≤ 2` and bid-ask entries in {1, 3/2, 2}.
//!
//! By default one representative per orbit of the relabelings that leave all
//! three verdicts invariant by definition (reordering siblings, swapping the
//! two currencies) is checked, and the invariance itself is spot-checked on
//! random non-representatives. `MSEL_FULL_TRIANGLE=1` checks every instance.

use std::collections::HashSet;

use msel_core::kabanov::{
    arbitrage_certificate, check_consistent, check_nar, consistent_price_process,
    krs_condition_oracle, verify_arbitrage, BidAskMarket, CertificateOutcome, SizeGuard,
};
use msel_core::rational::{int, rat};
use msel_core::tree::{NodeMap, RawNode, ScenarioTree};
use msel_core::{Error, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::Outcome;

/// Children counts per node in breadth-first order (leaves omitted).
type Shape = Vec<usize>;

fn shapes(full: bool) -> Vec<Shape> {
    let mut out = vec![vec![], vec![1], vec![2], vec![1, 1], vec![1, 2]];
    out.extend([vec![2, 1, 1], vec![2, 1, 2], vec![2, 2, 2]]);
    if full {
        out.push(vec![2, 2, 1]);
    }
    out
}

fn node_count(shape: &Shape) -> usize {
    1 + shape.iter().sum::<usize>()
}

/// Children of each node, breadth-first.
fn children(shape: &Shape) -> Vec<Vec<usize>> {
    let n = node_count(shape);
    let mut kids = vec![Vec::new(); n];
    let mut next = 1;
    for (i, &k) in shape.iter().enumerate() {
        kids[i] = (next..next + k).collect();
        next += k;
    }
    kids
}

fn tree_of(shape: &Shape) -> ScenarioTree {
    let kids = children(shape);
    let mut ids = vec![String::from("0"); kids.len()];
    let mut raw = vec![RawNode {
        id: "0".into(),
        parent: None,
        prob: int(1),
    }];
    for (p, ks) in kids.iter().enumerate() {
        for (j, &c) in ks.iter().enumerate() {
            ids[c] = format!("{}.{}", ids[p], j + 1);
            raw.push(RawNode {
                id: ids[c].clone(),
                parent: Some(ids[p].clone()),
                prob: rat(1, ks.len() as i64),
            });
        }
    }
    ScenarioTree::validate(&raw).expect("enumerated trees are valid")
}

const ENTRIES: [(i64, i64); 3] = [(1, 1), (3, 2), (2, 1)];

/// Matrix `k ∈ 0..9` has `π¹² = ENTRIES[k / 3]`, `π²¹ = ENTRIES[k % 3]`.
fn matrix(k: u8) -> Vec<Vec<Rational>> {
    let q = |(n, d): (i64, i64)| rat(n, d);
    vec![
        vec![int(1), q(ENTRIES[k as usize / 3])],
        vec![q(ENTRIES[k as usize % 3]), int(1)],
    ]
}

fn swapped(k: u8) -> u8 {
    (k % 3) * 3 + k / 3
}

/// Shape of a subtree: the shapes of its children.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Form(Vec<Form>);

/// Subtrees order by shape before entries, so sorting siblings never moves
/// a subtree into a slot of another shape.
#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Enc(Form, u8, Vec<Enc>);

fn encode(kids: &[Vec<usize>], a: &[u8], n: usize, sort: bool) -> Enc {
    let mut sub: Vec<Enc> = kids[n].iter().map(|&c| encode(kids, a, c, sort)).collect();
    if sort {
        sub.sort();
    }
    let form = Form(sub.iter().map(|e| e.0.clone()).collect());
    Enc(form, a[n], sub)
}

fn is_representative(kids: &[Vec<usize>], a: &[u8]) -> bool {
    let raw = encode(kids, a, 0, false);
    let canon = encode(kids, a, 0, true);
    if raw != canon {
        return false;
    }
    let b: Vec<u8> = a.iter().map(|&k| swapped(k)).collect();
    canon <= encode(kids, &b, 0, true)
}

/// The representative of the orbit of `a`.
fn representative(kids: &[Vec<usize>], a: &[u8]) -> Vec<u8> {
    fn flatten(kids: &[Vec<usize>], e: &Enc, n: usize, out: &mut [u8]) {
        out[n] = e.1;
        for (&c, s) in kids[n].iter().zip(&e.2) {
            flatten(kids, s, c, out);
        }
    }
    let b: Vec<u8> = a.iter().map(|&k| swapped(k)).collect();
    let e = encode(kids, a, 0, true).min(encode(kids, &b, 0, true));
    let mut out = vec![0; a.len()];
    flatten(kids, &e, 0, &mut out);
    out
}

fn bytes(e: &Enc, out: &mut Vec<u8>) {
    out.push(e.1);
    out.push(e.2.len() as u8);
    for s in &e.2 {
        bytes(s, out);
    }
}

fn orbit_key(kids: &[Vec<usize>], a: &[u8]) -> Vec<u8> {
    let b: Vec<u8> = a.iter().map(|&k| swapped(k)).collect();
    let e = encode(kids, a, 0, true).min(encode(kids, &b, 0, true));
    let mut out = Vec::with_capacity(2 * a.len());
    bytes(&e, &mut out);
    out
}

/// Every instance of the family lies in the orbit of exactly one enumerated
/// representative: returns (orbits met by the family, representatives).
fn coverage() -> (usize, usize, bool) {
    let mut orbits = HashSet::new();
    for shape in shapes(true) {
        let kids = children(&shape);
        for a in assignments(node_count(&shape)) {
            orbits.insert(orbit_key(&kids, &a));
        }
    }
    let mut reps = 0;
    let mut all_in = true;
    for shape in shapes(false) {
        let kids = children(&shape);
        for a in assignments(node_count(&shape)).filter(|a| is_representative(&kids, a)) {
            reps += 1;
            all_in &= orbits.contains(&orbit_key(&kids, &a));
        }
    }
    (orbits.len(), reps, all_in)
}

fn assignments(n: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..9usize.pow(n as u32)).map(move |mut x| {
        (0..n)
            .map(|_| {
                let k = (x % 9) as u8;
                x /= 9;
                k
            })
            .collect()
    })
}

fn market(tree: &ScenarioTree, a: &[u8]) -> BidAskMarket {
    let pi = NodeMap::from_fn(a.len(), |n| Some(matrix(a[n])));
    BidAskMarket::new(tree.clone(), pi).expect("entries ≥ 1 satisfy the triangle inequality")
}

#[derive(Default, Clone)]
struct Tally {
    instances: u64,
    nar: u64,
    disagreements: u64,
    bad_z: u64,
    certificates: u64,
    bad_certificates: u64,
    no_certificate: u64,
    /// Failed constructions where `Z ≡ (1, 1)` is a (non-strict) consistent
    /// price process, so no strict arbitrage exists to be certified.
    weakly_consistent: u64,
    errors: u64,
    first_problem: Option<String>,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.instances += o.instances;
        self.nar += o.nar;
        self.disagreements += o.disagreements;
        self.bad_z += o.bad_z;
        self.certificates += o.certificates;
        self.bad_certificates += o.bad_certificates;
        self.no_certificate += o.no_certificate;
        self.weakly_consistent += o.weakly_consistent;
        self.errors += o.errors;
        self.first_problem = self.first_problem.or(o.first_problem);
        self
    }

    fn problem(&mut self, what: String) {
        self.first_problem.get_or_insert(what);
    }
}

/// `(nar, krs, cpp)` verdicts of one instance, tallied.
fn check_one(tree: &ScenarioTree, a: &[u8]) -> (Tally, Option<bool>) {
    let mut t = Tally {
        instances: 1,
        ..Tally::default()
    };
    let m = market(tree, a);
    let tag = || format!("{a:?} on {} nodes", a.len());
    let nar = match check_nar(&m) {
        Ok(r) => r.nar,
        Err(e) => {
            t.errors += 1;
            t.problem(format!("check_nar {}: {e}", tag()));
            return (t, None);
        }
    };
    let krs = krs_condition_oracle(&m, SizeGuard::default());
    let cpp = match consistent_price_process(&m) {
        Ok(c) => {
            if !check_consistent(&m, &c.z_process).is_empty() {
                t.bad_z += 1;
                t.problem(format!("Z fails its checks: {}", tag()));
            }
            Ok(true)
        }
        Err(Error::Precondition(_)) => Ok(false),
        Err(e) => Err(e),
    };
    match (krs, cpp) {
        (Ok(k), Ok(c)) => {
            if k != nar || c != nar {
                t.disagreements += 1;
                t.problem(format!("nar={nar} krs={k} cpp={c}: {}", tag()));
            }
        }
        (k, c) => {
            t.errors += 1;
            t.problem(format!("{}: krs {:?}, cpp {:?}", tag(), k.err(), c.err()));
        }
    }
    if nar {
        t.nar += 1;
    } else {
        match arbitrage_certificate(&m) {
            Ok(CertificateOutcome::Found(c)) => {
                t.certificates += 1;
                if !verify_arbitrage(&m, &c.theta) {
                    t.bad_certificates += 1;
                    t.problem(format!("certificate rejected: {}", tag()));
                }
            }
            Ok(CertificateOutcome::Failed { .. }) => {
                t.no_certificate += 1;
                let ones = [int(1), int(1)];
                if (0..a.len()).all(|n| m.cones(n).kstar.contains(&ones)) {
                    t.weakly_consistent += 1;
                }
            }
            Err(e) => {
                t.errors += 1;
                t.problem(format!("certificate {}: {e}", tag()));
            }
        }
    }
    (t, Some(nar))
}

pub fn run() -> Outcome {
    let full = std::env::var("MSEL_FULL_TRIANGLE").is_ok_and(|v| v == "1");
    let mut total = Tally::default();
    let mut family = 0u64;
    let mut invariance_checked = 0u64;
    let mut invariance_broken = 0u64;
    let mut relabeled = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for shape in shapes(full) {
        let tree = tree_of(&shape);
        let kids = children(&shape);
        let n = tree.len();
        let todo: Vec<Vec<u8>> = assignments(n)
            .filter(|a| full || is_representative(&kids, a))
            .collect();
        let tally = todo
            .par_iter()
            .map(|a| check_one(&tree, a).0)
            .reduce(Tally::default, Tally::merge);
        total = total.merge(tally);
        if !full {
            // relabeled copies must get the representative's verdict
            for _ in 0..200 {
                let a: Vec<u8> = (0..n).map(|_| rng.gen_range(0..9)).collect();
                let r = representative(&kids, &a);
                let (ta, va) = check_one(&tree, &a);
                let (_, vr) = check_one(&tree, &r);
                relabeled = relabeled.merge(ta);
                invariance_checked += 1;
                if va != vr {
                    invariance_broken += 1;
                    relabeled.problem(format!(
                        "{a:?} got {va:?}, its representative {r:?} got {vr:?}"
                    ));
                }
            }
        }
    }
    for shape in shapes(true) {
        family += 9u64.pow(node_count(&shape) as u32);
    }
    let covered = if full {
        true
    } else {
        let (orbits, reps, all_in) = coverage();
        if !(all_in && orbits == reps) {
            relabeled.problem(format!("{reps} representatives for {orbits} orbits"));
        }
        all_in && orbits == reps
    };
    let clean = |t: &Tally| {
        t.disagreements == 0 && t.bad_z == 0 && t.bad_certificates == 0 && t.errors == 0
    };
    let pass = covered && clean(&total) && clean(&relabeled) && invariance_broken == 0;
    let scope = if full {
        format!("all {} instances", total.instances)
    } else {
        format!(
            "{} orbit representatives covering all {family} instances, \
             invariance spot-checked on {invariance_checked} relabelings",
            total.instances
        )
    };
    let mut detail = format!(
        "{scope}; {} NA^r, {} without; {} certificates verified, {} not constructed \
         ({} of them admit the weakly consistent Z = (1, 1), so no strict arbitrage exists)",
        total.nar,
        total.instances - total.nar,
        total.certificates - total.bad_certificates,
        total.no_certificate,
        total.weakly_consistent
    );
    if let Some(p) = total.first_problem.or(relabeled.first_problem) {
        detail.push_str(&format!("; first problem: {p}"));
    }
    Outcome { pass, detail }
}
