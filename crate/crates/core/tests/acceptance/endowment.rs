use msel_core::kabanov::{
    check_consistent, endowment_check, endowment_set_description, graph_meets, BidAskMarket,
};
use msel_core::rational::{dot, format_rational, int, rat};
use msel_core::tree::{NodeMap, RawNode, ScenarioTree};
use msel_core::Rational;
use num_traits::{One, Zero};

use crate::Outcome;

/// Two periods, two branches each, `π¹² = π²¹ = 2` everywhere.
fn constant_spread() -> BidAskMarket {
    let ids = ["r", "u", "d", "uu", "ud", "du", "dd"];
    let raw: Vec<RawNode> = ids
        .iter()
        .map(|id| RawNode {
            id: id.to_string(),
            parent: match id.len() {
                1 if *id == "r" => None,
                1 => Some("r".into()),
                _ => Some(id[..1].to_string()),
            },
            prob: if *id == "r" { int(1) } else { rat(1, 2) },
        })
        .collect();
    let tree = ScenarioTree::validate(&raw).unwrap();
    let pi = NodeMap::from_fn(tree.len(), |_| {
        Some(vec![vec![int(1), int(2)], vec![int(2), int(1)]])
    });
    BidAskMarket::new(tree, pi).unwrap()
}

/// With `ζ_T ≡ (1, 0)` the identity reads `a Z¹ + b Z² = Z¹` at the root,
/// and `Z² / Z¹` may be any ratio in `(1/2, 2)`.
fn expected(a: &Rational, b: &Rational) -> bool {
    if b.is_zero() {
        return a.is_one();
    }
    let r = (Rational::one() - a) / b;
    r > rat(1, 2) && r < int(2)
}

pub fn run() -> Outcome {
    let m = constant_spread();
    let tree = m.tree().clone();
    let zeta_t = NodeMap::from_fn(tree.len(), |n| {
        tree.is_leaf(n).then(|| vec![int(1), int(0)])
    });
    let mut problems = Vec::new();

    let decide = |z0: &[Rational], problems: &mut Vec<String>| -> bool {
        let rep = endowment_check(&m, z0, &zeta_t).expect("constant spread satisfies NA^r");
        if let Some(p) = &rep.process {
            let z = &p.z_process;
            if !check_consistent(&m, z).is_empty() {
                problems.push(format!("Z for {z0:?} is not consistent"));
            }
            let lhs = dot(z0, z.get(0).unwrap());
            let rhs: Rational = tree
                .leaves()
                .map(|l| tree.path_prob(l) * dot(zeta_t.get(l).unwrap(), z.get(l).unwrap()))
                .sum();
            if lhs != rhs {
                problems.push(format!("identity fails for {z0:?}: {lhs} vs {rhs}"));
            }
        }
        rep.ok
    };

    if !decide(&[int(1), int(0)], &mut problems) {
        problems.push("ζ₀ = (1, 0) is refused".into());
    }
    if decide(&[int(0), int(0)], &mut problems) {
        problems.push("ζ₀ = (0, 0) is accepted".into());
    }

    let set = endowment_set_description(&m, &zeta_t).unwrap();
    let grid: Vec<Rational> = (0..5).map(|k| rat(k, 4)).collect();
    let mut accepted = 0;
    for a in &grid {
        for b in &grid {
            let z0 = [a.clone(), b.clone()];
            let ok = decide(&z0, &mut problems);
            let meets = graph_meets(&m, &set, &z0);
            if ok {
                accepted += 1;
            }
            if ok != meets || ok != expected(a, b) {
                problems.push(format!(
                    "ζ₀ = ({}, {}): check {ok}, set {meets}, closed form {}",
                    format_rational(a),
                    format_rational(b),
                    expected(a, b)
                ));
            }
        }
    }
    Outcome::from_problems(
        format!(
            "trivial cases decided as stated; 5×5 grid: {accepted} accepted, set and check agree"
        ),
        problems,
    )
}
