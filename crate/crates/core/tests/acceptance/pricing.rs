use msel_core::format::Instance;
use msel_core::generate::{generate, Profile};
use msel_core::polyhedra::PolyCone;
use msel_core::pricing::{check_na, price_bounds, superhedge_oracle, ConstrainedMarket, Side};
use msel_core::rational::{format_rational, int, rat};
use msel_core::tree::{NodeMap, RawNode, ScenarioTree};
use msel_core::Rational;

use crate::Outcome;

pub fn market(seed: u64) -> ConstrainedMarket {
    match generate(seed, Profile::Market).to_instance() {
        Ok(Instance::Market(m)) => m,
        Ok(_) => panic!("seed {seed}: wrong kind"),
        Err(e) => panic!("seed {seed}: {e}"),
    }
}

fn show(v: &Option<Rational>) -> String {
    v.as_ref().map_or("∞".into(), format_rational)
}

pub fn duality() -> Outcome {
    let mut found = 0;
    let mut seed = 0;
    let mut infinite = 0;
    let mut problems = Vec::new();
    while found < 200 {
        let m = market(seed);
        seed += 1;
        if !check_na(&m)
            .expect("generated markets are valid")
            .arbitrage_free
        {
            continue;
        }
        found += 1;
        let iv = price_bounds(&m).expect("NA market").get(0).unwrap().clone();
        let sup = superhedge_oracle(&m, Side::Super).expect("oracle");
        let sub = superhedge_oracle(&m, Side::Sub).expect("oracle");
        if iv.upper.is_none() || iv.lower.is_none() {
            infinite += 1;
        }
        if iv.upper != sup.value || iv.lower != sub.value {
            problems.push(format!(
                "seed {}: bounds [{}, {}], oracle [{}, {}]",
                seed - 1,
                show(&iv.lower),
                show(&iv.upper),
                show(&sub.value),
                show(&sup.value)
            ));
        }
        for h in [&sup, &sub] {
            if let Some(c) = &h.cert {
                if !c.verify(&m) {
                    problems.push(format!("seed {}: hedge certificate rejected", seed - 1));
                }
            }
        }
    }
    Outcome::from_problems(
        format!("200 NA markets from seeds 0..{seed}, {infinite} with an infinite endpoint"),
        problems,
    )
}

fn one_period(s1: &[Rational], f: &[Rational], b: Option<PolyCone>) -> ConstrainedMarket {
    let k = s1.len();
    let mut raw = vec![RawNode {
        id: "root".into(),
        parent: None,
        prob: int(1),
    }];
    for i in 0..k {
        raw.push(RawNode {
            id: format!("c{i}"),
            parent: Some("root".into()),
            prob: rat(1, k as i64),
        });
    }
    let tree = ScenarioTree::validate(&raw).unwrap();
    let mut s = NodeMap::new(k + 1);
    let mut claim = NodeMap::new(k + 1);
    s.set(0, vec![int(1)]);
    for i in 0..k {
        s.set(i + 1, vec![s1[i].clone()]);
        claim.set(i + 1, f[i].clone());
    }
    let mut cones = NodeMap::new(k + 1);
    if let Some(b) = b {
        cones.set(0, b);
    }
    ConstrainedMarket::new(tree, s, cones, claim).unwrap()
}

struct Expect {
    name: &'static str,
    market: ConstrainedMarket,
    lower: Rational,
    upper: Rational,
    attained: (bool, bool),
    sup: Rational,
}

pub fn worked_examples() -> Outcome {
    let long_only = PolyCone::from_generators(1, vec![vec![int(1)]], vec![]).unwrap();
    let cases = [
        Expect {
            name: "binomial call",
            market: one_period(&[int(2), rat(1, 2)], &[int(1), int(0)], None),
            lower: rat(1, 3),
            upper: rat(1, 3),
            attained: (true, true),
            sup: rat(1, 3),
        },
        Expect {
            name: "trinomial call",
            market: one_period(
                &[int(2), int(1), rat(1, 2)],
                &[int(1), int(0), int(0)],
                None,
            ),
            lower: int(0),
            upper: rat(1, 3),
            attained: (false, false),
            sup: rat(1, 3),
        },
        Expect {
            name: "long-only put",
            market: one_period(&[int(2), rat(1, 2)], &[int(0), rat(1, 2)], Some(long_only)),
            lower: rat(1, 3),
            upper: rat(1, 2),
            attained: (true, false),
            sup: rat(1, 2),
        },
    ];
    let mut problems = Vec::new();
    let mut seen = Vec::new();
    for c in cases {
        let iv = price_bounds(&c.market).unwrap().get(0).unwrap().clone();
        let sup = superhedge_oracle(&c.market, Side::Super).unwrap().value;
        let open = |a: bool, l: &str, r: &str| if a { l.to_string() } else { r.to_string() };
        seen.push(format!(
            "{} {}{}, {}{}",
            c.name,
            open(iv.lower_attained, "[", "("),
            show(&iv.lower),
            show(&iv.upper),
            open(iv.upper_attained, "]", ")"),
        ));
        if iv.lower.as_ref() != Some(&c.lower)
            || iv.upper.as_ref() != Some(&c.upper)
            || (iv.lower_attained, iv.upper_attained) != c.attained
            || sup.as_ref() != Some(&c.sup)
        {
            problems.push(format!("{} differs (oracle {})", c.name, show(&sup)));
        }
    }
    Outcome::from_problems(seen.join("; "), problems)
}
