use msel_core::format::Instance;
use msel_core::generate::{generate, Profile};
use msel_core::selection::fuzz::{candidate_selector, lp_selector, random_measure};
use msel_core::selection::{solve, verify_parts, verify_selector, Check, SelectionProblem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::Outcome;

pub fn problem(seed: u64) -> SelectionProblem {
    match generate(seed, Profile::Selection).to_instance() {
        Ok(Instance::Selection(p)) => p,
        Ok(_) => panic!("seed {seed}: wrong kind"),
        Err(e) => panic!("seed {seed}: {e}"),
    }
}

pub fn end_to_end() -> Outcome {
    let mut solvable = 0;
    let mut candidates = 0;
    let mut problems = Vec::new();
    for seed in 0..200 {
        let p = problem(seed);
        let res = solve(&p).expect("solver");
        if res.solvable() {
            solvable += 1;
            let report = verify_selector(&res, &p);
            if !report.passed() {
                problems.push(format!("seed {seed}: {:?}", report.failures[0]));
            }
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..50 {
            let (xi, q) = candidate_selector(&p, &mut rng);
            candidates += 1;
            if verify_parts(&p, &xi, &q, None).passed() {
                problems.push(format!(
                    "seed {seed}: candidate {k} passes on an unsolvable instance"
                ));
            }
        }
    }
    Outcome::from_problems(
        format!(
            "{solvable} solvable instances verified, {candidates} candidates on {} unsolvable ones all rejected",
            200 - solvable
        ),
        problems,
    )
}

pub fn necessity() -> Outcome {
    let mut instances = 0;
    let mut selectors = 0;
    let mut from_random_q = 0;
    let mut problems = Vec::new();
    let mut seed = 0;
    while instances < 50 {
        let p = problem(seed);
        seed += 1;
        let res = solve(&p).expect("solver");
        if !res.solvable() {
            continue;
        }
        instances += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut valid = 0;
        let mut attempts = 0;
        while valid < 20 && attempts < 400 {
            attempts += 1;
            // random measures first; the solver's measure always admits one
            let random_q = attempts % 2 == 1;
            let q = if random_q {
                random_measure(p.tree(), &mut rng)
            } else {
                res.q.clone()
            };
            let Some(xi) = lp_selector(&p, &q, &mut rng) else {
                continue;
            };
            let report = verify_parts(&p, &xi, &q, Some(&res.w));
            if report.failures.iter().any(|f| f.check != Check::InW) {
                problems.push(format!("seed {}: fuzzed selector is not valid", seed - 1));
                continue;
            }
            valid += 1;
            if random_q {
                from_random_q += 1;
            }
            if let Some(f) = report.failures.first() {
                problems.push(format!(
                    "seed {}: valid selector outside W: {}",
                    seed - 1,
                    f.detail
                ));
            }
        }
        selectors += valid;
        if valid < 20 {
            problems.push(format!("seed {}: only {valid} valid selectors", seed - 1));
        }
    }
    Outcome::from_problems(
        format!(
            "{selectors} valid selectors on {instances} solvable instances \
             ({from_random_q} under random measures) all stay in W"
        ),
        problems,
    )
}
