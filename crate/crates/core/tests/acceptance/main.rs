//! Acceptance suite: one pass/fail line per criterion. `MSEL_CRITERION=k`
//! runs a single criterion.

mod determinism;
mod endowment;
mod geometry;
mod pricing;
mod selection;
mod triangle;

use std::time::Instant;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn from_problems(summary: String, problems: Vec<String>) -> Outcome {
        match problems.first() {
            None => Outcome {
                pass: true,
                detail: summary,
            },
            Some(p) => Outcome {
                pass: false,
                detail: format!("{summary}; {} problems, first: {p}", problems.len()),
            },
        }
    }
}

type Criterion = (usize, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 8] = [
    (1, "price bounds equal the hedging LP", pricing::duality),
    (2, "worked pricing examples", pricing::worked_examples),
    (3, "selection end to end", selection::end_to_end),
    (4, "valid selectors stay in W", selection::necessity),
    (5, "transaction-cost equivalence triangle", triangle::run),
    (6, "geometry kernel", geometry::run),
    (7, "endowment examples and grid", endowment::run),
    (8, "determinism", determinism::run),
];

fn main() {
    if std::env::var(determinism::ENV).is_ok() {
        print!("{}", determinism::digest());
        return;
    }
    let only: Option<usize> = std::env::var("MSEL_CRITERION")
        .ok()
        .and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (k, name, f) in CRITERIA {
        if only.is_some_and(|o| o != k) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {k} [{tag}] {name} ({:.1}s): {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
