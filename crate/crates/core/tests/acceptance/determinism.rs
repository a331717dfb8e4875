//! Byte-identical output across processes, thread counts and warm or cold
//! memo tables.

use std::fmt::Write;
use std::process::Command;

use msel_core::format::Instance;
use msel_core::generate::{generate, Profile};
use msel_core::kabanov::{arbitrage_certificate, check_nar, consistent_price_process};
use msel_core::pricing::{check_na, price_bounds, superhedge_oracle, Side};
use msel_core::selection::solve;

use crate::Outcome;

pub const ENV: &str = "MSEL_DIGEST";

/// Every solver output on a fixed batch of generated instances, in debug form.
pub fn digest() -> String {
    let mut out = String::new();
    for profile in [Profile::Selection, Profile::Market, Profile::Bidask] {
        for seed in 0..10 {
            out.push_str(&generate(seed, profile).print());
        }
    }
    for seed in 0..40 {
        let p = crate::selection::problem(seed);
        writeln!(out, "{:?}", solve(&p).map(|r| (r.status, r.w, r.xi, r.q))).unwrap();
    }
    for seed in 0..40 {
        let m = crate::pricing::market(seed);
        let na = check_na(&m).unwrap();
        writeln!(out, "{na:?}").unwrap();
        if na.arbitrage_free {
            writeln!(out, "{:?}", price_bounds(&m)).unwrap();
        }
        for side in [Side::Super, Side::Sub] {
            writeln!(out, "{:?}", superhedge_oracle(&m, side)).unwrap();
        }
    }
    for seed in 0..15 {
        let Ok(Instance::BidAsk { market, .. }) = generate(seed, Profile::Bidask).to_instance()
        else {
            panic!("seed {seed}: not a bid-ask instance");
        };
        let nar = check_nar(&market).unwrap();
        writeln!(out, "{nar:?}").unwrap();
        if nar.nar {
            writeln!(out, "{:?}", consistent_price_process(&market)).unwrap();
        } else {
            writeln!(out, "{:?}", arbitrage_certificate(&market)).unwrap();
        }
    }
    out
}

fn child(threads: &str) -> Result<String, String> {
    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    let out = Command::new(exe)
        .env(ENV, "1")
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

pub fn run() -> Outcome {
    let here = digest();
    let mut problems = Vec::new();
    for threads in ["1", "3"] {
        match child(threads) {
            Ok(text) if text == here => {}
            Ok(text) => {
                let line = here
                    .lines()
                    .zip(text.lines())
                    .position(|(a, b)| a != b)
                    .unwrap_or(0);
                problems.push(format!(
                    "run with {threads} threads differs from line {}",
                    line + 1
                ));
            }
            Err(e) => problems.push(format!("child run failed: {e}")),
        }
    }
    Outcome::from_problems(
        format!(
            "{} bytes of solver output identical in-process and in two fresh processes (1 and 3 threads)",
            here.len()
        ),
        problems,
    )
}
