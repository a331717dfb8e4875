#![allow(dead_code)]

use msel_core::format::Instance;
use msel_core::generate::{generate_with, Caps, Profile};
use msel_core::kabanov::BidAskMarket;
use msel_core::polyhedra::{FaceForm, Rel, Row};
use msel_core::pricing::ConstrainedMarket;
use msel_core::rational::int;
use msel_core::selection::SelectionProblem;
use msel_core::Rational;
use proptest::prelude::*;

pub const SMALL: Caps = Caps {
    horizon: 2,
    branching: 3,
    dim: 2,
};

pub fn instance(seed: u64, profile: Profile) -> Instance {
    generate_with(seed, profile, SMALL)
        .to_instance()
        .unwrap_or_else(|e| panic!("seed {seed}: {e}"))
}

pub fn selection(seed: u64) -> SelectionProblem {
    match instance(seed, Profile::Selection) {
        Instance::Selection(p) => p,
        _ => unreachable!(),
    }
}

pub fn market(seed: u64) -> ConstrainedMarket {
    match instance(seed, Profile::Market) {
        Instance::Market(m) => m,
        _ => unreachable!(),
    }
}

pub fn bidask(seed: u64) -> BidAskMarket {
    match instance(seed, Profile::Bidask) {
        Instance::BidAsk { market, .. } => market,
        _ => unreachable!(),
    }
}

pub fn q() -> impl Strategy<Value = Rational> {
    (-3i64..=3).prop_map(int)
}

pub fn vector(d: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(q(), d)
}

pub fn rel() -> impl Strategy<Value = Rel> {
    prop_oneof![1 => Just(Rel::Eq), 4 => Just(Rel::Lt), 5 => Just(Rel::Le)]
}

pub fn faces(d: usize) -> impl Strategy<Value = FaceForm> {
    prop::collection::vec((vector(d), rel(), q()), 1..5).prop_map(move |rows| {
        let rows = rows
            .into_iter()
            .map(|(a, r, b)| Row::new(a, r, b))
            .collect();
        FaceForm::new(d, rows).unwrap()
    })
}

/// Points of `{-2, -3/2, …, 2}^d`.
pub fn grid(d: usize) -> Vec<Vec<Rational>> {
    let axis: Vec<Rational> = (-4..=4).map(|k| msel_core::rational::rat(k, 2)).collect();
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p: Vec<Rational>| {
                axis.iter().map(move |x| {
                    let mut p = p.clone();
                    p.push(x.clone());
                    p
                })
            })
            .collect();
    }
    out
}

/// No regression files: the instances are reproducible from their seeds.
pub fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}
