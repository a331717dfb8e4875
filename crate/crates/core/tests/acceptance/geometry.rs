use msel_core::polyhedra::{FaceForm, GenForm, PolyCone, Rel, Row};
use msel_core::rational::{add, dot, int, rat, scale, sub};
use msel_core::Rational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Outcome;

fn small<R: Rng>(rng: &mut R) -> Rational {
    int(rng.gen_range(-3..=3))
}

fn vector<R: Rng>(d: usize, rng: &mut R) -> Vec<Rational> {
    (0..d).map(|_| small(rng)).collect()
}

fn random_faces<R: Rng>(rng: &mut R) -> FaceForm {
    let d = rng.gen_range(1..=3);
    let rows = (0..rng.gen_range(1..=5))
        .map(|_| {
            let rel = match rng.gen_range(0..10) {
                0 => Rel::Eq,
                1..=4 => Rel::Lt,
                _ => Rel::Le,
            };
            Row::new(vector(d, rng), rel, small(rng))
        })
        .collect();
    FaceForm::new(d, rows).unwrap()
}

fn random_cone<R: Rng>(rng: &mut R) -> PolyCone {
    let d = rng.gen_range(1..=3);
    let rays = (0..rng.gen_range(0..=4)).map(|_| vector(d, rng)).collect();
    let lin = (0..rng.gen_range(0..=1)).map(|_| vector(d, rng)).collect();
    PolyCone::from_generators(d, rays, lin).unwrap()
}

/// Whether `x + εd` stays in the closed set `f` for some `ε > 0`.
fn can_step(f: &FaceForm, x: &[Rational], d: &[Rational]) -> bool {
    f.rows().iter().all(|r| {
        let slack = &r.b - dot(&r.a, x);
        let rate = dot(&r.a, d);
        match r.rel {
            Rel::Eq => rate.is_zero(),
            _ => slack.is_positive() || !rate.is_positive(),
        }
    })
}

/// `x ∈ ri P` iff `x ∈ P` and the segment from every generator through `x`
/// extends beyond `x`; a generator-side test independent of the row-side
/// implicit-equality detection.
fn in_ri_oracle(g: &GenForm, closed: &FaceForm, x: &[Rational]) -> bool {
    if !closed.contains(x) {
        return false;
    }
    g.points().iter().all(|v| can_step(closed, x, &sub(x, v)))
        && g.rays()
            .iter()
            .all(|r| can_step(closed, x, &scale(r, &int(-1))))
}

fn probes<R: Rng>(g: &GenForm, rng: &mut R) -> Vec<Vec<Rational>> {
    let d = g.dim();
    let mut out: Vec<Vec<Rational>> = g.points().to_vec();
    let bary = g
        .points()
        .iter()
        .fold(vec![int(0); d], |acc, p| add(&acc, p));
    let bary = scale(&bary, &rat(1, g.points().len() as i64));
    out.push(bary.clone());
    for r in g.rays() {
        out.push(add(&bary, r));
    }
    for v in g.points() {
        out.push(scale(&add(&bary, v), &rat(1, 2)));
    }
    for _ in 0..10 {
        out.push((0..d).map(|_| rat(rng.gen_range(-12..=12), 4)).collect());
    }
    out
}

pub fn run() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut problems = Vec::new();
    let mut round_trips = 0;
    let mut empties = 0;
    let mut probes_checked = 0;
    while round_trips < 100 {
        let f = random_faces(&mut rng);
        let cl = f.closure();
        if f.is_empty() {
            empties += 1;
            if f.relative_interior().is_ok() {
                problems.push(format!("ri of an empty set: {f:?}"));
            }
            continue;
        }
        round_trips += 1;
        let g = cl.to_gen().unwrap();
        if !g.to_faces().denotes_same(&cl) {
            problems.push(format!("round trip changes {cl:?}"));
        }
        if !g.inside_closed(&cl) {
            problems.push(format!("generators leave {cl:?}"));
        }
        let ri = f.relative_interior().unwrap();
        if !ri.closure().denotes_same(&cl) {
            problems.push(format!("cl ri ≠ cl for {f:?}"));
        }
        if !ri.relative_interior().unwrap().denotes_same(&ri) {
            problems.push(format!("ri ri ≠ ri for {f:?}"));
        }
        if !cl.relative_interior().unwrap().denotes_same(&ri) {
            problems.push(format!("ri cl ≠ ri for {f:?}"));
        }
        if !ri.is_subset_of(&f) {
            problems.push(format!("ri ⊄ set for {f:?}"));
        }
        for x in probes(&g, &mut rng) {
            probes_checked += 1;
            if ri.contains(&x) != in_ri_oracle(&g, &cl, &x) {
                problems.push(format!("ri membership of {x:?} in {f:?}"));
            }
        }
    }
    for _ in 0..100 {
        let c = random_cone(&mut rng);
        let back = c.polar().polar();
        if !back.to_faces().denotes_same(&c.to_faces()) {
            problems.push(format!("polar involution fails for {c:?}"));
        }
        if !c
            .conjugate()
            .to_faces()
            .denotes_same(&c.polar().negated().to_faces())
        {
            problems.push(format!("conjugate ≠ −polar for {c:?}"));
        }
    }
    Outcome::from_problems(
        format!(
            "100 round trips and ri/closure identities ({empties} empty draws skipped), \
             {probes_checked} ri-membership probes, 100 polar involutions"
        ),
        problems,
    )
}
