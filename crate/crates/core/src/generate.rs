//! Reproducible random instances for fuzzing and the acceptance suite.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::format::{
    qs, BidAskPayload, ConeEntry, ConeSpec, InstanceFile, Kind, MarketPayload, MatrixEntry,
    NodeSpec, Payload, RowSpec, ScalarEntry, SelectionPayload, SetEntry, TreeSection, VectorEntry,
    FORMAT_VERSION, Q,
};
use crate::polyhedra::Rel;
use crate::rational::{int, rat, unit, zeros, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Selection,
    Market,
    Bidask,
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "selection" => Ok(Profile::Selection),
            "market" => Ok(Profile::Market),
            "bidask" => Ok(Profile::Bidask),
            _ => Err(format!("unknown profile {s:?}")),
        }
    }
}

/// Upper limits on the horizon, the number of children and the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub horizon: usize,
    pub branching: usize,
    pub dim: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            horizon: 4,
            branching: 3,
            dim: 3,
        }
    }
}

pub fn generate(seed: u64, profile: Profile) -> InstanceFile {
    generate_with(seed, profile, Caps::default())
}

pub fn generate_with(seed: u64, profile: Profile, caps: Caps) -> InstanceFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = random_shape(&mut rng, caps);
    let tree = TreeSection {
        nodes: shape
            .iter()
            .map(|n| NodeSpec {
                id: n.id.clone(),
                parent: n.parent.map(|p| shape[p].id.clone()),
                prob: Q(n.prob.clone()),
            })
            .collect(),
    };
    let (kind, payload) = match profile {
        Profile::Selection => (Kind::Selection, selection(&mut rng, &shape, caps)),
        Profile::Market => (Kind::Market, market(&mut rng, &shape, caps)),
        Profile::Bidask => (Kind::Bidask, bidask(&mut rng, &shape, caps)),
    };
    InstanceFile {
        version: FORMAT_VERSION,
        kind,
        tree,
        payload,
    }
}

struct GenNode {
    id: String,
    parent: Option<usize>,
    prob: Rational,
    children: Vec<usize>,
}

impl GenNode {
    fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Breadth-first tree with path-style ids (`0`, `0.1`, `0.1.2`, ...).
fn random_shape<R: Rng>(rng: &mut R, caps: Caps) -> Vec<GenNode> {
    let horizon = rng.gen_range(1..=caps.horizon.max(1)).min(caps.horizon);
    let mut nodes = vec![GenNode {
        id: "0".into(),
        parent: None,
        prob: int(1),
        children: vec![],
    }];
    let mut frontier = vec![0];
    for _ in 0..horizon {
        let mut next = Vec::new();
        for &p in &frontier {
            let k = match rng.gen_range(0..4) {
                0 => 1,
                1 | 2 => 2,
                _ => 3,
            }
            .min(caps.branching.max(1));
            let w: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=3)).collect();
            let total: i64 = w.iter().sum();
            for (j, wj) in w.into_iter().enumerate() {
                let id = format!("{}.{}", nodes[p].id, j + 1);
                nodes.push(GenNode {
                    id,
                    parent: Some(p),
                    prob: rat(wj, total),
                    children: vec![],
                });
                let c = nodes.len() - 1;
                nodes[p].children.push(c);
                next.push(c);
            }
        }
        frontier = next;
    }
    nodes
}

fn small<R: Rng>(rng: &mut R, lo: i64, hi: i64, den: i64) -> Rational {
    rat(rng.gen_range(lo..=hi), den)
}

fn random_vec<R: Rng>(rng: &mut R, d: usize, lo: i64, hi: i64, den: i64) -> Vec<Rational> {
    (0..d).map(|_| small(rng, lo, hi, den)).collect()
}

fn nonzero_vec<R: Rng>(rng: &mut R, d: usize) -> Vec<Rational> {
    loop {
        let v = random_vec(rng, d, -2, 2, 1);
        if v.iter().any(|x| *x != int(0)) {
            return v;
        }
    }
}

fn row(a: Vec<Rational>, rel: Rel, b: Rational) -> RowSpec {
    RowSpec {
        a: qs(&a),
        rel,
        b: Q(b),
    }
}

fn random_cone<R: Rng>(rng: &mut R, d: usize) -> ConeSpec {
    let whole = ConeSpec::Rows { rows: vec![] };
    match rng.gen_range(0..10) {
        0..=3 => whole,
        4 | 5 => ConeSpec::Gens {
            rays: (0..d).map(|i| qs(&unit(d, i))).collect(),
            lineality: vec![],
        },
        6..=8 => {
            let k = rng.gen_range(1..=d + 1);
            ConeSpec::Gens {
                rays: (0..k).map(|_| qs(&nonzero_vec(rng, d))).collect(),
                lineality: vec![],
            }
        }
        _ => ConeSpec::Gens {
            rays: vec![],
            lineality: vec![],
        },
    }
}

fn selection<R: Rng>(rng: &mut R, shape: &[GenNode], caps: Caps) -> Payload {
    let d = rng.gen_range(1..=caps.dim.max(1));
    let mut v = Vec::new();
    let mut c = Vec::new();
    for n in shape {
        let centre = random_vec(rng, d, -4, 4, 2);
        let mut rows = Vec::new();
        let open_box = |rng: &mut R, rows: &mut Vec<RowSpec>| {
            for (i, x) in centre.iter().enumerate() {
                let h = [rat(1, 2), int(1), int(2)].choose(rng).unwrap().clone();
                let e = unit(d, i);
                rows.push(row(e.clone(), Rel::Lt, x + &h));
                rows.push(row(e.iter().map(|x| -x).collect(), Rel::Lt, -(x - &h)));
            }
        };
        match rng.gen_range(0..10) {
            0..=3 => open_box(rng, &mut rows),
            4 | 5 => {
                for (i, x) in centre.iter().enumerate() {
                    rows.push(row(unit(d, i), Rel::Eq, x.clone()));
                }
            }
            6 | 7 => {
                let a = nonzero_vec(rng, d);
                let b = crate::rational::dot(&a, &centre);
                rows.push(row(a, Rel::Eq, b));
                open_box(rng, &mut rows);
            }
            8 => {
                let a = nonzero_vec(rng, d);
                let b = crate::rational::dot(&a, &centre) + int(1);
                rows.push(row(a, Rel::Lt, b));
            }
            _ => {}
        }
        v.push(SetEntry {
            node: n.id.clone(),
            rows,
        });
        if !n.is_leaf() {
            c.push(ConeEntry {
                node: n.id.clone(),
                cone: random_cone(rng, d),
            });
        }
    }
    Payload::Selection(SelectionPayload { dim: d, v, c })
}

fn market<R: Rng>(rng: &mut R, shape: &[GenNode], caps: Caps) -> Payload {
    let d = rng.gen_range(1..=caps.dim.max(1));
    let drifting = rng.gen_bool(0.5);
    let mut s: Vec<Vec<Rational>> = vec![zeros(d); shape.len()];
    s[0] = random_vec(rng, d, 2, 8, 2);
    for (i, n) in shape.iter().enumerate() {
        let k = n.children.len();
        if k == 0 {
            continue;
        }
        let drift = drifting && rng.gen_bool(0.5);
        let mut devs: Vec<Vec<Rational>> = (0..k).map(|_| random_vec(rng, d, -2, 2, 2)).collect();
        if !drift {
            let mut last = zeros(d);
            for dv in &devs[..k - 1] {
                last = crate::rational::sub(&last, dv);
            }
            devs[k - 1] = last;
            devs.shuffle(rng);
        } else {
            let push = small(rng, 1, 2, 2);
            let j = rng.gen_range(0..d);
            for dv in devs.iter_mut() {
                dv[j] += &push;
            }
        }
        for (&c, dv) in n.children.iter().zip(devs) {
            s[c] = crate::rational::add(&s[i], &dv);
        }
    }
    let mut b = Vec::new();
    let mut f = Vec::new();
    let strike = small(rng, 2, 8, 2);
    let call = rng.gen_bool(0.5);
    for (i, n) in shape.iter().enumerate() {
        if n.is_leaf() {
            let value = if call {
                let x = &s[i][0] - &strike;
                if x > int(0) {
                    x
                } else {
                    int(0)
                }
            } else {
                small(rng, 0, 8, 2)
            };
            f.push(ScalarEntry {
                node: n.id.clone(),
                value: Q(value),
            });
        } else {
            b.push(ConeEntry {
                node: n.id.clone(),
                cone: random_cone(rng, d),
            });
        }
    }
    let s = shape
        .iter()
        .zip(s)
        .map(|(n, v)| VectorEntry {
            node: n.id.clone(),
            value: qs(&v),
        })
        .collect();
    Payload::Market(MarketPayload { dim: d, s, b, f })
}

/// `π^{ij} = (m_j / m_i)(1 + s_{ij})`, then closed under `π^{ij} ≤ π^{ik} π^{kj}`.
fn bidask_matrix<R: Rng>(rng: &mut R, mids: &[Rational]) -> Vec<Vec<Rational>> {
    let d = mids.len();
    let spreads = [int(0), rat(1, 4), rat(1, 2)];
    let mut pi = vec![vec![int(1); d]; d];
    for i in 0..d {
        for j in 0..d {
            if i != j {
                let s = spreads.choose(rng).unwrap();
                pi[i][j] = &mids[j] / &mids[i] * (int(1) + s);
            }
        }
    }
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let via = &pi[i][k] * &pi[k][j];
                if via < pi[i][j] {
                    pi[i][j] = via;
                }
            }
        }
    }
    pi
}

fn bidask<R: Rng>(rng: &mut R, shape: &[GenNode], caps: Caps) -> Payload {
    let d = rng.gen_range(2.min(caps.dim.max(1))..=caps.dim.max(1));
    let levels = [rat(1, 2), int(1), int(2)];
    let mut mids: Vec<Vec<Rational>> = vec![vec![]; shape.len()];
    mids[0] = (0..d)
        .map(|i| {
            if i == 0 {
                int(1)
            } else {
                levels.choose(rng).unwrap().clone()
            }
        })
        .collect();
    for (i, n) in shape.iter().enumerate() {
        for &c in &n.children {
            let mut m = mids[i].clone();
            if d > 1 && rng.gen_bool(0.5) {
                let j = rng.gen_range(1..d);
                m[j] = levels.choose(rng).unwrap().clone();
            }
            mids[c] = m;
        }
    }
    let pi = shape
        .iter()
        .zip(&mids)
        .map(|(n, m)| MatrixEntry {
            node: n.id.clone(),
            matrix: bidask_matrix(rng, m).iter().map(|r| qs(r)).collect(),
        })
        .collect();
    let zeta0 = Some(qs(&random_vec(rng, d, 0, 2, 1)));
    let zeta_t = shape
        .iter()
        .filter(|n| n.is_leaf())
        .map(|n| VectorEntry {
            node: n.id.clone(),
            value: qs(&random_vec(rng, d, 0, 2, 1)),
        })
        .collect();
    Payload::Bidask(BidAskPayload {
        dim: d,
        pi,
        zeta0,
        zeta_t,
    })
}
