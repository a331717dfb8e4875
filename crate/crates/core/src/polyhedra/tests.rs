use super::*;
use crate::rational::{int, rat};

fn v(xs: &[i64]) -> Vec<Rational> {
    xs.iter().map(|&x| int(x)).collect()
}

fn row(a: &[i64], rel: Rel, b: Rational) -> Row {
    Row::new(v(a), rel, b)
}

fn unit_square() -> FaceForm {
    FaceForm::new(
        2,
        vec![
            row(&[-1, 0], Rel::Le, int(0)),
            row(&[1, 0], Rel::Le, int(1)),
            row(&[0, -1], Rel::Le, int(0)),
            row(&[0, 1], Rel::Le, int(1)),
        ],
    )
    .unwrap()
}

/// Solves a square system by Gauss–Jordan; `None` if singular.
#[allow(clippy::needless_range_loop)]
fn solve(mut m: Vec<Vec<Rational>>, mut rhs: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).find(|&r| !m[r][c].is_zero())?;
        m.swap(c, p);
        rhs.swap(c, p);
        for r in 0..n {
            if r != c && !m[r][c].is_zero() {
                let f = &m[r][c] / &m[c][c];
                for k in 0..n {
                    let t = &f * &m[c][k];
                    m[r][k] -= t;
                }
                let t = &f * &rhs[c];
                rhs[r] -= t;
            }
        }
    }
    Some((0..n).map(|i| &rhs[i] / &m[i][i]).collect())
}

/// Vertices by brute force over all d-subsets of rows.
fn brute_vertices(f: &FaceForm) -> Vec<Vec<Rational>> {
    let d = f.dim();
    let rows = f.rows();
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    if rows.len() < d {
        return out;
    }
    loop {
        let m = idx.iter().map(|&i| rows[i].a.clone()).collect();
        let b = idx.iter().map(|&i| rows[i].b.clone()).collect();
        if let Some(x) = solve(m, b) {
            if f.contains(&x) && !out.contains(&x) {
                out.push(x);
            }
        }
        // next combination
        let mut k = d;
        loop {
            if k == 0 {
                out.sort();
                return out;
            }
            k -= 1;
            if idx[k] < rows.len() - d + k {
                idx[k] += 1;
                for j in k + 1..d {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[test]
fn square_to_generators_matches_brute_force() {
    let sq = unit_square();
    let expected = brute_vertices(&sq);
    assert_eq!(
        expected,
        vec![v(&[0, 0]), v(&[0, 1]), v(&[1, 0]), v(&[1, 1])]
    );
    let g = sq.to_gen().unwrap();
    assert_eq!(g.points(), expected.as_slice());
    assert!(g.rays().is_empty() && g.lineality().is_empty());
    assert!(g.to_faces().denotes_same(&sq));
}

#[test]
fn halfline_to_faces() {
    let g = GenForm::new(2, vec![v(&[0, 0])], vec![v(&[1, 0])], vec![]).unwrap();
    let f = g.to_faces();
    let expected = FaceForm::new(
        2,
        vec![
            row(&[0, 1], Rel::Eq, int(0)),
            row(&[-1, 0], Rel::Le, int(0)),
        ],
    )
    .unwrap();
    assert!(f.denotes_same(&expected));
    assert_eq!(f.rows().len(), 2);
}

#[test]
fn contradictory_rows_give_empty_generators() {
    let f = FaceForm::new(
        1,
        vec![row(&[1], Rel::Le, int(0)), row(&[-1], Rel::Le, int(-1))],
    )
    .unwrap();
    assert!(f.to_gen().unwrap().is_empty());
}

#[test]
fn conversion_rejects_bad_input() {
    assert!(FaceForm::new(2, vec![row(&[1], Rel::Le, int(0))]).is_err());
    assert!(GenForm::new(2, vec![v(&[1, 2, 3])], vec![], vec![]).is_err());
    let open = FaceForm::new(1, vec![row(&[1], Rel::Lt, int(0))]).unwrap();
    assert!(open.to_gen().is_err());
}

#[test]
fn polar_of_orthant_and_origin() {
    let orthant = PolyCone::from_generators(2, vec![v(&[1, 0]), v(&[0, 1])], vec![]).unwrap();
    let p = orthant.polar().to_gens();
    assert_eq!(p.rays(), &[v(&[-1, 0]), v(&[0, -1])]);
    let origin = PolyCone::origin(3);
    let whole = origin.polar().to_gens();
    assert_eq!(whole.lineality().len(), 3);
    assert!(whole.rays().is_empty());
}

#[test]
fn polar_of_wedge_by_generator_inequalities() {
    let c = PolyCone::from_generators(2, vec![v(&[1, 1]), v(&[1, -1])], vec![]).unwrap();
    let p = c.polar().to_gens();
    let expected = vec![v(&[-1, -1]), v(&[-1, 1])];
    assert_eq!(p.rays(), expected.as_slice());
    // brute force: every candidate ray is nonpositive on every generator, and
    // each one is tight on exactly one generator (extremality in ℝ²)
    for r in &expected {
        let tight = [v(&[1, 1]), v(&[1, -1])]
            .iter()
            .filter(|g| {
                let s = dot(g, r);
                assert!(!s.is_positive());
                s.is_zero()
            })
            .count();
        assert_eq!(tight, 1);
    }
    // involution
    let back = c.polar().polar().to_gens();
    assert_eq!(back.rays(), c.to_gens().rays());
}

#[test]
fn relative_interior_examples() {
    let seg = FaceForm::new(
        2,
        vec![
            row(&[0, 1], Rel::Eq, int(0)),
            row(&[-1, 0], Rel::Le, int(0)),
            row(&[1, 0], Rel::Le, int(1)),
        ],
    )
    .unwrap();
    let ri = seg.relative_interior().unwrap();
    let rels: Vec<Rel> = ri.rows().iter().map(|r| r.rel).collect();
    assert_eq!(rels, vec![Rel::Eq, Rel::Lt, Rel::Lt]);

    let pt = FaceForm::new(
        2,
        vec![
            row(&[1, 0], Rel::Le, int(2)),
            row(&[-1, 0], Rel::Le, int(-2)),
            row(&[0, 1], Rel::Eq, int(3)),
        ],
    )
    .unwrap();
    let ri = pt.relative_interior().unwrap();
    assert!(ri.rows().iter().all(|r| r.rel == Rel::Eq));
    assert!(ri.contains(&v(&[2, 3])));

    let ri = unit_square().relative_interior().unwrap();
    assert!(ri.rows().iter().all(|r| r.rel == Rel::Lt));
    assert!(ri.closure().denotes_same(&unit_square()));

    assert!(matches!(
        FaceForm::empty(2).relative_interior(),
        Err(Error::EmptyInput(_))
    ));
}

#[test]
fn conv_union_examples() {
    let a = GenForm::point(vec![int(2)]);
    let b = GenForm::point(vec![rat(1, 2)]);
    let u = conv_union(&[a.clone(), b]).unwrap();
    assert_eq!(u.points(), &[vec![int(2)], vec![rat(1, 2)]]);
    let f = u.to_faces();
    assert!(f.contains(&[int(1)]) && f.contains(&[rat(1, 2)]) && !f.contains(&[int(3)]));
    assert_eq!(conv_union(std::slice::from_ref(&a)).unwrap(), a);

    let p = GenForm::point(v(&[0, 1]));
    let h = GenForm::new(2, vec![v(&[0, 0])], vec![v(&[1, 0])], vec![]).unwrap();
    let u = conv_union(&[p, h]).unwrap();
    assert_eq!(u.points(), &[v(&[0, 1]), v(&[0, 0])]);
    assert_eq!(u.rays(), &[v(&[1, 0])]);
    // membership oracle: 3-weight combinations lie inside, the three
    // generators survive as extreme elements after a round trip
    let hull = u.to_faces();
    for (l1, l2, s) in [
        (rat(1, 3), rat(2, 3), int(5)),
        (rat(1, 2), rat(1, 2), int(0)),
    ] {
        let x = vec![s.clone(), l1.clone()];
        assert!(hull.contains(&x), "{l2}");
    }
    let back = hull.to_gen().unwrap();
    assert_eq!(back.points(), &[v(&[0, 0]), v(&[0, 1])]);
    assert_eq!(back.rays(), &[v(&[1, 0])]);
}

#[test]
fn minkowski_sum_examples() {
    let origin = GenForm::point(v(&[0, 0])).closed_lifted();
    let ray = PolyCone::from_generators(2, vec![v(&[1, 0])], vec![]).unwrap();
    let s = origin.minkowski_sum_cone(&ray).unwrap().eliminate_aux();
    let expected = FaceForm::new(
        2,
        vec![
            row(&[0, 1], Rel::Eq, int(0)),
            row(&[-1, 0], Rel::Le, int(0)),
        ],
    )
    .unwrap();
    assert!(s.denotes_same(&expected));
    assert!(s.is_closed());

    // open segment (0,1)×{0} plus cone{(1,1)}; the expected rows come from
    // eliminating p and q by hand: x = p + t(1,1), 0 < p₁ < 1, p₂ = 0, t ≥ 0
    let seg = FaceForm::new(
        2,
        vec![
            row(&[0, 1], Rel::Eq, int(0)),
            row(&[-1, 0], Rel::Lt, int(0)),
            row(&[1, 0], Rel::Lt, int(1)),
        ],
    )
    .unwrap();
    let diag = PolyCone::from_generators(2, vec![v(&[1, 1])], vec![]).unwrap();
    let s = seg
        .lift()
        .minkowski_sum_cone(&diag)
        .unwrap()
        .eliminate_aux();
    let expected = FaceForm::new(
        2,
        vec![
            row(&[-1, 1], Rel::Lt, int(0)),
            row(&[1, -1], Rel::Lt, int(1)),
            row(&[0, -1], Rel::Le, int(0)),
        ],
    )
    .unwrap();
    assert!(s.denotes_same(&expected), "{s:?}");

    let zero = PolyCone::origin(2);
    let s = seg
        .lift()
        .minkowski_sum_cone(&zero)
        .unwrap()
        .eliminate_aux();
    assert!(s.denotes_same(&seg));
    // the same sum built from a constraint-form cone
    let diag_rows = PolyCone::from_rows(
        2,
        vec![
            row(&[1, -1], Rel::Eq, int(0)),
            row(&[-1, 0], Rel::Le, int(0)),
        ],
    )
    .unwrap();
    let s2 = seg
        .lift()
        .minkowski_sum_cone(&diag_rows)
        .unwrap()
        .eliminate_aux();
    assert!(s2.denotes_same(&expected));
}

fn open_triangle() -> LiftedSystem {
    GenForm::new(
        2,
        vec![v(&[2, 1]), v(&[1, 0]), vec![rat(1, 2), int(0)]],
        vec![],
        vec![],
    )
    .unwrap()
    .ri_lifted()
}

#[test]
fn intersect_examples() {
    let tri = open_triangle();
    let all = LiftedSystem::universe(2);
    let same = tri.intersect(&all).unwrap().eliminate_aux();
    assert!(same.denotes_same(&tri.eliminate_aux()));

    let pos = FaceForm::new(1, vec![row(&[-1], Rel::Lt, int(0))])
        .unwrap()
        .lift();
    let negv = FaceForm::new(1, vec![row(&[1], Rel::Lt, int(0))])
        .unwrap()
        .lift();
    assert!(pos.intersect(&negv).unwrap().is_empty());

    let line = FaceForm::new(2, vec![row(&[1, 0], Rel::Eq, int(1))])
        .unwrap()
        .lift();
    let cut = line.intersect(&tri).unwrap().eliminate_aux();
    let expected = FaceForm::new(
        2,
        vec![
            row(&[1, 0], Rel::Eq, int(1)),
            row(&[0, -1], Rel::Lt, int(0)),
            Row::new(v(&[0, 1]), Rel::Lt, rat(1, 3)),
        ],
    )
    .unwrap();
    assert!(cut.denotes_same(&expected), "{cut:?}");
}

#[test]
fn feasible_point_examples() {
    let open = FaceForm::new(
        1,
        vec![row(&[-1], Rel::Lt, int(0)), row(&[1], Rel::Lt, int(1))],
    )
    .unwrap()
    .lift();
    assert_eq!(open.feasible_point(), Some(vec![rat(1, 2)]));
    let none = FaceForm::new(
        1,
        vec![row(&[1], Rel::Lt, int(0)), row(&[-1], Rel::Lt, int(0))],
    )
    .unwrap()
    .lift();
    assert_eq!(none.feasible_point(), None);
    let ray = FaceForm::new(1, vec![row(&[-1], Rel::Le, int(0))])
        .unwrap()
        .lift();
    let x = ray.feasible_point().unwrap();
    assert!(!x[0].is_negative());
}

#[test]
fn optimize_examples() {
    let line = FaceForm::new(2, vec![row(&[1, 0], Rel::Eq, int(1))])
        .unwrap()
        .lift();
    let cut = line.intersect(&open_triangle()).unwrap();
    let o = cut.optimize(&v(&[0, 1]));
    assert_eq!(o.value, OptValue::Finite(rat(1, 3)));
    assert!(!o.attained && o.witness.is_none());

    let le5 = FaceForm::new(1, vec![row(&[1], Rel::Le, int(5))])
        .unwrap()
        .lift();
    let o = le5.optimize(&v(&[1]));
    assert_eq!(o.value, OptValue::Finite(int(5)));
    assert!(o.attained);
    assert_eq!(o.witness, Some(v(&[5])));

    let ray = FaceForm::new(1, vec![row(&[-1], Rel::Le, int(0))])
        .unwrap()
        .lift();
    let o = ray.optimize(&v(&[1]));
    assert_eq!(o.value, OptValue::PlusInfinity);
    assert!(!o.attained);
    assert_eq!(ray.minimize(&v(&[1])).value, OptValue::Finite(int(0)));

    assert_eq!(
        LiftedSystem::empty(1).optimize(&v(&[1])).value,
        OptValue::Infeasible
    );
}

#[test]
fn membership_examples() {
    let unit = FaceForm::new(
        1,
        vec![row(&[-1], Rel::Le, int(0)), row(&[1], Rel::Le, int(1))],
    )
    .unwrap()
    .lift();
    assert!(unit.contains(&[rat(1, 2)], Membership::RelativeInterior));
    assert!(!unit.contains(&[int(0)], Membership::RelativeInterior));
    assert!(unit.contains(&[int(0)], Membership::Set));

    // (1, 1/3) = w₁(2,1) + w₂(1,0) + w₃(1/2,0): w₁ = 1/3, w₂ = 1/3, w₃ = 1/3... solve:
    // 2w₁ + w₂ + w₃/2 = 1, w₁ = 1/3, w₁+w₂+w₃ = 1 → w₂ = 0, w₃ = 2/3
    let closed_tri = GenForm::new(
        2,
        vec![v(&[2, 1]), v(&[1, 0]), vec![rat(1, 2), int(0)]],
        vec![],
        vec![],
    )
    .unwrap()
    .closed_lifted();
    assert!(closed_tri.contains(&[int(1), rat(1, 3)], Membership::Set));
    assert!(!open_triangle().contains(&[int(1), rat(1, 3)], Membership::Set));
    assert!(open_triangle().contains(&[int(1), rat(1, 6)], Membership::Set));
    assert!(closed_tri.contains(&[int(1), rat(1, 6)], Membership::RelativeInterior));
}

#[test]
fn cone_helpers() {
    let c = PolyCone::from_generators(2, vec![v(&[1, 0])], vec![]).unwrap();
    assert!(c.contains(&v(&[3, 0])));
    assert!(!c.contains(&v(&[-1, 0])));
    let conj = c.conjugate();
    assert!(conj.contains(&v(&[1, 5])) && conj.contains(&v(&[0, -2])));
    assert!(!conj.contains(&v(&[-1, 0])));
    assert!(PolyCone::from_rows(2, vec![row(&[1, 0], Rel::Le, int(1))]).is_err());
    let prod = c.times_space(1);
    assert!(prod.contains(&v(&[1, 0, -7])));
    assert_eq!(prod.polar().to_gens().rays(), &[v(&[-1, 0, 0])]);
}
