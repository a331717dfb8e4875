//! Fourier–Motzkin projection that keeps track of strict rows.

use num_traits::{Signed, Zero};

use super::{FaceForm, LiftedSystem, OptValue, Rel, Row};

pub(super) fn eliminate(sys: &LiftedSystem) -> FaceForm {
    let (d, m, rows) = sys.parts();
    if sys.is_empty() {
        return FaceForm::empty(d);
    }
    let width = d + m;
    let mut rows: Vec<Row> = rows.iter().map(Row::normalized).collect();

    for j in (d..width).rev() {
        if let Some(pos) = rows
            .iter()
            .position(|r| r.rel == Rel::Eq && !r.a[j].is_zero())
        {
            let e = rows.remove(pos);
            for r in rows.iter_mut() {
                if r.a[j].is_zero() {
                    continue;
                }
                let f = &r.a[j] / &e.a[j];
                for (x, y) in r.a.iter_mut().zip(&e.a) {
                    *x -= &f * y;
                }
                r.b -= &f * &e.b;
            }
        } else {
            let (with, without): (Vec<Row>, Vec<Row>) =
                rows.into_iter().partition(|r| !r.a[j].is_zero());
            let mut next = without;
            let pos: Vec<&Row> = with.iter().filter(|r| r.a[j].is_positive()).collect();
            let negs: Vec<&Row> = with.iter().filter(|r| r.a[j].is_negative()).collect();
            for p in &pos {
                for n in &negs {
                    let fp = -&n.a[j];
                    let fn_ = p.a[j].clone();
                    let a =
                        p.a.iter()
                            .zip(&n.a)
                            .map(|(x, y)| &fp * x + &fn_ * y)
                            .collect();
                    let b = &fp * &p.b + &fn_ * &n.b;
                    let rel = if p.rel == Rel::Lt || n.rel == Rel::Lt {
                        Rel::Lt
                    } else {
                        Rel::Le
                    };
                    next.push(Row::new(a, rel, b));
                }
            }
            rows = next;
        }
        match tidy(rows) {
            Some(r) => rows = drop_redundant(width, r),
            None => return FaceForm::empty(d),
        }
    }

    let rows = rows
        .into_iter()
        .map(|r| Row::new(r.a[..d].to_vec(), r.rel, r.b))
        .collect();
    FaceForm::new(d, rows).expect("projected rows have width d")
}

/// Normalizes, deduplicates, and drops trivially true rows. `None` when a
/// trivially false row is present.
fn tidy(rows: Vec<Row>) -> Option<Vec<Row>> {
    let mut out: Vec<Row> = Vec::with_capacity(rows.len());
    for r in rows {
        match r.is_trivial() {
            Some(true) => continue,
            Some(false) => return None,
            None => {}
        }
        let r = r.normalized();
        if let Some(same) = out.iter_mut().find(|o| o.a == r.a && o.b == r.b) {
            // keep the tighter relation
            if r.rel == Rel::Eq || (r.rel == Rel::Lt && same.rel == Rel::Le) {
                same.rel = r.rel;
            }
            continue;
        }
        out.push(r);
    }
    Some(out)
}

fn drop_redundant(width: usize, mut rows: Vec<Row>) -> Vec<Row> {
    let mut i = 0;
    while i < rows.len() {
        if rows[i].rel == Rel::Eq {
            i += 1;
            continue;
        }
        let others: Vec<Row> = rows
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, r)| r.clone())
            .collect();
        let sys = LiftedSystem::new(width, 0, others).expect("consistent width");
        let r = &rows[i];
        let opt = sys.optimize(&r.a);
        let implied = match opt.value {
            OptValue::Finite(v) => match r.rel {
                Rel::Le => v <= r.b,
                _ => v < r.b || (v == r.b && !opt.attained),
            },
            _ => false,
        };
        if implied {
            rows.remove(i);
        } else {
            i += 1;
        }
    }
    rows
}
