//! Dense two-phase primal simplex over exact rationals.
//!
//! Pivoting follows Bland's rule over the fixed column order of the input
//! (structural columns first, then slack/surplus, then artificials), so the
//! optimizer returned for a given program is reproducible bit-for-bit.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub cmp: Cmp,
    pub rhs: Rational,
}

/// `maximize objective·x` subject to `constraints`; variable `i` is
/// sign-restricted to `x_i ≥ 0` iff `nonneg[i]`, otherwise free.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub nonneg: Vec<bool>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        value: Rational,
        x: Vec<Rational>,
    },
    /// `x` is feasible and `x + s·direction` stays feasible for every `s ≥ 0`
    /// while the objective grows without bound.
    Unbounded {
        x: Vec<Rational>,
        direction: Vec<Rational>,
    },
    Infeasible,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            nonneg: vec![false; num_vars],
            constraints: Vec::new(),
            objective: vec![Rational::zero(); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.nonneg.len()
    }

    /// Appends a variable and returns its index.
    pub fn add_var(&mut self, nonneg: bool) -> usize {
        self.nonneg.push(nonneg);
        self.objective.push(Rational::zero());
        for c in &mut self.constraints {
            c.coeffs.push(Rational::zero());
        }
        self.nonneg.len() - 1
    }

    pub fn add(&mut self, coeffs: Vec<Rational>, cmp: Cmp, rhs: Rational) {
        assert_eq!(coeffs.len(), self.num_vars(), "constraint width");
        self.constraints.push(Constraint { coeffs, cmp, rhs });
    }

    /// Sparse form of [`LinearProgram::add`].
    pub fn add_sparse(&mut self, terms: &[(usize, Rational)], cmp: Cmp, rhs: Rational) {
        let mut coeffs = vec![Rational::zero(); self.num_vars()];
        for (i, c) in terms {
            coeffs[*i] += c;
        }
        self.add(coeffs, cmp, rhs);
    }

    pub fn maximize(&self) -> LpOutcome {
        solve_exact(self)
    }

    pub fn minimize(&self) -> LpOutcome {
        let mut neg = self.clone();
        neg.objective = neg.objective.iter().map(|c| -c).collect();
        match neg.maximize() {
            LpOutcome::Optimal { value, x } => LpOutcome::Optimal { value: -value, x },
            other => other,
        }
    }
}

/// Scalars the tableau can run on. The machine-word field reports overflow
/// as `None`, in which case the whole solve restarts over big rationals.
trait Field: Clone + Ord + Sized {
    fn nil() -> Self;
    fn unit() -> Self;
    fn is_nil(&self) -> bool;
    fn is_unit(&self) -> bool;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn add(&self, o: &Self) -> Option<Self>;
    fn sub(&self, o: &Self) -> Option<Self>;
    fn mul(&self, o: &Self) -> Option<Self>;
    fn div(&self, o: &Self) -> Option<Self>;
    fn negate(&self) -> Option<Self>;
    fn from_rational(q: &Rational) -> Option<Self>;
    fn to_rational(&self) -> Rational;
}

impl Field for Rational {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_unit(&self) -> bool {
        One::is_one(self)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn div(&self, o: &Self) -> Option<Self> {
        Some(self / o)
    }
    fn negate(&self) -> Option<Self> {
        Some(-self)
    }
    fn from_rational(q: &Rational) -> Option<Self> {
        Some(q.clone())
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
}

type Small = Ratio<i64>;

impl Field for Small {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_unit(&self) -> bool {
        One::is_one(self)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
    fn add(&self, o: &Self) -> Option<Self> {
        self.checked_add(o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(o)
    }
    fn div(&self, o: &Self) -> Option<Self> {
        self.checked_div(o)
    }
    fn negate(&self) -> Option<Self> {
        <Small as Zero>::zero().checked_sub(self)
    }
    fn from_rational(q: &Rational) -> Option<Self> {
        Some(Small::new_raw(q.numer().to_i64()?, q.denom().to_i64()?))
    }
    fn to_rational(&self) -> Rational {
        Rational::new(BigInt::from(*self.numer()), BigInt::from(*self.denom()))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau<F> {
    rows: Vec<Vec<F>>,
    rhs: Vec<F>,
    basis: Vec<usize>,
    kinds: Vec<ColKind>,
    /// For each original variable: (positive column, optional negative column).
    var_cols: Vec<(usize, Option<usize>)>,
    reduced: Vec<F>,
    value: F,
}

enum Phase {
    Optimal,
    Unbounded(usize),
}

fn solve_exact(lp: &LinearProgram) -> LpOutcome {
    if let Some(out) = Tableau::<Small>::build(lp).and_then(|t| t.solve(lp)) {
        return out;
    }
    Tableau::<Rational>::build(lp)
        .and_then(|t| t.solve(lp))
        .expect("big rationals do not overflow")
}

impl<F: Field> Tableau<F> {
    fn build(lp: &LinearProgram) -> Option<Tableau<F>> {
        let mut kinds = Vec::new();
        let mut var_cols = Vec::with_capacity(lp.num_vars());
        for &nn in &lp.nonneg {
            let p = kinds.len();
            kinds.push(ColKind::Structural);
            if nn {
                var_cols.push((p, None));
            } else {
                kinds.push(ColKind::Structural);
                var_cols.push((p, Some(p + 1)));
            }
        }
        let n_struct = kinds.len();

        let n_slack = lp.constraints.iter().filter(|c| c.cmp != Cmp::Eq).count();
        let n_art = lp
            .constraints
            .iter()
            .filter(|c| {
                // after normalizing to a nonnegative right-hand side
                let flip = Signed::is_negative(&c.rhs);
                match c.cmp {
                    Cmp::Eq => true,
                    Cmp::Le => flip,
                    Cmp::Ge => !flip,
                }
            })
            .count();
        let ncols = n_struct + n_slack + n_art;
        kinds.extend(std::iter::repeat_n(ColKind::Slack, n_slack));
        kinds.extend(std::iter::repeat_n(ColKind::Artificial, n_art));

        let mut rows = Vec::with_capacity(lp.constraints.len());
        let mut rhs = Vec::with_capacity(lp.constraints.len());
        let mut basis = Vec::with_capacity(lp.constraints.len());
        let mut next_slack = n_struct;
        let mut next_art = n_struct + n_slack;
        for c in &lp.constraints {
            // Normalize to nonnegative right-hand sides.
            let flip = Signed::is_negative(&c.rhs);
            let cmp = match (c.cmp, flip) {
                (Cmp::Le, true) => Cmp::Ge,
                (Cmp::Ge, true) => Cmp::Le,
                (cmp, _) => cmp,
            };
            let mut row = vec![F::nil(); ncols];
            for (i, a) in c.coeffs.iter().enumerate() {
                if Zero::is_zero(a) {
                    continue;
                }
                let mut a = F::from_rational(a)?;
                if flip {
                    a = a.negate()?;
                }
                let (p, n) = var_cols[i];
                if let Some(n) = n {
                    row[n] = a.negate()?;
                }
                row[p] = a;
            }
            match cmp {
                Cmp::Le => {
                    row[next_slack] = F::unit();
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Cmp::Ge => {
                    row[next_slack] = F::unit().negate()?;
                    next_slack += 1;
                    row[next_art] = F::unit();
                    basis.push(next_art);
                    next_art += 1;
                }
                Cmp::Eq => {
                    row[next_art] = F::unit();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
            let b = F::from_rational(&c.rhs)?;
            rhs.push(if flip { b.negate()? } else { b });
        }

        Some(Tableau {
            rows,
            rhs,
            basis,
            kinds,
            var_cols,
            reduced: vec![F::nil(); ncols],
            value: F::nil(),
        })
    }

    fn ncols(&self) -> usize {
        self.kinds.len()
    }

    /// Installs column costs and recomputes reduced costs for the current basis.
    fn set_costs(&mut self, costs: &[F]) -> Option<()> {
        let mut reduced = costs.to_vec();
        let mut value = F::nil();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_nil() {
                continue;
            }
            for (j, a) in self.rows[i].iter().enumerate() {
                if !a.is_nil() {
                    reduced[j] = reduced[j].sub(&cb.mul(a)?)?;
                }
            }
            value = value.add(&cb.mul(&self.rhs[i])?)?;
        }
        self.reduced = reduced;
        self.value = value;
        Some(())
    }

    fn pivot(&mut self, r: usize, s: usize) -> Option<()> {
        let piv = self.rows[r][s].clone();
        if !piv.is_unit() {
            for a in self.rows[r].iter_mut() {
                if !a.is_nil() {
                    *a = a.div(&piv)?;
                }
            }
            self.rhs[r] = self.rhs[r].div(&piv)?;
        }
        let prow = self.rows[r].clone();
        let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_nil()).collect();
        let pb = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][s].clone();
            if f.is_nil() {
                continue;
            }
            for &j in &nz {
                self.rows[i][j] = self.rows[i][j].sub(&f.mul(&prow[j])?)?;
            }
            if !pb.is_nil() {
                self.rhs[i] = self.rhs[i].sub(&f.mul(&pb)?)?;
            }
        }
        let f = self.reduced[s].clone();
        if !f.is_nil() {
            for &j in &nz {
                self.reduced[j] = self.reduced[j].sub(&f.mul(&prow[j])?)?;
            }
            self.value = self.value.add(&f.mul(&pb)?)?;
        }
        self.basis[r] = s;
        Some(())
    }

    fn run(&mut self, allow_artificial: bool) -> Option<Phase> {
        loop {
            let entering = (0..self.ncols()).find(|&j| {
                (allow_artificial || self.kinds[j] != ColKind::Artificial)
                    && self.reduced[j].is_pos()
            });
            let Some(s) = entering else {
                return Some(Phase::Optimal);
            };
            let mut best: Option<(usize, F)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][s];
                if !a.is_pos() {
                    continue;
                }
                let ratio = self.rhs[i].div(a)?;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, s)?,
                None => return Some(Phase::Unbounded(s)),
            }
        }
    }

    fn column_values(&self) -> Vec<F> {
        let mut vals = vec![F::nil(); self.ncols()];
        for (i, &b) in self.basis.iter().enumerate() {
            vals[b] = self.rhs[i].clone();
        }
        vals
    }

    fn to_vars(&self, cols: &[F]) -> Vec<Rational> {
        self.var_cols
            .iter()
            .map(|&(p, n)| match n {
                Some(n) => cols[p].to_rational() - cols[n].to_rational(),
                None => cols[p].to_rational(),
            })
            .collect()
    }

    fn solve(mut self, lp: &LinearProgram) -> Option<LpOutcome> {
        let ncols = self.ncols();
        if self.kinds.contains(&ColKind::Artificial) {
            let minus_one = F::unit().negate()?;
            let costs: Vec<F> = self
                .kinds
                .iter()
                .map(|k| match k {
                    ColKind::Artificial => minus_one.clone(),
                    _ => F::nil(),
                })
                .collect();
            self.set_costs(&costs)?;
            match self.run(true)? {
                Phase::Optimal => {}
                Phase::Unbounded(_) => unreachable!("phase one is bounded above by zero"),
            }
            if self.value.is_neg() {
                return Some(LpOutcome::Infeasible);
            }
            // Drive zero-level artificials out of the basis; drop redundant rows.
            let mut i = 0;
            while i < self.rows.len() {
                if self.kinds[self.basis[i]] == ColKind::Artificial {
                    let col = (0..ncols).find(|&j| {
                        self.kinds[j] != ColKind::Artificial && !self.rows[i][j].is_nil()
                    });
                    match col {
                        Some(j) => self.pivot(i, j)?,
                        None => {
                            self.rows.remove(i);
                            self.rhs.remove(i);
                            self.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }

        let mut costs = vec![F::nil(); ncols];
        for (v, &(p, n)) in self.var_cols.iter().enumerate() {
            let c = F::from_rational(&lp.objective[v])?;
            if let Some(n) = n {
                costs[n] = c.negate()?;
            }
            costs[p] = c;
        }
        self.set_costs(&costs)?;
        Some(match self.run(false)? {
            Phase::Optimal => {
                let x = self.to_vars(&self.column_values());
                LpOutcome::Optimal {
                    value: self.value.to_rational(),
                    x,
                }
            }
            Phase::Unbounded(s) => {
                let x = self.to_vars(&self.column_values());
                let mut dir = vec![F::nil(); ncols];
                dir[s] = F::unit();
                for (i, &b) in self.basis.iter().enumerate() {
                    dir[b] = self.rows[i][s].negate()?;
                }
                LpOutcome::Unbounded {
                    x,
                    direction: self.to_vars(&dir),
                }
            }
        })
    }
}
