//! Linear programming over any [`Scalar`].
//!
//! The workhorse is a dense two-phase tableau simplex. Over exact rationals
//! it always uses Bland's rule, which guarantees termination and makes every
//! run pivot identically. Large exact problems are first solved in `f64` to
//! find a candidate optimal basis; the basis is then certified exactly
//! (primal and dual feasibility checked in rational arithmetic) and, if the
//! certificate fails, repaired with exact revised-simplex pivots.

use std::cmp::Ordering;

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::linalg::{solve_sparse_square, Matrix};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub struct LpProblem<T> {
    direction: Direction,
    objective: Vec<T>,
    eq_rows: Vec<Vec<T>>,
    eq_rhs: Vec<T>,
    le_rows: Vec<Vec<T>>,
    le_rhs: Vec<T>,
    /// `None` means the variable is free.
    lower_bounds: Vec<Option<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { value: T, point: Vec<T> },
    Infeasible,
    Unbounded,
}

impl<T> LpOutcome<T> {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    Bland,
    /// Most negative reduced cost, falling back to Bland after a run of degenerate pivots.
    Dantzig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Tableau for small problems, float-guided certification for large exact ones.
    Auto,
    Tableau,
    FloatGuided,
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub max_iterations: u64,
    pub strategy: Strategy,
    /// Problems with more tableau cells than this use the float-guided path under `Auto`.
    pub guided_threshold: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { max_iterations: 1_000_000, strategy: Strategy::Auto, guided_threshold: 40_000 }
    }
}

impl<T: Scalar> LpProblem<T> {
    /// A problem over `objective.len()` variables, all with lower bound zero.
    pub fn new(direction: Direction, objective: Vec<T>) -> Self {
        let n = objective.len();
        LpProblem {
            direction,
            objective,
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            le_rows: Vec::new(),
            le_rhs: Vec::new(),
            lower_bounds: vec![Some(T::zero()); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    fn check_row(&self, row: &[T]) -> Result<()> {
        if row.len() != self.num_vars() {
            return Err(Error::DimensionMismatch(format!(
                "constraint has {} coefficients, problem has {} variables",
                row.len(),
                self.num_vars()
            )));
        }
        Ok(())
    }

    pub fn add_eq(&mut self, row: Vec<T>, rhs: T) -> Result<()> {
        self.check_row(&row)?;
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        Ok(())
    }

    pub fn add_le(&mut self, row: Vec<T>, rhs: T) -> Result<()> {
        self.check_row(&row)?;
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
        Ok(())
    }

    pub fn add_ge(&mut self, row: Vec<T>, rhs: T) -> Result<()> {
        self.add_le(row.into_iter().map(|x| -x).collect(), -rhs)
    }

    /// Sets the lower bound of a variable; `None` makes it free.
    pub fn set_lower_bound(&mut self, var: usize, bound: Option<T>) -> Result<()> {
        if var >= self.num_vars() {
            return Err(Error::DimensionMismatch(format!("no variable {var}")));
        }
        self.lower_bounds[var] = bound;
        Ok(())
    }

    pub fn eq_matrix(&self) -> Matrix<T> {
        Matrix::from_fn(self.eq_rows.len(), self.num_vars(), |i, j| self.eq_rows[i][j].clone())
    }

    pub fn eq_rhs(&self) -> &[T] {
        &self.eq_rhs
    }

    pub fn le_matrix(&self) -> Matrix<T> {
        Matrix::from_fn(self.le_rows.len(), self.num_vars(), |i, j| self.le_rows[i][j].clone())
    }

    pub fn le_rhs(&self) -> &[T] {
        &self.le_rhs
    }

    pub fn lower_bounds(&self) -> &[Option<T>] {
        &self.lower_bounds
    }

    /// Evaluates the objective at a point.
    pub fn objective_value(&self, point: &[T]) -> T {
        crate::linalg::dot(&self.objective, point)
    }

    /// Exact (or tolerance-aware, for floats) feasibility check of a point.
    pub fn is_feasible(&self, point: &[T]) -> bool {
        point.len() == self.num_vars()
            && self.eq_rows.iter().zip(&self.eq_rhs).all(|(r, b)| crate::linalg::dot(r, point).eq_tol(b))
            && self
                .le_rows
                .iter()
                .zip(&self.le_rhs)
                .all(|(r, b)| crate::linalg::dot(r, point).cmp_tol(b) != Ordering::Greater)
            && self
                .lower_bounds
                .iter()
                .zip(point)
                .all(|(l, x)| l.as_ref().is_none_or(|l| x.cmp_tol(l) != Ordering::Less))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> LpProblem<U> {
        let mv = |v: &Vec<T>| v.iter().map(&f).collect::<Vec<U>>();
        LpProblem {
            direction: self.direction,
            objective: mv(&self.objective),
            eq_rows: self.eq_rows.iter().map(mv).collect(),
            eq_rhs: mv(&self.eq_rhs),
            le_rows: self.le_rows.iter().map(mv).collect(),
            le_rhs: mv(&self.le_rhs),
            lower_bounds: self.lower_bounds.iter().map(|b| b.as_ref().map(&f)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    /// Original variable with coefficient +1 or -1 (free variables split in two).
    Structural {
        var: usize,
        negated: bool,
    },
    Slack,
    Artificial,
}

/// `min cost·x  s.t.  A x = rhs, x >= 0, rhs >= 0`, with an identity starting basis.
#[derive(Debug, Clone)]
struct StandardForm<T> {
    rows: usize,
    columns: Vec<Vec<(usize, T)>>,
    kinds: Vec<ColumnKind>,
    rhs: Vec<T>,
    cost: Vec<T>,
    initial_basis: Vec<usize>,
}

impl<T: Scalar> StandardForm<T> {
    fn build(p: &LpProblem<T>) -> Self {
        let n = p.num_vars();
        let mut columns: Vec<Vec<(usize, T)>> = Vec::new();
        let mut kinds = Vec::new();
        let mut cost = Vec::new();
        let sign = if p.direction == Direction::Maximize { -T::one() } else { T::one() };
        let all_rows: Vec<&Vec<T>> = p.eq_rows.iter().chain(p.le_rows.iter()).collect();
        let m = all_rows.len();
        let mut rhs: Vec<T> = p.eq_rhs.iter().chain(p.le_rhs.iter()).cloned().collect();
        for j in 0..n {
            let col: Vec<(usize, T)> =
                all_rows.iter().enumerate().filter(|(_, r)| !r[j].is_zero()).map(|(i, r)| (i, r[j].clone())).collect();
            match &p.lower_bounds[j] {
                Some(l) => {
                    if !l.is_zero() {
                        for (i, a) in &col {
                            rhs[*i] = rhs[*i].clone() - a.clone() * l.clone();
                        }
                    }
                    columns.push(col);
                    kinds.push(ColumnKind::Structural { var: j, negated: false });
                    cost.push(sign.clone() * p.objective[j].clone());
                }
                None => {
                    let neg: Vec<(usize, T)> = col.iter().map(|(i, a)| (*i, -a.clone())).collect();
                    columns.push(col);
                    kinds.push(ColumnKind::Structural { var: j, negated: false });
                    cost.push(sign.clone() * p.objective[j].clone());
                    columns.push(neg);
                    kinds.push(ColumnKind::Structural { var: j, negated: true });
                    cost.push(-(sign.clone() * p.objective[j].clone()));
                }
            }
        }
        let mut flip = vec![false; m];
        for (i, b) in rhs.iter_mut().enumerate() {
            if b.is_negative_tol() {
                flip[i] = true;
                *b = -b.clone();
            }
        }
        for col in columns.iter_mut() {
            for (i, a) in col.iter_mut() {
                if flip[*i] {
                    *a = -a.clone();
                }
            }
        }
        let mut initial_basis = vec![usize::MAX; m];
        for i in p.eq_rows.len()..m {
            let coef = if flip[i] { -T::one() } else { T::one() };
            columns.push(vec![(i, coef)]);
            kinds.push(ColumnKind::Slack);
            cost.push(T::zero());
            if !flip[i] {
                initial_basis[i] = columns.len() - 1;
            }
        }
        for (i, slot) in initial_basis.iter_mut().enumerate() {
            if *slot == usize::MAX {
                columns.push(vec![(i, T::one())]);
                kinds.push(ColumnKind::Artificial);
                cost.push(T::zero());
                *slot = columns.len() - 1;
            }
        }
        StandardForm { rows: m, columns, kinds, rhs, cost, initial_basis }
    }

    fn is_artificial(&self, j: usize) -> bool {
        self.kinds[j] == ColumnKind::Artificial
    }

    fn recover_point(&self, p: &LpProblem<T>, values: &[T]) -> Vec<T> {
        let mut point: Vec<T> = p.lower_bounds.iter().map(|b| b.clone().unwrap_or_else(T::zero)).collect();
        for (j, kind) in self.kinds.iter().enumerate() {
            if let ColumnKind::Structural { var, negated } = kind {
                if values[j].is_zero() {
                    continue;
                }
                point[*var] = if *negated {
                    point[*var].clone() - values[j].clone()
                } else {
                    point[*var].clone() + values[j].clone()
                };
            }
        }
        point
    }
}

struct Tableau<T> {
    a: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    ncols: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    fn new(sf: &StandardForm<T>) -> Self {
        let ncols = sf.columns.len();
        let mut a = vec![vec![T::zero(); ncols]; sf.rows];
        for (j, col) in sf.columns.iter().enumerate() {
            for (i, v) in col {
                a[*i][j] = v.clone();
            }
        }
        Tableau { a, rhs: sf.rhs.clone(), basis: sf.initial_basis.clone(), ncols }
    }

    fn pivot(&mut self, r: usize, c: usize, z: &mut [T], z_rhs: &mut T) {
        let inv = T::one() / self.a[r][c].clone();
        for x in self.a[r].iter_mut() {
            if !x.is_zero() {
                *x = x.clone() * inv.clone();
            }
        }
        self.a[r][c] = T::one();
        self.rhs[r] = self.rhs[r].clone() * inv;
        let prow = std::mem::take(&mut self.a[r]);
        let nz: Vec<usize> = (0..self.ncols).filter(|&j| !prow[j].is_zero()).collect();
        let prhs = self.rhs[r].clone();
        for i in 0..self.a.len() {
            if i == r || self.a[i][c].is_zero() {
                continue;
            }
            let f = self.a[i][c].clone();
            let row = &mut self.a[i];
            for &j in &nz {
                row[j] = row[j].clone() - f.clone() * prow[j].clone();
                if !T::is_exact() && row[j].is_zero_tol() {
                    row[j] = T::zero();
                }
            }
            row[c] = T::zero();
            self.rhs[i] = self.rhs[i].clone() - f * prhs.clone();
            if !T::is_exact() && self.rhs[i].is_zero_tol() {
                self.rhs[i] = T::zero();
            }
        }
        if !z[c].is_zero() {
            let f = z[c].clone();
            for &j in &nz {
                z[j] = z[j].clone() - f.clone() * prow[j].clone();
            }
            z[c] = T::zero();
            *z_rhs = z_rhs.clone() - f * prhs;
        }
        self.a[r] = prow;
        self.basis[r] = c;
    }

    /// Reduced-cost row and (negated) objective value for the current basis.
    fn pricing_row(&self, cost: &[T]) -> (Vec<T>, T) {
        let mut z = cost.to_vec();
        let mut z_rhs = T::zero();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (j, x) in self.a[r].iter().enumerate() {
                if !x.is_zero() {
                    z[j] = z[j].clone() - cb.clone() * x.clone();
                }
            }
            z_rhs = z_rhs - cb.clone() * self.rhs[r].clone();
        }
        (z, z_rhs)
    }

    fn run(
        &mut self,
        cost: &[T],
        allowed: &dyn Fn(usize) -> bool,
        rule: PivotRule,
        budget: &mut u64,
    ) -> Result<PhaseEnd> {
        let (mut z, mut z_rhs) = self.pricing_row(cost);
        let mut bland = rule == PivotRule::Bland;
        let mut degenerate_run = 0u32;
        loop {
            let entering = if bland {
                (0..self.ncols).find(|&j| allowed(j) && z[j].is_negative_tol())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..self.ncols {
                    if allowed(j) && z[j].is_negative_tol() && best.is_none_or(|b| z[j] < z[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else {
                return Ok(PhaseEnd::Optimal);
            };
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.a.len() {
                let a = &self.a[r][c];
                if !a.is_positive_tol() {
                    continue;
                }
                let ratio = self.rhs[r].clone() / a.clone();
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => match ratio.cmp_tol(&bratio) {
                        Ordering::Less => Some((r, ratio)),
                        Ordering::Equal if self.basis[r] < self.basis[br] => Some((r, ratio)),
                        _ => Some((br, bratio)),
                    },
                };
            }
            let Some((r, ratio)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            if *budget == 0 {
                return Err(Error::IterationLimit(0));
            }
            *budget -= 1;
            if ratio.is_zero_tol() {
                degenerate_run += 1;
                if degenerate_run > 50 {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c, &mut z, &mut z_rhs);
        }
    }
}

/// Result of the tableau path in standard-form coordinates.
struct StandardSolution<T> {
    basis: Vec<usize>,
    values: Vec<T>,
}

enum StandardOutcome<T> {
    Optimal(StandardSolution<T>),
    Infeasible,
    Unbounded,
}

fn solve_tableau<T: Scalar>(sf: &StandardForm<T>, max_iterations: u64) -> Result<StandardOutcome<T>> {
    let rule = if T::is_exact() { PivotRule::Bland } else { PivotRule::Dantzig };
    let mut t = Tableau::new(sf);
    let mut budget = max_iterations;
    let limit = |e: Error| match e {
        Error::IterationLimit(_) => Error::IterationLimit(max_iterations),
        other => other,
    };
    let has_artificial = sf.kinds.contains(&ColumnKind::Artificial);
    if has_artificial {
        let phase1: Vec<T> = (0..t.ncols).map(|j| if sf.is_artificial(j) { T::one() } else { T::zero() }).collect();
        t.run(&phase1, &|_| true, rule, &mut budget).map_err(limit)?;
        let infeasibility: T = t
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| sf.is_artificial(b))
            .fold(T::zero(), |acc, (r, _)| acc + t.rhs[r].clone());
        if infeasibility.is_positive_tol() {
            return Ok(StandardOutcome::Infeasible);
        }
        // Drive remaining artificials out; rows where that is impossible are redundant.
        for r in 0..t.a.len() {
            if !sf.is_artificial(t.basis[r]) {
                continue;
            }
            if let Some(c) = (0..t.ncols).find(|&j| !sf.is_artificial(j) && !t.a[r][j].is_zero_tol()) {
                let mut z = vec![T::zero(); t.ncols];
                let mut zr = T::zero();
                t.pivot(r, c, &mut z, &mut zr);
            }
        }
    }
    match t.run(&sf.cost, &|j| !sf.is_artificial(j), rule, &mut budget).map_err(limit)? {
        PhaseEnd::Unbounded => Ok(StandardOutcome::Unbounded),
        PhaseEnd::Optimal => {
            let mut values = vec![T::zero(); t.ncols];
            for (r, &b) in t.basis.iter().enumerate() {
                values[b] = t.rhs[r].clone();
            }
            Ok(StandardOutcome::Optimal(StandardSolution { basis: t.basis, values }))
        }
    }
}

fn finish<T: Scalar>(p: &LpProblem<T>, sf: &StandardForm<T>, values: &[T]) -> LpOutcome<T> {
    let point = sf.recover_point(p, values);
    let value = p.objective_value(&point);
    LpOutcome::Optimal { value, point }
}

/// Solves with default options.
pub fn lp_optimize<T: Scalar>(p: &LpProblem<T>) -> Result<LpOutcome<T>> {
    lp_optimize_with(p, &LpOptions::default())
}

pub fn lp_optimize_with<T: Scalar>(p: &LpProblem<T>, opts: &LpOptions) -> Result<LpOutcome<T>> {
    let sf = StandardForm::build(p);
    let cells = sf.rows * sf.columns.len();
    let guided = T::is_exact()
        && match opts.strategy {
            Strategy::Tableau => false,
            Strategy::FloatGuided => true,
            Strategy::Auto => cells > opts.guided_threshold,
        };
    if guided {
        if let Some(outcome) = float_guided(p, &sf, opts)? {
            return Ok(outcome);
        }
        warn!("float-guided basis could not be certified; falling back to exact tableau");
    }
    Ok(match solve_tableau(&sf, opts.max_iterations)? {
        StandardOutcome::Optimal(sol) => finish(p, &sf, &sol.values),
        StandardOutcome::Infeasible => LpOutcome::Infeasible,
        StandardOutcome::Unbounded => LpOutcome::Unbounded,
    })
}

/// Solves a float image of the problem, then certifies (and if needed repairs)
/// the resulting basis in exact arithmetic. `None` means fall back to the
/// exact tableau.
fn float_guided<T: Scalar>(p: &LpProblem<T>, sf: &StandardForm<T>, opts: &LpOptions) -> Result<Option<LpOutcome<T>>> {
    let mut fp: LpProblem<f64> = p.map(|x| x.to_f64_lossy());
    // Distinct tiny relaxations break the degeneracy that stalls the float pivots.
    for (i, b) in fp.le_rhs.iter_mut().enumerate() {
        *b += 1e-7 * (1.0 + ((i as u64).wrapping_mul(2_654_435_761) % 1000) as f64 / 1000.0);
    }
    let fsf = StandardForm::build(&fp);
    if fsf.columns.len() != sf.columns.len() || fsf.kinds != sf.kinds {
        // Row flips differ when a right-hand side is tiny; the bases are not comparable.
        return Ok(None);
    }
    let basis = match solve_tableau(&fsf, opts.max_iterations)? {
        StandardOutcome::Optimal(sol) => sol.basis,
        // Infeasibility/unboundedness must be established exactly.
        _ => return Ok(None),
    };
    debug!("float basis found; certifying {} rows exactly", sf.rows);
    Ok(revised_from_basis(sf, basis, opts.max_iterations)?.map(|values| finish(p, sf, &values)))
}

/// Exact revised simplex (Bland's rule) from a starting basis. Returns the
/// optimal standard-form values, or `None` if the basis is singular or
/// primal infeasible.
fn revised_from_basis<T: Scalar>(
    sf: &StandardForm<T>,
    mut basis: Vec<usize>,
    max_iterations: u64,
) -> Result<Option<Vec<T>>> {
    let m = sf.rows;
    let basis_rows = |basis: &[usize]| -> Vec<Vec<(usize, T)>> {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); m];
        for (k, &j) in basis.iter().enumerate() {
            for (i, v) in &sf.columns[j] {
                rows[*i].push((k, v.clone()));
            }
        }
        rows
    };
    let basis_cols =
        |basis: &[usize]| -> Vec<Vec<(usize, T)>> { basis.iter().map(|&j| sf.columns[j].clone()).collect() };
    let Some(mut xb) = solve_sparse_square(&basis_rows(&basis), &sf.rhs) else {
        return Ok(None);
    };
    if xb.iter().enumerate().any(|(k, v)| v.is_negative() || (sf.is_artificial(basis[k]) && !v.is_zero())) {
        return Ok(None);
    }
    let mut iterations = 0u64;
    loop {
        let cb: Vec<T> = basis.iter().map(|&j| sf.cost[j].clone()).collect();
        let Some(y) = solve_sparse_square(&basis_cols(&basis), &cb) else {
            return Ok(None);
        };
        let in_basis: std::collections::HashSet<usize> = basis.iter().copied().collect();
        let entering = (0..sf.columns.len()).find(|&j| {
            if in_basis.contains(&j) || sf.is_artificial(j) {
                return false;
            }
            let ya: T = sf.columns[j].iter().fold(T::zero(), |acc, (i, v)| acc + y[*i].clone() * v.clone());
            (sf.cost[j].clone() - ya).is_negative()
        });
        let Some(q) = entering else {
            let mut values = vec![T::zero(); sf.columns.len()];
            for (k, &j) in basis.iter().enumerate() {
                values[j] = xb[k].clone();
            }
            debug!("exact certificate after {iterations} repair pivots");
            return Ok(Some(values));
        };
        if iterations >= max_iterations {
            return Err(Error::IterationLimit(max_iterations));
        }
        iterations += 1;
        let mut aq = vec![T::zero(); m];
        for (i, v) in &sf.columns[q] {
            aq[*i] = v.clone();
        }
        let Some(w) = solve_sparse_square(&basis_rows(&basis), &aq) else {
            return Ok(None);
        };
        // Basic artificials sit at zero and must stay there.
        let mut leave: Option<(usize, T)> = None;
        for k in 0..m {
            let candidate = if sf.is_artificial(basis[k]) {
                (!w[k].is_zero()).then(T::zero)
            } else if w[k].is_positive() {
                Some(xb[k].clone() / w[k].clone())
            } else {
                None
            };
            if let Some(ratio) = candidate {
                leave = match leave {
                    None => Some((k, ratio)),
                    Some((bk, br)) => match ratio.cmp_tol(&br) {
                        Ordering::Less => Some((k, ratio)),
                        Ordering::Equal if basis[k] < basis[bk] => Some((k, ratio)),
                        _ => Some((bk, br)),
                    },
                };
            }
        }
        let Some((r, theta)) = leave else {
            // Unbounded direction; let the tableau path report it.
            return Ok(None);
        };
        for k in 0..m {
            if !w[k].is_zero() {
                xb[k] = xb[k].clone() - theta.clone() * w[k].clone();
            }
        }
        xb[r] = theta;
        basis[r] = q;
    }
}

/// Convenience: exact LP over rationals.
pub type RationalLp = LpProblem<Rational>;
