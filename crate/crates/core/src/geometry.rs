//! The polytope of dx-private posteriors, its vertices, and kernel mechanisms.
//!
//! A posterior `δ` is admissible iff `δ_x <= s(x,x')·δ_x'` for every ordered
//! tight pair. A vertex fixes `n-1` of these halfspaces as equalities. Each
//! tight halfspace links two coordinates, so a vertex corresponds to a
//! spanning tree of the tight-pair graph with an orientation on every edge:
//! a subset containing a cycle either is dependent or forces a coordinate,
//! and then (through connectivity) every coordinate, to zero.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{rank, solve_linear_system, IncrementalBasis, LinearSolution, Matrix};
use crate::lp::{lp_optimize, Direction, LpOutcome, LpProblem};
use crate::mechanisms::{uniform_prior, Channel, Hyper};
use crate::metrics::MetricSpace;
use crate::modular;
use crate::scalar::{Rational, Scalar};

pub const DEFAULT_VERTEX_LIMIT: u64 = 20_000_000;
pub const DEFAULT_KERNEL_LIMIT: u64 = 200_000_000;

/// `δ_x - factor·δ_x' <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace<T> {
    pub x: usize,
    pub x_prime: usize,
    pub factor: T,
}

impl<T: Scalar> Halfspace<T> {
    /// `factor·δ_x' - δ_x`; non-negative iff satisfied.
    pub fn slack(&self, delta: &[T]) -> T {
        self.factor.clone() * delta[self.x_prime].clone() - delta[self.x].clone()
    }

    fn row(&self, n: usize) -> Vec<T> {
        let mut r = vec![T::zero(); n];
        r[self.x] = T::one();
        r[self.x_prime] = -self.factor.clone();
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem<T> {
    n: usize,
    halfspaces: Vec<Halfspace<T>>,
}

impl<T: Scalar> ConstraintSystem<T> {
    /// One halfspace per orientation of each `(x, x', factor)` pair.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize, T)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("need at least one secret".into()));
        }
        let mut halfspaces = Vec::with_capacity(2 * pairs.len());
        for (a, b, f) in pairs {
            if *a >= n || *b >= n || a == b {
                return Err(Error::InvalidInput(format!("bad constraint pair ({a}, {b}) for {n} secrets")));
            }
            if f.cmp_tol(&T::one()) == std::cmp::Ordering::Less {
                return Err(Error::InvalidInput(format!("stretch factor {f} is below 1")));
            }
            halfspaces.push(Halfspace { x: *a, x_prime: *b, factor: f.clone() });
            halfspaces.push(Halfspace { x: *b, x_prime: *a, factor: f.clone() });
        }
        Ok(ConstraintSystem { n, halfspaces })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn halfspaces(&self) -> &[Halfspace<T>] {
        &self.halfspaces
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> ConstraintSystem<U> {
        ConstraintSystem {
            n: self.n,
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| Halfspace { x: h.x, x_prime: h.x_prime, factor: f(&h.factor) })
                .collect(),
        }
    }

    /// Whether `delta` is a distribution satisfying every halfspace.
    pub fn contains(&self, delta: &[T]) -> bool {
        delta.len() == self.n
            && delta.iter().all(|v| !v.is_negative_tol())
            && crate::scalar::sum(delta).eq_tol(&T::one())
            && self.halfspaces.iter().all(|h| !h.slack(delta).is_negative_tol())
    }

    /// Feasible, with the tight halfspaces and the simplex equation of full rank.
    pub fn is_vertex(&self, delta: &[T]) -> bool {
        if !self.contains(delta) {
            return false;
        }
        let mut rows: Vec<Vec<T>> =
            self.halfspaces.iter().filter(|h| h.slack(delta).is_zero_tol()).map(|h| h.row(self.n)).collect();
        rows.push(vec![T::one(); self.n]);
        rank(&rows).map(|r| r == self.n).unwrap_or(false)
    }
}

pub fn build_constraints(space: &MetricSpace) -> ConstraintSystem<Rational> {
    let pairs: Vec<(usize, usize, Rational)> =
        space.tight_pairs().iter().map(|&(a, b)| (a, b, space.stretch_at(a, b).clone())).collect();
    ConstraintSystem::from_pairs(space.len(), &pairs).expect("metric spaces yield valid constraints")
}

fn lex_sort<T: Scalar>(v: &mut Vec<Vec<T>>) {
    v.sort_by(|a, b| lex_cmp(a, b));
    v.dedup_by(|a, b| lex_cmp(a, b) == std::cmp::Ordering::Equal);
}

fn lex_cmp<T: Scalar>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(u, v)| u.cmp_tol(v)).find(|o| o.is_ne()).unwrap_or(a.len().cmp(&b.len()))
}

struct Budget {
    limit: u64,
    used: AtomicU64,
    exceeded: AtomicBool,
}

impl Budget {
    fn new(limit: u64) -> Self {
        Budget { limit, used: AtomicU64::new(0), exceeded: AtomicBool::new(false) }
    }

    /// Charges one unit; false once the budget is exhausted.
    fn charge(&self) -> bool {
        if self.used.fetch_add(1, AtomicOrdering::Relaxed) >= self.limit {
            self.exceeded.store(true, AtomicOrdering::Relaxed);
        }
        !self.exceeded.load(AtomicOrdering::Relaxed)
    }
}

/// Partial spanning forest: component id and relative weight per secret.
#[derive(Clone)]
struct Forest<T> {
    comp: Vec<usize>,
    weight: Vec<T>,
}

impl<T: Scalar> Forest<T> {
    /// Makes `h` tight by merging the component of `h.x` into that of `h.x_prime`.
    fn merge(&self, h: &Halfspace<T>) -> Option<Forest<T>> {
        let (cx, cy) = (self.comp[h.x], self.comp[h.x_prime]);
        if cx == cy {
            return None;
        }
        let scale = h.factor.clone() * self.weight[h.x_prime].clone() / self.weight[h.x].clone();
        let mut next = self.clone();
        for i in 0..next.comp.len() {
            if next.comp[i] == cx {
                next.comp[i] = cy;
                next.weight[i] = next.weight[i].clone() * scale.clone();
            }
        }
        Some(next)
    }

    /// Relative weights inside one component are final, so any violated
    /// halfspace there rules out every completion.
    fn consistent(&self, cs: &ConstraintSystem<T>, c: usize) -> bool {
        cs.halfspaces
            .iter()
            .all(|h| self.comp[h.x] != c || self.comp[h.x_prime] != c || !h.slack(&self.weight).is_negative_tol())
    }
}

pub fn enumerate_vertices<T: Scalar>(cs: &ConstraintSystem<T>) -> Result<Vec<Vec<T>>> {
    enumerate_vertices_with_limit(cs, DEFAULT_VERTEX_LIMIT)
}

/// All extreme points, sorted lexicographically. Fails with
/// [`Error::ResourceLimit`] when the search would visit more than `limit` subsets.
pub fn enumerate_vertices_with_limit<T: Scalar>(cs: &ConstraintSystem<T>, limit: u64) -> Result<Vec<Vec<T>>> {
    let n = cs.n;
    if n == 1 {
        return Ok(vec![vec![T::one()]]);
    }
    let m = cs.halfspaces.len();
    let budget = Budget::new(limit);
    let root = Forest { comp: (0..n).collect(), weight: vec![T::one(); n] };
    let mut found: Vec<Vec<T>> = (0..m)
        .into_par_iter()
        .flat_map_iter(|first| {
            let mut out = Vec::new();
            if let Some(f) = root.merge(&cs.halfspaces[first]) {
                let c = f.comp[cs.halfspaces[first].x_prime];
                if budget.charge() && f.consistent(cs, c) {
                    vertex_dfs(cs, &f, first + 1, n - 2, &budget, &mut out);
                }
            }
            out
        })
        .collect();
    if budget.exceeded.load(AtomicOrdering::Relaxed) {
        return Err(Error::ResourceLimit { what: "vertex enumeration subsets".into(), limit });
    }
    for v in &found {
        if v.iter().any(|x| !x.is_positive_tol()) || !cs.contains(v) {
            return Err(Error::Internal("enumerated vertex is not a positive feasible point".into()));
        }
    }
    lex_sort(&mut found);
    Ok(found)
}

fn vertex_dfs<T: Scalar>(
    cs: &ConstraintSystem<T>,
    forest: &Forest<T>,
    start: usize,
    remaining: usize,
    budget: &Budget,
    out: &mut Vec<Vec<T>>,
) {
    if remaining == 0 {
        let total = crate::scalar::sum(&forest.weight);
        let delta: Vec<T> = forest.weight.iter().map(|w| w.clone() / total.clone()).collect();
        if cs.contains(&delta) {
            out.push(delta);
        }
        return;
    }
    let m = cs.halfspaces.len();
    for k in start..m {
        if m - k < remaining {
            break;
        }
        let h = &cs.halfspaces[k];
        let Some(next) = forest.merge(h) else { continue };
        if !budget.charge() {
            return;
        }
        if next.consistent(cs, next.comp[h.x_prime]) {
            vertex_dfs(cs, &next, k + 1, remaining - 1, budget, out);
        }
    }
}

/// Reference enumeration: every `(n-1)`-subset of halfspaces is made tight
/// and solved together with `Σδ = 1`. Exponentially slower; used as a cross-check.
pub fn enumerate_vertices_by_subsets<T: Scalar>(cs: &ConstraintSystem<T>) -> Result<Vec<Vec<T>>> {
    let n = cs.n;
    if n == 1 {
        return Ok(vec![vec![T::one()]]);
    }
    let m = cs.halfspaces.len();
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n - 1).collect();
    if m < n - 1 {
        return Ok(out);
    }
    loop {
        let mut rows: Vec<Vec<T>> = idx.iter().map(|&k| cs.halfspaces[k].row(n)).collect();
        rows.push(vec![T::one(); n]);
        let mut rhs = vec![T::zero(); n - 1];
        rhs.push(T::one());
        if let LinearSolution::Unique(x) = solve_linear_system(&Matrix::from_rows(rows)?, &rhs)? {
            if cs.contains(&x) {
                out.push(x);
            }
        }
        // next combination in lexicographic order
        let mut i = n - 1;
        loop {
            if i == 0 {
                lex_sort(&mut out);
                return Ok(out);
            }
            i -= 1;
            if idx[i] < m - (n - 1 - i) {
                idx[i] += 1;
                for j in i + 1..n - 1 {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// A kernel: linearly independent vertices whose unique convex weights average to uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMechanism<T> {
    /// Indices into the vertex list the kernel was enumerated from, ascending.
    pub vertex_indices: Vec<usize>,
    pub hyper: Hyper<T>,
}

impl<T: Scalar> KernelMechanism<T> {
    pub fn channel(&self) -> Result<Channel<T>> {
        crate::mechanisms::from_hyper(&self.hyper)
    }
}

pub fn enumerate_kernels<T: Scalar>(vertices: &[Vec<T>], n: usize) -> Result<Vec<KernelMechanism<T>>> {
    enumerate_kernels_with_limit(vertices, n, DEFAULT_KERNEL_LIMIT)
}

/// Depth-first search over vertex subsets in index order. A subset whose
/// span contains the uniform vector is never extended: any independent
/// superset would represent it with a zero weight on the new vertex.
pub fn enumerate_kernels_with_limit<T: Scalar>(
    vertices: &[Vec<T>],
    n: usize,
    limit: u64,
) -> Result<Vec<KernelMechanism<T>>> {
    if vertices.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch(format!("vertices must have length {n}")));
    }
    let budget = Budget::new(limit);
    let (candidates, small) = match as_rationals(vertices) {
        Some(rv) => (residue_kernel_search(&rv, n, &budget), small_integer_images(&rv)),
        None => (basis_kernel_search(vertices, n, &budget), None),
    };
    if budget.exceeded.load(AtomicOrdering::Relaxed) {
        return Err(Error::ResourceLimit { what: "kernel enumeration subsets".into(), limit });
    }
    let uniform: Vec<T> = uniform_prior(n);
    let mut found = Vec::new();
    for idx in candidates {
        if let Some(ints) = &small {
            let cols: Vec<&[i128]> = idx.iter().map(|&i| ints[i].as_slice()).collect();
            if modular::solution_is_positive(&cols) == Some(false) {
                continue;
            }
        }
        let cols: Vec<&Vec<T>> = idx.iter().map(|&i| &vertices[i]).collect();
        let a = Matrix::from_fn(n, idx.len(), |x, j| cols[j][x].clone());
        let LinearSolution::Unique(w) = solve_linear_system(&a, &uniform)? else {
            return Err(Error::Internal("kernel candidate without unique weights".into()));
        };
        if w.iter().all(|x| x.is_positive_tol()) {
            let inners = cols.into_iter().cloned().collect();
            found.push(KernelMechanism { vertex_indices: idx, hyper: Hyper::new(w, inners)? });
        }
    }
    found.sort_by(|a, b| a.vertex_indices.cmp(&b.vertex_indices));
    Ok(found)
}

fn as_rationals<T: Scalar>(vertices: &[Vec<T>]) -> Option<Vec<Vec<Rational>>> {
    vertices
        .iter()
        .map(|v| {
            v.iter().map(|x| (x as &dyn std::any::Any).downcast_ref::<Rational>().cloned()).collect::<Option<Vec<_>>>()
        })
        .collect()
}

fn small_integer_images(vertices: &[Vec<Rational>]) -> Option<Vec<Vec<i128>>> {
    use num_traits::ToPrimitive;
    vertices.iter().map(|v| modular::integer_image(v).iter().map(|x| x.to_i128()).collect()).collect()
}

/// Index sets whose span first reaches the uniform vector; weights are checked by the caller.
fn residue_kernel_search(vertices: &[Vec<Rational>], n: usize, budget: &Budget) -> Vec<Vec<usize>> {
    let ones = vec![num_bigint::BigInt::from(1); n];
    let ints: Vec<Vec<num_bigint::BigInt>> = vertices.iter().map(|v| modular::integer_image(v)).collect();
    let mut bits: Vec<u64> = ints.iter().map(|v| modular::norm_bits(v)).collect();
    bits.push(modular::norm_bits(&ones));
    bits.sort_unstable_by(|a, b| b.cmp(a));
    let bound: u64 = bits.iter().take(n).sum();
    let fields: Vec<modular::Field> =
        modular::large_primes(modular::primes_needed(bound)).into_iter().map(modular::Field::new).collect();
    let image = |v: &[num_bigint::BigInt]| -> Vec<Vec<u64>> {
        fields.iter().map(|f| v.iter().map(|x| f.image(x)).collect()).collect()
    };
    let residues: Vec<Vec<Vec<u64>>> = ints.iter().map(|v| image(v)).collect();
    let target = image(&ones);
    (0..vertices.len())
        .into_par_iter()
        .flat_map_iter(|first| {
            let mut out = Vec::new();
            let mut stack = modular::ModStack::new(&fields, &target);
            let mut chosen = Vec::with_capacity(n);
            residue_dfs(&residues, n, &mut stack, first, &mut chosen, budget, &mut out);
            out
        })
        .collect()
}

fn residue_dfs(
    residues: &[Vec<Vec<u64>>],
    n: usize,
    stack: &mut modular::ModStack,
    pick: usize,
    chosen: &mut Vec<usize>,
    budget: &Budget,
    out: &mut Vec<Vec<usize>>,
) {
    if !stack.push(&residues[pick]) || !budget.charge() {
        return;
    }
    chosen.push(pick);
    if stack.target_in_span() {
        out.push(chosen.clone());
    } else if chosen.len() < n {
        for k in pick + 1..residues.len() {
            residue_dfs(residues, n, stack, k, chosen, budget, out);
        }
    }
    chosen.pop();
    stack.pop();
}

fn basis_kernel_search<T: Scalar>(vertices: &[Vec<T>], n: usize, budget: &Budget) -> Vec<Vec<usize>> {
    let uniform: Vec<T> = uniform_prior(n);
    (0..vertices.len())
        .into_par_iter()
        .flat_map_iter(|first| {
            let mut out = Vec::new();
            let mut chosen = Vec::with_capacity(n);
            basis_dfs(vertices, &uniform, &IncrementalBasis::new(n), first, &mut chosen, budget, &mut out);
            out
        })
        .collect()
}

fn basis_dfs<T: Scalar>(
    vertices: &[Vec<T>],
    uniform: &[T],
    basis: &IncrementalBasis<T>,
    pick: usize,
    chosen: &mut Vec<usize>,
    budget: &Budget,
    out: &mut Vec<Vec<usize>>,
) {
    let mut b = basis.clone();
    if !b.push(&vertices[pick]) || !budget.charge() {
        return;
    }
    chosen.push(pick);
    if b.express(uniform).is_some() {
        out.push(chosen.clone());
    } else if chosen.len() < uniform.len() {
        for k in pick + 1..vertices.len() {
            basis_dfs(vertices, uniform, &b, k, chosen, budget, out);
        }
    }
    chosen.pop();
}

/// Every inner is a vertex and the hyper averages to the uniform prior.
pub fn is_vertex_mechanism<T: Scalar>(h: &Hyper<T>, cs: &ConstraintSystem<T>) -> bool {
    h.dim() == cs.n
        && h.inners().iter().all(|d| cs.is_vertex(d))
        && h.prior().iter().zip(uniform_prior::<T>(cs.n)).all(|(a, b)| a.eq_tol(&b))
}

/// A vertex mechanism whose inners are linearly independent.
pub fn is_kernel<T: Scalar>(h: &Hyper<T>, cs: &ConstraintSystem<T>) -> bool {
    is_vertex_mechanism(h, cs) && rank(h.inners()).map(|r| r == h.len()).unwrap_or(false)
}

/// A vertex mechanism `V` refining `c`: each uniform-prior posterior of `c`
/// is split into a basic convex combination of vertices.
pub fn anti_refine<T: Scalar>(c: &Channel<T>, vertices: &[Vec<T>]) -> Result<Hyper<T>> {
    let h = c.to_hyper_uniform();
    let n = c.n_inputs();
    if vertices.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch(format!("vertices must have length {n}")));
    }
    let mut outers = Vec::new();
    let mut inners = Vec::new();
    for (o, delta) in h.outers().iter().zip(h.inners()) {
        let mut lp = LpProblem::new(Direction::Minimize, vec![T::zero(); vertices.len()]);
        for x in 0..n {
            lp.add_eq(vertices.iter().map(|v| v[x].clone()).collect(), delta[x].clone())?;
        }
        lp.add_eq(vec![T::one(); vertices.len()], T::one())?;
        match lp_optimize(&lp)? {
            LpOutcome::Optimal { point, .. } => {
                for (b, v) in point.into_iter().zip(vertices) {
                    if b.is_positive_tol() {
                        outers.push(o.clone() * b);
                        inners.push(v.clone());
                    }
                }
            }
            _ => {
                return Err(Error::Internal(
                    "posterior is not a convex combination of vertices; is the channel private?".into(),
                ))
            }
        }
    }
    Hyper::new(outers, inners)
}

/// Splits a vertex mechanism into a convex combination of kernels, greedily
/// taking the first kernel (in the given order) supported by the remaining mass.
pub fn decompose_vertex_mechanism<T: Scalar>(
    v: &Hyper<T>,
    kernels: &[KernelMechanism<T>],
) -> Result<Vec<(T, KernelMechanism<T>)>> {
    let mut remaining: Vec<T> = v.outers().to_vec();
    let position = |inner: &[T]| v.inners().iter().position(|d| lex_cmp(d, inner).is_eq());
    let mut out = Vec::new();
    while remaining.iter().any(|m| m.is_positive_tol()) {
        let pick = kernels.iter().find_map(|k| {
            let idx: Option<Vec<usize>> = k.hyper.inners().iter().map(|d| position(d)).collect();
            idx.filter(|idx| idx.iter().all(|&i| remaining[i].is_positive_tol())).map(|idx| (k, idx))
        });
        let Some((k, idx)) = pick else {
            return Err(Error::InvalidInput(
                "remaining posteriors contain no kernel; input is not a vertex mechanism of this type".into(),
            ));
        };
        let t = idx
            .iter()
            .zip(k.hyper.outers())
            .map(|(&i, w)| remaining[i].clone() / w.clone())
            .reduce(|a, b| if b < a { b } else { a })
            .expect("kernels are non-empty");
        for (&i, w) in idx.iter().zip(k.hyper.outers()) {
            remaining[i] = remaining[i].clone() - t.clone() * w.clone();
            if remaining[i].is_zero_tol() {
                remaining[i] = T::zero();
            }
        }
        out.push((t, k.clone()));
    }
    Ok(out)
}
