//! Dense matrices and the shared elimination kernel.
//!
//! `rank`, `solve_linear_system` and the incremental basis used by the kernel
//! search all pivot on the first usable entry in column order, so ties are
//! resolved the same way everywhere. With [`Rational`](crate::Rational)
//! entries every intermediate is reduced to lowest terms after each update.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|row| row.len() != c) {
            return Err(Error::DimensionMismatch(format!("row {bad} has {} entries, expected {c}", rows[bad].len())));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] = out[(i, j)].clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// Selects the given rows, in the order given.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)].clone())
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])].clone())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> =
                self.data[i * self.cols..(i + 1) * self.cols].iter().map(|x| format!("{x:?}")).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearSolution<T> {
    Unique(Vec<T>),
    Underdetermined,
    Inconsistent,
}

/// Row-reduces an augmented system in place and returns the pivot columns.
/// Only the first `pivot_cols` columns are eligible as pivots.
fn eliminate<T: Scalar>(rows: &mut [Vec<T>], pivot_cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..pivot_cols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero_tol()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = T::one() / rows[r][c].clone();
        for x in rows[r].iter_mut() {
            if !x.is_zero() {
                *x = x.clone() * inv.clone();
            }
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x = x.clone() - factor.clone() * p.clone();
                }
            }
            row[c] = T::zero();
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Solves `A x = b`.
pub fn solve_linear_system<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<LinearSolution<T>> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::DimensionMismatch("system needs at least one row and column".into()));
    }
    if a.rows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows but right-hand side has {}",
            a.rows(),
            b.len()
        )));
    }
    let n = a.cols();
    let mut rows: Vec<Vec<T>> = (0..a.rows())
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.push(b[i].clone());
            r
        })
        .collect();
    let pivots = eliminate(&mut rows, n);
    let rank = pivots.len();
    if rows[rank..].iter().any(|r| !r[n].is_zero_tol()) {
        return Ok(LinearSolution::Inconsistent);
    }
    if rank < n {
        return Ok(LinearSolution::Underdetermined);
    }
    let mut x = vec![T::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = rows[i][n].clone();
    }
    Ok(LinearSolution::Unique(x))
}

/// Rank of a list of equal-length vectors. An empty list has rank 0.
pub fn rank<T: Scalar>(vectors: &[Vec<T>]) -> Result<usize> {
    let Some(first) = vectors.first() else {
        return Ok(0);
    };
    let n = first.len();
    if vectors.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch("vectors have different lengths".into()));
    }
    let mut rows = vectors.to_vec();
    Ok(eliminate(&mut rows, n).len())
}

/// A growing set of linearly independent vectors kept in reduced form, with
/// each reduced row expressed as a combination of the original vectors.
#[derive(Clone, Debug)]
pub struct IncrementalBasis<T> {
    dim: usize,
    rows: Vec<Vec<T>>,
    combos: Vec<Vec<T>>,
    pivots: Vec<usize>,
}

impl<T: Scalar> IncrementalBasis<T> {
    pub fn new(dim: usize) -> Self {
        IncrementalBasis { dim, rows: Vec::new(), combos: Vec::new(), pivots: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reduces `v` against the basis: returns the residual and the
    /// coefficients (over the original vectors) that were subtracted.
    pub fn reduce(&self, v: &[T]) -> (Vec<T>, Vec<T>) {
        debug_assert_eq!(v.len(), self.dim);
        let mut residual = v.to_vec();
        let mut coeffs = vec![T::zero(); self.rows.len()];
        for (k, &p) in self.pivots.iter().enumerate() {
            let f = residual[p].clone();
            if f.is_zero() {
                continue;
            }
            for (x, b) in residual.iter_mut().zip(&self.rows[k]) {
                if !b.is_zero() {
                    *x = x.clone() - f.clone() * b.clone();
                }
            }
            residual[p] = T::zero();
            for (c, b) in coeffs.iter_mut().zip(&self.combos[k]) {
                if !b.is_zero() {
                    *c = c.clone() + f.clone() * b.clone();
                }
            }
        }
        (residual, coeffs)
    }

    /// Coefficients expressing `v` in the original vectors, if `v` is in the span.
    pub fn express(&self, v: &[T]) -> Option<Vec<T>> {
        let (residual, coeffs) = self.reduce(v);
        residual.iter().all(|x| x.is_zero_tol()).then_some(coeffs)
    }

    /// Adds `v` if it is independent of the current basis; returns whether it was added.
    pub fn push(&mut self, v: &[T]) -> bool {
        let (mut residual, coeffs) = self.reduce(v);
        let Some(p) = residual.iter().position(|x| !x.is_zero_tol()) else {
            return false;
        };
        let inv = T::one() / residual[p].clone();
        for x in residual.iter_mut() {
            if !x.is_zero() {
                *x = x.clone() * inv.clone();
            }
        }
        residual[p] = T::one();
        // residual = (v - sum coeffs_i orig_i) * inv
        let new_index = self.rows.len();
        let mut combo: Vec<T> = coeffs.into_iter().map(|c| -(c * inv.clone())).collect();
        combo.push(inv);
        for c in self.combos.iter_mut() {
            c.push(T::zero());
        }
        // Keep the basis fully reduced on pivot columns.
        for k in 0..self.rows.len() {
            let f = self.rows[k][p].clone();
            if f.is_zero() {
                continue;
            }
            for (x, r) in self.rows[k].iter_mut().zip(&residual) {
                if !r.is_zero() {
                    *x = x.clone() - f.clone() * r.clone();
                }
            }
            self.rows[k][p] = T::zero();
            for (x, r) in self.combos[k].iter_mut().zip(&combo) {
                if !r.is_zero() {
                    *x = x.clone() - f.clone() * r.clone();
                }
            }
        }
        debug_assert_eq!(combo.len(), new_index + 1);
        self.rows.push(residual);
        self.combos.push(combo);
        self.pivots.push(p);
        true
    }
}

/// Sparse exact solve of a square system given as rows of `(column, value)`
/// entries. Pivots are chosen by smallest Markowitz count, ties broken by
/// lowest (row, column). Returns `None` when the matrix is singular.
pub fn solve_sparse_square<T: Scalar>(rows: &[Vec<(usize, T)>], rhs: &[T]) -> Option<Vec<T>> {
    let n = rows.len();
    assert_eq!(rhs.len(), n);
    let mut mat: Vec<HashMap<usize, T>> = rows
        .iter()
        .map(|r| {
            let mut m = HashMap::new();
            for (c, v) in r {
                if !v.is_zero() {
                    let e = m.entry(*c).or_insert_with(T::zero);
                    *e = e.clone() + v.clone();
                }
            }
            m.retain(|_, v: &mut T| !v.is_zero());
            m
        })
        .collect();
    let mut b = rhs.to_vec();
    let mut col_rows: HashMap<usize, std::collections::BTreeSet<usize>> = HashMap::new();
    for (i, r) in mat.iter().enumerate() {
        if r.keys().any(|&c| c >= n) {
            return None;
        }
        for &c in r.keys() {
            col_rows.entry(c).or_default().insert(i);
        }
    }
    let mut row_done = vec![false; n];
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<(usize, usize, usize)> = None; // (cost, row, col)
        for (i, r) in mat.iter().enumerate() {
            if row_done[i] {
                continue;
            }
            let rc = r.len().saturating_sub(1);
            for (&c, v) in r.iter() {
                if v.is_zero_tol() {
                    continue;
                }
                let cc = col_rows[&c].len().saturating_sub(1);
                let cost = rc * cc;
                let cand = (cost, i, c);
                if best.is_none_or(|b| cand < b) {
                    best = Some(cand);
                }
            }
        }
        let (_, pr, pc) = best?;
        row_done[pr] = true;
        let pivot_row = mat[pr].clone();
        let pv = pivot_row[&pc].clone();
        let others: Vec<usize> = col_rows[&pc].iter().copied().filter(|&i| i != pr && !row_done[i]).collect();
        for i in others {
            let factor = mat[i][&pc].clone() / pv.clone();
            for (&c, v) in pivot_row.iter() {
                let delta = factor.clone() * v.clone();
                let entry = mat[i].entry(c).or_insert_with(T::zero);
                *entry = entry.clone() - delta;
                if c == pc || entry.is_zero_tol() {
                    mat[i].remove(&c);
                    col_rows.get_mut(&c).unwrap().remove(&i);
                } else {
                    col_rows.get_mut(&c).unwrap().insert(i);
                }
            }
            b[i] = b[i].clone() - factor * b[pr].clone();
        }
        for &c in pivot_row.keys() {
            col_rows.get_mut(&c).unwrap().remove(&pr);
        }
        order.push((pr, pc));
    }
    // Back substitution in reverse pivot order.
    let mut x = vec![T::zero(); n];
    let mut solved = vec![false; n];
    for &(r, c) in order.iter().rev() {
        let mut acc = b[r].clone();
        for (&cc, v) in mat[r].iter() {
            if cc != c {
                debug_assert!(solved[cc]);
                acc = acc - v.clone() * x[cc].clone();
            }
        }
        x[c] = acc / mat[r][&c].clone();
        solved[c] = true;
    }
    Some(x)
}
