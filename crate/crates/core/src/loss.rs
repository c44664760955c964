//! Loss functions `ℓ(w, x)` over actions `W` and secrets `X`.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mechanisms::default_x_labels;
use crate::metrics::MetricSpace;
use crate::scalar::{serde_rational, Rational, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct LossFunction<T> {
    w_labels: Vec<String>,
    x_labels: Vec<String>,
    table: Matrix<T>,
}

fn default_w_labels(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("w{i}")).collect()
}

impl<T: Scalar> LossFunction<T> {
    pub fn new(w_labels: Vec<String>, x_labels: Vec<String>, table: Matrix<T>) -> Result<Self> {
        if table.rows() != w_labels.len() || table.cols() != x_labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} loss table with {} actions and {} secrets",
                table.rows(),
                table.cols(),
                w_labels.len(),
                x_labels.len()
            )));
        }
        if w_labels.is_empty() || x_labels.is_empty() {
            return Err(Error::InvalidInput("a loss needs at least one action and one secret".into()));
        }
        for (w, label) in w_labels.iter().enumerate() {
            if let Some(x) = table.row(w).iter().position(|v| v.is_negative_tol()) {
                return Err(Error::InvalidInput(format!("negative loss at ({}, {})", label, x_labels[x])));
            }
        }
        Ok(LossFunction { w_labels, x_labels, table })
    }

    /// Rows are actions; default labels `w0..` and `0..`.
    pub fn from_table(rows: Vec<Vec<T>>) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        LossFunction::new(default_w_labels(m.rows()), default_x_labels(m.cols()), m)
    }

    fn square(n: usize, f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("need at least one secret".into()));
        }
        LossFunction::new(default_x_labels(n), default_x_labels(n), Matrix::from_fn(n, n, f))
    }

    /// 0 for a correct guess, 1 otherwise.
    pub fn bin(n: usize) -> Result<Self> {
        Self::square(n, |w, x| if w == x { T::zero() } else { T::one() })
    }

    /// 1 for a correct guess, 0 otherwise.
    pub fn nib(n: usize) -> Result<Self> {
        Self::square(n, |w, x| if w == x { T::one() } else { T::zero() })
    }

    /// `|w - x|` on secrets `0..n`.
    pub fn avg(n: usize) -> Result<Self> {
        Self::square(n, |w, x| T::from_count(w.abs_diff(x)))
    }

    pub fn w_labels(&self) -> &[String] {
        &self.w_labels
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn table(&self) -> &Matrix<T> {
        &self.table
    }

    pub fn n_actions(&self) -> usize {
        self.table.rows()
    }

    pub fn get(&self, w: usize, x: usize) -> &T {
        &self.table[(w, x)]
    }

    pub fn with_x_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.x_labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} secrets",
                labels.len(),
                self.x_labels.len()
            )));
        }
        self.x_labels = labels;
        Ok(self)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> LossFunction<U> {
        LossFunction { w_labels: self.w_labels.clone(), x_labels: self.x_labels.clone(), table: self.table.map(f) }
    }

    fn x_index(&self, label: &str) -> Result<usize> {
        self.x_labels.iter().position(|l| l == label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Keeps the columns for `labels`, in that order.
    pub fn restrict(&self, labels: &[String]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("restriction to an empty set of secrets".into()));
        }
        let idx = labels.iter().map(|l| self.x_index(l)).collect::<Result<Vec<_>>>()?;
        LossFunction::new(self.w_labels.clone(), labels.to_vec(), self.table.select_cols(&idx))
    }

    /// Lifts to the secrets `labels`, padding with zero loss outside the current ones.
    pub fn extend(&self, labels: &[String]) -> Result<Self> {
        for l in &self.x_labels {
            if !labels.contains(l) {
                return Err(Error::UnknownLabel(l.clone()));
            }
        }
        let src: Vec<Option<usize>> = labels.iter().map(|l| self.x_labels.iter().position(|x| x == l)).collect();
        let table = Matrix::from_fn(self.n_actions(), labels.len(), |w, x| match src[x] {
            Some(j) => self.table[(w, j)].clone(),
            None => T::zero(),
        });
        LossFunction::new(self.w_labels.clone(), labels.to_vec(), table)
    }

    /// Some action is pointwise no worse than every other.
    pub fn is_trivial(&self) -> bool {
        (0..self.n_actions()).any(|a| {
            (0..self.n_actions())
                .all(|w| (0..self.x_labels.len()).all(|x| self.table[(a, x)].cmp_tol(&self.table[(w, x)]).is_le()))
        })
    }
}

/// Pairs actions: `ℓ((w1, w2), x) = ℓ1(w1, x) + ℓ2(w2, x)`.
pub fn add_losses<T: Scalar>(l1: &LossFunction<T>, l2: &LossFunction<T>) -> Result<LossFunction<T>> {
    if l1.x_labels != l2.x_labels {
        return Err(Error::InvalidInput("losses range over different secrets".into()));
    }
    let (a, b) = (l1.n_actions(), l2.n_actions());
    let mut w_labels = Vec::with_capacity(a * b);
    for w1 in &l1.w_labels {
        for w2 in &l2.w_labels {
            w_labels.push(format!("({w1},{w2})"));
        }
    }
    let table =
        Matrix::from_fn(a * b, l1.x_labels.len(), |w, x| l1.table[(w / b, x)].clone() + l2.table[(w % b, x)].clone());
    LossFunction::new(w_labels, l1.x_labels.clone(), table)
}

/// `ℓ'(w, x) = v_x · ℓ(w, x)` for a non-negative weight per secret.
pub fn scale_loss<T: Scalar>(v: &[T], l: &LossFunction<T>) -> Result<LossFunction<T>> {
    if v.len() != l.x_labels.len() {
        return Err(Error::DimensionMismatch(format!("{} weights for {} secrets", v.len(), l.x_labels.len())));
    }
    if v.iter().any(|x| x.is_negative_tol()) {
        return Err(Error::InvalidInput("scaling weights must be non-negative".into()));
    }
    let table = Matrix::from_fn(l.n_actions(), v.len(), |w, x| v[x].clone() * l.table[(w, x)].clone());
    LossFunction::new(l.w_labels.clone(), l.x_labels.clone(), table)
}

/// `ℓ(w, x) = m(d(x, α(w)))` where `m` is the step function through
/// `points` (distance, value): its value at `d` is that of the largest listed
/// distance not exceeding `d`. `action_map[w]` is the secret index `α(w)`.
pub fn monotone_loss(
    space: &MetricSpace,
    points: &[(Rational, Rational)],
    action_map: &[usize],
) -> Result<LossFunction<Rational>> {
    let n = space.len();
    if action_map.is_empty() {
        return Err(Error::InvalidInput("a loss needs at least one action".into()));
    }
    let mut seen = vec![false; n];
    for &a in action_map {
        if a >= n {
            return Err(Error::InvalidInput(format!("action maps to secret {a}, but there are {n}")));
        }
        if std::mem::replace(&mut seen[a], true) {
            return Err(Error::InvalidInput("action map must be injective".into()));
        }
    }
    let mut pts: Vec<(Rational, Rational)> = points.to_vec();
    pts.sort_by(|a, b| a.0.cmp(&b.0));
    if pts.iter().any(|(d, _)| d.is_negative_tol()) {
        return Err(Error::InvalidInput("distances must be non-negative".into()));
    }
    if pts.windows(2).any(|w| w[1].1 < w[0].1) {
        return Err(Error::InvalidInput("m must be non-decreasing in distance".into()));
    }
    let mut table = Matrix::zeros(action_map.len(), n);
    for (w, &a) in action_map.iter().enumerate() {
        for x in 0..n {
            let q = space.sq_distance(x, a);
            let value = pts
                .iter()
                .rev()
                .find(|(d, _)| &(d.clone() * d.clone()) <= q)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| Error::InvalidInput("m is undefined at distance 0".into()))?;
            table[(w, x)] = value;
        }
    }
    let w_labels = action_map.iter().map(|&a| space.labels()[a].clone()).collect();
    LossFunction::new(w_labels, space.labels().to_vec(), table)
}

#[derive(Debug, Clone)]
pub enum LossKind<'a> {
    Bin(usize),
    Nib(usize),
    Avg(usize),
    Monotone { space: &'a MetricSpace, points: Vec<(Rational, Rational)>, action_map: Vec<usize> },
    Custom(Vec<Vec<Rational>>),
}

pub fn make_loss(kind: LossKind<'_>) -> Result<LossFunction<Rational>> {
    match kind {
        LossKind::Bin(n) => LossFunction::bin(n),
        LossKind::Nib(n) => LossFunction::nib(n),
        LossKind::Avg(n) => LossFunction::avg(n),
        LossKind::Monotone { space, points, action_map } => monotone_loss(space, &points, &action_map),
        LossKind::Custom(rows) => LossFunction::from_table(rows),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotoneClass {
    Trivial,
    StrictlyMonotone,
    Monotone,
    None,
}

/// Searches injections `α: W → X` for a single-valued non-decreasing `m`
/// with `ℓ(w, x) = m(d(x, α(w)))`. More actions than secrets gives `None`.
pub fn classify_monotone<T: Scalar>(l: &LossFunction<T>, space: &MetricSpace) -> Result<MonotoneClass> {
    if l.x_labels.as_slice() != space.labels() {
        return Err(Error::InvalidInput("loss secrets do not match metric labels".into()));
    }
    if l.is_trivial() {
        return Ok(MonotoneClass::Trivial);
    }
    let (k, n) = (l.n_actions(), space.len());
    if k > n {
        return Ok(MonotoneClass::None);
    }
    let mut best = MonotoneClass::None;
    let mut alpha = Vec::with_capacity(k);
    let mut used = vec![false; n];
    search_injections(l, space, &mut alpha, &mut used, &mut best);
    Ok(best)
}

fn search_injections<T: Scalar>(
    l: &LossFunction<T>,
    space: &MetricSpace,
    alpha: &mut Vec<usize>,
    used: &mut [bool],
    best: &mut MonotoneClass,
) {
    if *best == MonotoneClass::StrictlyMonotone {
        return;
    }
    if alpha.len() == l.n_actions() {
        match profile(l, space, alpha) {
            Some(true) => *best = MonotoneClass::StrictlyMonotone,
            Some(false) => *best = MonotoneClass::Monotone,
            None => {}
        }
        return;
    }
    for a in 0..space.len() {
        if !used[a] {
            used[a] = true;
            alpha.push(a);
            search_injections(l, space, alpha, used, best);
            alpha.pop();
            used[a] = false;
        }
    }
}

/// `Some(strict)` when the entries define a non-decreasing `m`.
fn profile<T: Scalar>(l: &LossFunction<T>, space: &MetricSpace, alpha: &[usize]) -> Option<bool> {
    let mut m: BTreeMap<Rational, T> = BTreeMap::new();
    for (w, &a) in alpha.iter().enumerate() {
        for x in 0..space.len() {
            let v = &l.table[(w, x)];
            match m.get(space.sq_distance(x, a)) {
                Some(existing) if !existing.eq_tol(v) => return None,
                Some(_) => {}
                None => {
                    m.insert(space.sq_distance(x, a).clone(), v.clone());
                }
            }
        }
    }
    let values: Vec<&T> = m.values().collect();
    if values.windows(2).any(|w| w[1].cmp_tol(w[0]).is_lt()) {
        return None;
    }
    Some(values.windows(2).all(|w| w[1].cmp_tol(w[0]).is_gt()))
}

#[derive(Serialize, Deserialize)]
struct LossJson {
    #[serde(default)]
    w_labels: Vec<String>,
    #[serde(default)]
    x_labels: Vec<String>,
    #[serde(with = "serde_rational::matrix")]
    table: Vec<Vec<Rational>>,
}

impl Serialize for LossFunction<Rational> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LossJson { w_labels: self.w_labels.clone(), x_labels: self.x_labels.clone(), table: self.table.to_rows() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LossFunction<Rational> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = LossJson::deserialize(d)?;
        let m = Matrix::from_rows(raw.table).map_err(serde::de::Error::custom)?;
        let w_labels = if raw.w_labels.is_empty() { default_w_labels(m.rows()) } else { raw.w_labels };
        let x_labels = if raw.x_labels.is_empty() { default_x_labels(m.cols()) } else { raw.x_labels };
        LossFunction::new(w_labels, x_labels, m).map_err(serde::de::Error::custom)
    }
}
