//! Channels, hyper-distributions, and the standard mechanism constructors.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::MetricSpace;
use crate::scalar::{serde_rational, sum, Rational, Scalar};

/// A row-stochastic matrix from secrets to observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel<T> {
    x_labels: Vec<String>,
    y_labels: Vec<String>,
    rows: Matrix<T>,
}

pub fn default_x_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

pub fn default_y_labels(m: usize) -> Vec<String> {
    (0..m).map(|j| format!("y{j}")).collect()
}

fn check_unique(labels: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(Error::InvalidInput(format!("duplicate {what} label {l:?}")));
        }
    }
    Ok(())
}

impl<T: Scalar> Channel<T> {
    pub fn new(x_labels: Vec<String>, y_labels: Vec<String>, rows: Matrix<T>) -> Result<Self> {
        if rows.rows() != x_labels.len() || rows.cols() != y_labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix with {} input and {} output labels",
                rows.rows(),
                rows.cols(),
                x_labels.len(),
                y_labels.len()
            )));
        }
        if x_labels.is_empty() || y_labels.is_empty() {
            return Err(Error::InvalidInput("a channel needs at least one input and one output".into()));
        }
        check_unique(&x_labels, "input")?;
        check_unique(&y_labels, "output")?;
        for (i, label) in x_labels.iter().enumerate() {
            let row = rows.row(i);
            if let Some(j) = row.iter().position(|v| v.is_negative_tol()) {
                return Err(Error::InvalidInput(format!("negative entry at ({}, {})", label, y_labels[j])));
            }
            let s: T = sum(row);
            if !s.eq_tol(&T::one()) {
                return Err(Error::InvalidInput(format!("row {} sums to {s}, not 1", x_labels[i])));
            }
        }
        Ok(Channel { x_labels, y_labels, rows })
    }

    /// A channel with default labels `0..n` and `y0..y(m-1)`.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        Channel::new(default_x_labels(m.rows()), default_y_labels(m.cols()), m)
    }

    pub fn with_x_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.x_labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} inputs",
                labels.len(),
                self.x_labels.len()
            )));
        }
        check_unique(&labels, "input")?;
        self.x_labels = labels;
        Ok(self)
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.rows
    }

    pub fn n_inputs(&self) -> usize {
        self.rows.rows()
    }

    pub fn n_outputs(&self) -> usize {
        self.rows.cols()
    }

    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.rows[(x, y)]
    }

    pub fn column(&self, y: usize) -> Vec<T> {
        self.rows.column(y)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Channel<U> {
        Channel { x_labels: self.x_labels.clone(), y_labels: self.y_labels.clone(), rows: self.rows.map(f) }
    }

    /// Removes all-zero columns; they carry no information.
    pub fn drop_zero_columns(&self) -> Channel<T> {
        let keep: Vec<usize> =
            (0..self.n_outputs()).filter(|&j| (0..self.n_inputs()).any(|i| !self.rows[(i, j)].is_zero_tol())).collect();
        Channel {
            x_labels: self.x_labels.clone(),
            y_labels: keep.iter().map(|&j| self.y_labels[j].clone()).collect(),
            rows: self.rows.select_cols(&keep),
        }
    }

    /// Post-processing: `self · post`.
    pub fn compose(&self, post: &Channel<T>) -> Result<Channel<T>> {
        if post.n_inputs() != self.n_outputs() {
            return Err(Error::DimensionMismatch(format!(
                "cannot post-process {} outputs with a channel on {} inputs",
                self.n_outputs(),
                post.n_inputs()
            )));
        }
        Ok(Channel {
            x_labels: self.x_labels.clone(),
            y_labels: post.y_labels.clone(),
            rows: self.rows.mul(&post.rows)?,
        })
    }

    /// Keeps the rows for `labels` unchanged; the metric is restricted alongside.
    pub fn restrict(&self, labels: &[String]) -> Result<Channel<T>> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("restriction to an empty set of secrets".into()));
        }
        let idx = labels
            .iter()
            .map(|l| self.x_labels.iter().position(|x| x == l).ok_or_else(|| Error::UnknownLabel(l.clone())))
            .collect::<Result<Vec<_>>>()?;
        check_unique(labels, "input")?;
        Ok(Channel { x_labels: labels.to_vec(), y_labels: self.y_labels.clone(), rows: self.rows.select_rows(&idx) })
    }

    /// The hyper `[prior ▷ C]`, canonically reduced.
    pub fn to_hyper(&self, prior: &[T]) -> Result<Hyper<T>> {
        validate_prior(prior, self.n_inputs())?;
        let n = self.n_inputs();
        let mut outers = Vec::new();
        let mut inners = Vec::new();
        for y in 0..self.n_outputs() {
            let joint: Vec<T> = (0..n).map(|x| prior[x].clone() * self.rows[(x, y)].clone()).collect();
            let mass: T = sum(&joint);
            if mass.is_zero_tol() {
                continue;
            }
            inners.push(joint.into_iter().map(|v| v / mass.clone()).collect());
            outers.push(mass);
        }
        Ok(Hyper::canonical(outers, inners))
    }

    pub fn to_hyper_uniform(&self) -> Hyper<T> {
        self.to_hyper(&uniform_prior(self.n_inputs())).expect("uniform prior is valid")
    }
}

pub fn uniform_prior<T: Scalar>(n: usize) -> Vec<T> {
    vec![T::one() / T::from_count(n); n]
}

pub fn validate_prior<T: Scalar>(prior: &[T], n: usize) -> Result<()> {
    if prior.len() != n {
        return Err(Error::DimensionMismatch(format!("prior of length {} over {n} secrets", prior.len())));
    }
    if prior.iter().any(|p| p.is_negative_tol()) {
        return Err(Error::InvalidInput("prior has a negative entry".into()));
    }
    if !sum(prior).eq_tol(&T::one()) {
        return Err(Error::InvalidInput("prior does not sum to 1".into()));
    }
    Ok(())
}

/// A finite distribution over posteriors, kept canonical: outers positive,
/// inners distinct and sorted lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyper<T> {
    outers: Vec<T>,
    inners: Vec<Vec<T>>,
}

fn lex_cmp<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (u, v) in a.iter().zip(b) {
        match u.cmp_tol(v) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

impl<T: Scalar> Hyper<T> {
    /// Validates and canonicalises a weighted set of posteriors.
    pub fn new(outers: Vec<T>, inners: Vec<Vec<T>>) -> Result<Self> {
        if outers.len() != inners.len() || outers.is_empty() {
            return Err(Error::DimensionMismatch(format!("{} outers for {} inners", outers.len(), inners.len())));
        }
        let n = inners[0].len();
        if n == 0 || inners.iter().any(|d| d.len() != n) {
            return Err(Error::DimensionMismatch("inners must share a non-empty length".into()));
        }
        if outers.iter().any(|o| o.is_negative_tol()) || !sum(&outers).eq_tol(&T::one()) {
            return Err(Error::InvalidInput("outers must be non-negative and sum to 1".into()));
        }
        for d in &inners {
            if d.iter().any(|v| v.is_negative_tol()) || !sum(d).eq_tol(&T::one()) {
                return Err(Error::InvalidInput("every inner must be a distribution".into()));
            }
        }
        Ok(Hyper::canonical(outers, inners))
    }

    fn canonical(outers: Vec<T>, inners: Vec<Vec<T>>) -> Self {
        let mut pairs: Vec<(T, Vec<T>)> = outers.into_iter().zip(inners).filter(|(o, _)| !o.is_zero_tol()).collect();
        pairs.sort_by(|a, b| lex_cmp(&a.1, &b.1));
        let mut merged: Vec<(T, Vec<T>)> = Vec::with_capacity(pairs.len());
        for (o, d) in pairs {
            match merged.last_mut() {
                Some((lo, ld)) if lex_cmp(ld, &d) == Ordering::Equal => *lo = lo.clone() + o,
                _ => merged.push((o, d)),
            }
        }
        let (outers, inners) = merged.into_iter().unzip();
        Hyper { outers, inners }
    }

    pub fn outers(&self) -> &[T] {
        &self.outers
    }

    pub fn inners(&self) -> &[Vec<T>] {
        &self.inners
    }

    pub fn len(&self) -> usize {
        self.outers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inners[0].len()
    }

    /// The expected inner, i.e. the prior that produced the hyper.
    pub fn prior(&self) -> Vec<T> {
        let mut p = vec![T::zero(); self.dim()];
        for (o, d) in self.outers.iter().zip(&self.inners) {
            for (px, dx) in p.iter_mut().zip(d) {
                *px = px.clone() + o.clone() * dx.clone();
            }
        }
        p
    }

    /// Tolerance-aware equality (exact for rationals).
    pub fn approx_eq(&self, other: &Hyper<T>) -> bool {
        self.len() == other.len()
            && self.outers.iter().zip(&other.outers).all(|(a, b)| a.eq_tol(b))
            && self.inners.iter().zip(&other.inners).all(|(a, b)| lex_cmp(a, b) == Ordering::Equal)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Hyper<U> {
        Hyper::canonical(
            self.outers.iter().map(&f).collect(),
            self.inners.iter().map(|d| d.iter().map(&f).collect()).collect(),
        )
    }
}

/// Bayes inversion at the hyper's own prior; one column per inner, in canonical order.
pub fn from_hyper<T: Scalar>(h: &Hyper<T>) -> Result<Channel<T>> {
    let prior = h.prior();
    if let Some(x) = prior.iter().position(|p| p.is_zero_tol()) {
        return Err(Error::InvalidInput(format!("secret {x} has zero prior mass; cannot invert")));
    }
    let n = h.dim();
    let rows = Matrix::from_fn(n, h.len(), |x, j| h.outers[j].clone() * h.inners[j][x].clone() / prior[x].clone());
    Channel::new(default_x_labels(n), default_y_labels(h.len()), rows)
}

fn check_alpha<T: Scalar>(alpha: &T) -> Result<()> {
    if !alpha.is_positive_tol() || alpha.cmp_tol(&T::one()) == Ordering::Greater {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one secret".into()));
    }
    Ok(())
}

fn square_channel<T: Scalar>(n: usize, f: impl FnMut(usize, usize) -> T) -> Result<Channel<T>> {
    Channel::new(default_x_labels(n), default_y_labels(n), Matrix::from_fn(n, n, f))
}

/// The truncated α-geometric mechanism on `0..n`; private for the line with base `1/α`.
pub fn geometric_truncated<T: Scalar>(n: usize, alpha: &T) -> Result<Channel<T>> {
    check_alpha(alpha)?;
    check_count(n)?;
    if n == 1 {
        return square_channel(1, |_, _| T::one());
    }
    let one = T::one();
    let pow = |k: usize| num_traits::pow(alpha.clone(), k);
    let denom = one.clone() + alpha.clone();
    square_channel(n, |x, y| {
        let d = x.abs_diff(y);
        if y == 0 || y == n - 1 {
            pow(d) / denom.clone()
        } else {
            (one.clone() - alpha.clone()) / denom.clone() * pow(d)
        }
    })
}

/// Random response: diagonal `1/k`, off-diagonal `α/k`, `k = 1 + (n-1)α`.
pub fn random_response<T: Scalar>(n: usize, alpha: &T) -> Result<Channel<T>> {
    check_alpha(alpha)?;
    check_count(n)?;
    let k = T::one() + T::from_count(n - 1) * alpha.clone();
    square_channel(n, |x, y| if x == y { T::one() / k.clone() } else { alpha.clone() / k.clone() })
}

/// The dual of random response, with the minimum entries on the diagonal.
pub fn rr_dual<T: Scalar>(n: usize, alpha: &T) -> Result<Channel<T>> {
    check_alpha(alpha)?;
    check_count(n)?;
    let beta = T::one() / alpha.clone();
    let m = T::one() + T::from_count(n - 1) * beta.clone();
    square_channel(n, |x, y| if x == y { T::one() / m.clone() } else { beta.clone() / m.clone() })
}

/// The 2-secret mechanism `k·[[s,1],[1,s]]`, `k = 1/(1+s)`, for stretch `s >= 1`.
pub fn binary_optimal_with_stretch<T: Scalar>(s: &T) -> Result<Channel<T>> {
    if s.cmp_tol(&T::one()) == Ordering::Less {
        return Err(Error::InvalidInput(format!("stretch must be at least 1, got {s}")));
    }
    let k = T::one() / (T::one() + s.clone());
    square_channel(2, |x, y| if x == y { s.clone() * k.clone() } else { k.clone() })
}

pub fn binary_optimal(space: &MetricSpace) -> Result<Channel<Rational>> {
    if space.len() != 2 {
        return Err(Error::InvalidInput(format!("binary_optimal needs exactly 2 secrets, got {}", space.len())));
    }
    binary_optimal_with_stretch(space.stretch_at(0, 1))?.with_x_labels(space.labels().to_vec())
}

/// The channel with a single all-ones column: it reveals nothing.
pub fn trivial_channel<T: Scalar>(n: usize) -> Result<Channel<T>> {
    check_count(n)?;
    Channel::new(default_x_labels(n), default_y_labels(1), Matrix::from_fn(n, 1, |_, _| T::one()))
}

/// Runs `c1` with probability `p` and `c2` otherwise, revealing which ran.
pub fn external_choice<T: Scalar>(c1: &Channel<T>, c2: &Channel<T>, p: &T) -> Result<Channel<T>> {
    if c1.x_labels != c2.x_labels {
        return Err(Error::InvalidInput("external choice needs channels over the same secrets".into()));
    }
    if p.is_negative_tol() || p.cmp_tol(&T::one()) == Ordering::Greater {
        return Err(Error::InvalidInput(format!("choice probability must lie in [0, 1], got {p}")));
    }
    let q = T::one() - p.clone();
    let (m1, m2) = (c1.n_outputs(), c2.n_outputs());
    let rows = Matrix::from_fn(c1.n_inputs(), m1 + m2, |x, y| {
        if y < m1 {
            p.clone() * c1.rows[(x, y)].clone()
        } else {
            q.clone() * c2.rows[(x, y - m1)].clone()
        }
    });
    let y_labels =
        c1.y_labels.iter().map(|l| format!("L:{l}")).chain(c2.y_labels.iter().map(|l| format!("R:{l}"))).collect();
    Ok(Channel::new(c1.x_labels.clone(), y_labels, rows)?.drop_zero_columns())
}

/// One failed constraint `C[x,y] <= stretch(x,x')·C[x',y]`; `ratio` is `None` when infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation<T> {
    pub x: String,
    pub x_prime: String,
    pub y: String,
    pub ratio: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DpCheck<T> {
    Ok,
    Violations(Vec<Violation<T>>),
}

impl<T> DpCheck<T> {
    pub fn is_ok(&self) -> bool {
        matches!(self, DpCheck::Ok)
    }
}

/// Checks dx-privacy over the tight pairs in both orientations, which implies every pair.
pub fn check_dx_private<T: Scalar>(c: &Channel<T>, space: &MetricSpace) -> Result<DpCheck<T>> {
    let pairs: Vec<(usize, usize)> = space.tight_pairs().iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
    check_pairs(c, space, &pairs)
}

/// Checks every ordered pair of secrets.
pub fn check_dx_private_full<T: Scalar>(c: &Channel<T>, space: &MetricSpace) -> Result<DpCheck<T>> {
    let n = space.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|(a, b)| a != b).collect();
    check_pairs(c, space, &pairs)
}

fn check_pairs<T: Scalar>(c: &Channel<T>, space: &MetricSpace, pairs: &[(usize, usize)]) -> Result<DpCheck<T>> {
    if c.x_labels() != space.labels() {
        return Err(Error::InvalidInput(format!(
            "channel secrets {:?} do not match metric labels {:?}",
            c.x_labels(),
            space.labels()
        )));
    }
    let mut out = Vec::new();
    for &(a, b) in pairs {
        let s = T::from_rational(space.stretch_at(a, b));
        for y in 0..c.n_outputs() {
            let (ca, cb) = (c.get(a, y), c.get(b, y));
            if (ca.clone() - s.clone() * cb.clone()).is_positive_tol() {
                out.push(Violation {
                    x: c.x_labels[a].clone(),
                    x_prime: c.x_labels[b].clone(),
                    y: c.y_labels[y].clone(),
                    ratio: (!cb.is_zero_tol()).then(|| ca.clone() / cb.clone()),
                });
            }
        }
    }
    Ok(if out.is_empty() { DpCheck::Ok } else { DpCheck::Violations(out) })
}

#[derive(Serialize, Deserialize)]
struct ChannelJson {
    #[serde(default)]
    x_labels: Vec<String>,
    #[serde(default)]
    y_labels: Vec<String>,
    #[serde(with = "serde_rational::matrix")]
    rows: Vec<Vec<Rational>>,
}

impl Serialize for Channel<Rational> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelJson { x_labels: self.x_labels.clone(), y_labels: self.y_labels.clone(), rows: self.rows.to_rows() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Channel<Rational> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ChannelJson::deserialize(d)?;
        let m = Matrix::from_rows(raw.rows).map_err(serde::de::Error::custom)?;
        let x_labels = if raw.x_labels.is_empty() { default_x_labels(m.rows()) } else { raw.x_labels };
        let y_labels = if raw.y_labels.is_empty() { default_y_labels(m.cols()) } else { raw.y_labels };
        Channel::new(x_labels, y_labels, m).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct HyperJson {
    #[serde(with = "serde_rational::vec")]
    outers: Vec<Rational>,
    #[serde(with = "serde_rational::matrix")]
    inners: Vec<Vec<Rational>>,
}

impl Serialize for Hyper<Rational> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HyperJson { outers: self.outers.clone(), inners: self.inners.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Hyper<Rational> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = HyperJson::deserialize(d)?;
        Hyper::new(raw.outers, raw.inners).map_err(serde::de::Error::custom)
    }
}
