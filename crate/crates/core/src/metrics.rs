//! Finite metric spaces with the privacy budget folded in.
//!
//! A [`MetricSpace`] stores, for every pair of secrets, the stretch factor
//! `base^d(x, x')` that bounds how much more likely one secret can make an
//! observation than the other. Distances themselves are kept exactly as
//! squared rationals so that betweenness (`d(x,y) + d(y,z) = d(x,z)`) is
//! decided in the source geometry, never on rounded stretch factors.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::precise::{exact_sqrt, pow_int, pow_sqrt_rounded};
use crate::scalar::{format_rational, int, serde_rational, Rational};

pub const DEFAULT_PRECISION_DIGITS: usize = 30;

fn default_precision() -> usize {
    DEFAULT_PRECISION_DIGITS
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MetricKind {
    /// Points `0..n` on the integer line.
    Line { n: usize },
    /// `n` points, all at distance 1.
    Discrete { n: usize },
    /// The `(width+1) x (height+1)` integer lattice with Euclidean distance.
    Grid { width: usize, height: usize },
    /// Bitstrings of length `bits` with Hamming distance.
    Hamming { bits: usize },
    Custom {
        #[serde(with = "serde_rational::matrix")]
        distances: Vec<Vec<Rational>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
}

/// The JSON-facing description from which a [`MetricSpace`] is built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSpec {
    #[serde(flatten)]
    pub kind: MetricKind,
    #[serde(with = "serde_rational")]
    pub base: Rational,
    #[serde(default = "default_precision")]
    pub precision_digits: usize,
}

impl MetricSpec {
    pub fn new(kind: MetricKind, base: Rational) -> Self {
        MetricSpec { kind, base, precision_digits: DEFAULT_PRECISION_DIGITS }
    }

    /// Sorted-key JSON; the basis of cache keys.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("metric spec serializes");
        serde_json::to_string(&value).expect("json value serializes")
    }

    pub fn build(&self) -> Result<MetricSpace> {
        make_metric(&self.kind, &self.base, self.precision_digits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum Mode {
    Exact,
    Approximate { precision_digits: usize },
}

#[derive(Clone, PartialEq, Eq)]
pub struct MetricSpace {
    labels: Vec<String>,
    sq_distance: Matrix<Rational>,
    stretch: Matrix<Rational>,
    tight_pairs: Vec<(usize, usize)>,
    mode: Mode,
    spec: Option<MetricSpec>,
}

impl fmt::Debug for MetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricSpace")
            .field("labels", &self.labels)
            .field("tight_pairs", &self.tight_pairs)
            .field("mode", &self.mode)
            .finish()
    }
}

/// Builds the metric privacy type skeleton.
pub fn make_metric(kind: &MetricKind, base: &Rational, precision_digits: usize) -> Result<MetricSpace> {
    if base <= &Rational::one() {
        return Err(Error::InvalidInput(format!(
            "base must exceed 1 (base = e^epsilon), got {}",
            format_rational(base)
        )));
    }
    if precision_digits == 0 {
        return Err(Error::InvalidInput("precision_digits must be at least 1".into()));
    }
    let (labels, sq) = match kind {
        MetricKind::Line { n } => {
            require_positive("n", *n)?;
            let labels = (0..*n).map(|i| i.to_string()).collect();
            (labels, Matrix::from_fn(*n, *n, |i, j| int((i as i64 - j as i64).pow(2))))
        }
        MetricKind::Discrete { n } => {
            require_positive("n", *n)?;
            let labels = (0..*n).map(|i| i.to_string()).collect();
            (labels, Matrix::from_fn(*n, *n, |i, j| if i == j { int(0) } else { int(1) }))
        }
        MetricKind::Grid { width, height } => {
            require_positive("width", *width)?;
            require_positive("height", *height)?;
            let pts: Vec<(i64, i64)> =
                (0..=*width as i64).flat_map(|x| (0..=*height as i64).map(move |y| (x, y))).collect();
            let labels = pts.iter().map(|(x, y)| format!("({x},{y})")).collect();
            let n = pts.len();
            (
                labels,
                Matrix::from_fn(n, n, |i, j| {
                    let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
                    int(dx * dx + dy * dy)
                }),
            )
        }
        MetricKind::Hamming { bits } => {
            require_positive("bits", *bits)?;
            if *bits > 16 {
                return Err(Error::InvalidInput("hamming cube limited to 16 bits".into()));
            }
            let n = 1usize << bits;
            let labels = (0..n).map(|v| format!("{v:0width$b}", width = *bits)).collect();
            (labels, Matrix::from_fn(n, n, |i, j| int(((i ^ j).count_ones() as i64).pow(2))))
        }
        MetricKind::Custom { distances, labels } => {
            let n = distances.len();
            require_positive("number of points", n)?;
            let labels = match labels {
                Some(l) if l.len() != n => {
                    return Err(Error::DimensionMismatch(format!("{} labels for {n} points", l.len())))
                }
                Some(l) => l.clone(),
                None => (0..n).map(|i| i.to_string()).collect(),
            };
            let matrix = Matrix::from_rows(distances.clone())?;
            if matrix.cols() != n {
                return Err(Error::DimensionMismatch("distance matrix must be square".into()));
            }
            validate_metric(&matrix, &labels)?;
            (labels, Matrix::from_fn(n, n, |i, j| matrix[(i, j)].clone() * matrix[(i, j)].clone()))
        }
    };
    let mut space = MetricSpace::from_squared_distances(labels, sq, base, precision_digits);
    space.spec = Some(MetricSpec { kind: kind.clone(), base: base.clone(), precision_digits });
    Ok(space)
}

fn require_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidInput(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn validate_metric(d: &Matrix<Rational>, labels: &[String]) -> Result<()> {
    let n = d.rows();
    let fail = |reason: &str, idx: &[usize]| Error::NotAMetric {
        reason: reason.to_string(),
        triple: idx.iter().map(|&i| labels[i].clone()).collect(),
    };
    for i in 0..n {
        if !d[(i, i)].is_zero() {
            return Err(fail("non-zero self distance", &[i, i]));
        }
        for j in 0..n {
            if d[(i, j)] != d[(j, i)] {
                return Err(fail("asymmetric distance", &[i, j]));
            }
            if i != j && !d[(i, j)].is_positive() {
                return Err(fail("distinct points at non-positive distance", &[i, j]));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if d[(i, k)] > d[(i, j)].clone() + d[(j, k)].clone() {
                    return Err(fail("triangle inequality violated", &[i, j, k]));
                }
            }
        }
    }
    Ok(())
}

/// Whether `sqrt(a) + sqrt(b) = sqrt(c)` for non-negative rationals.
fn sqrt_sum_equals(a: &Rational, b: &Rational, c: &Rational) -> bool {
    let diff = c.clone() - a.clone() - b.clone();
    !diff.is_negative() && diff.clone() * diff == Rational::from_integer(BigInt::from(4)) * a.clone() * b.clone()
}

impl MetricSpace {
    fn from_squared_distances(
        labels: Vec<String>,
        sq: Matrix<Rational>,
        base: &Rational,
        precision_digits: usize,
    ) -> Self {
        let n = labels.len();
        let mut approximate = false;
        let stretch = Matrix::from_fn(n, n, |i, j| {
            let q = &sq[(i, j)];
            if q.is_zero() {
                return Rational::one();
            }
            match exact_sqrt(q) {
                Some(d) if d.is_integer() => pow_int(base, &d.to_integer()),
                _ => {
                    approximate = true;
                    pow_sqrt_rounded(base, q, precision_digits)
                }
            }
        });
        let mode = if approximate { Mode::Approximate { precision_digits } } else { Mode::Exact };
        let mut space = MetricSpace { labels, sq_distance: sq, stretch, tight_pairs: Vec::new(), mode, spec: None };
        space.tight_pairs = space.compute_tight_pairs();
        space
    }

    fn compute_tight_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for x in 0..n {
            for z in x + 1..n {
                if !(0..n).any(|y| y != x && y != z && self.is_between(x, y, z)) {
                    out.push((x, z));
                }
            }
        }
        out
    }

    /// `d(x,y) + d(y,z) = d(x,z)`, decided exactly on squared distances.
    pub fn is_between(&self, x: usize, y: usize, z: usize) -> bool {
        sqrt_sum_equals(&self.sq_distance[(x, y)], &self.sq_distance[(y, z)], &self.sq_distance[(x, z)])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn spec(&self) -> Option<&MetricSpec> {
        self.spec.as_ref()
    }

    pub fn precision_digits(&self) -> Option<usize> {
        match self.mode {
            Mode::Exact => None,
            Mode::Approximate { precision_digits } => Some(precision_digits),
        }
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Stretch factor between two labelled secrets.
    pub fn stretch(&self, x: &str, x2: &str) -> Result<Rational> {
        Ok(self.stretch[(self.index_of(x)?, self.index_of(x2)?)].clone())
    }

    pub fn stretch_at(&self, i: usize, j: usize) -> &Rational {
        &self.stretch[(i, j)]
    }

    pub fn stretch_matrix(&self) -> &Matrix<Rational> {
        &self.stretch
    }

    pub fn sq_distance(&self, i: usize, j: usize) -> &Rational {
        &self.sq_distance[(i, j)]
    }

    /// Non-implied constraint pairs `(i, j)` with `i < j`, sorted.
    pub fn tight_pairs(&self) -> &[(usize, usize)] {
        &self.tight_pairs
    }

    pub fn tight_pair_labels(&self) -> Vec<(String, String)> {
        self.tight_pairs.iter().map(|&(i, j)| (self.labels[i].clone(), self.labels[j].clone())).collect()
    }

    /// A pair at minimum distance (first in index order).
    pub fn closest_pair(&self) -> Option<(usize, usize)> {
        let n = self.len();
        let mut best: Option<(usize, usize)> = None;
        for i in 0..n {
            for j in i + 1..n {
                if best.is_none_or(|(a, b)| self.sq_distance[(i, j)] < self.sq_distance[(a, b)]) {
                    best = Some((i, j));
                }
            }
        }
        best
    }

    /// The sub-metric on the given labels (in the given order); tight pairs
    /// are recomputed from betweenness within the subset.
    pub fn restrict(&self, labels: &[String]) -> Result<MetricSpace> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("restriction to an empty set".into()));
        }
        let idx: Vec<usize> = labels.iter().map(|l| self.index_of(l)).collect::<Result<_>>()?;
        let k = idx.len();
        let mut sub = MetricSpace {
            labels: labels.to_vec(),
            sq_distance: Matrix::from_fn(k, k, |i, j| self.sq_distance[(idx[i], idx[j])].clone()),
            stretch: Matrix::from_fn(k, k, |i, j| self.stretch[(idx[i], idx[j])].clone()),
            tight_pairs: Vec::new(),
            mode: self.mode,
            spec: None,
        };
        sub.tight_pairs = sub.compute_tight_pairs();
        Ok(sub)
    }

    /// Checks the stored factors against the multiplicative triangle
    /// inequality; approximate spaces get relative slack `10^(2 - digits)`.
    pub fn satisfies_triangle_inequality(&self) -> bool {
        let n = self.len();
        let slack = match self.mode {
            Mode::Exact => Rational::zero(),
            Mode::Approximate { precision_digits } => {
                Rational::new(BigInt::one(), num_traits::pow(BigInt::from(10), precision_digits.saturating_sub(2)))
            }
        };
        (0..n).all(|x| {
            (0..n).all(|y| {
                (0..n).all(|z| {
                    let lhs = &self.stretch[(x, z)];
                    let rhs = self.stretch[(x, y)].clone() * self.stretch[(y, z)].clone();
                    lhs <= &(rhs.clone() + rhs * slack.clone())
                })
            })
        })
    }
}
