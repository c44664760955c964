//! Expected loss, vulnerability, refinement, and leakage capacities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::loss::LossFunction;
use crate::lp::{lp_optimize, Direction, LpOutcome, LpProblem};
use crate::mechanisms::{default_y_labels, geometric_truncated, random_response, rr_dual, validate_prior, Channel};
use crate::metrics::{MetricKind, MetricSpace};
use crate::scalar::{max_tol, min_tol, serde_rational, Rational, Scalar};

fn expected<T: Scalar>(row: &[T], weights: impl Iterator<Item = T>) -> T {
    row.iter().zip(weights).fold(T::zero(), |acc, (l, p)| acc + l.clone() * p)
}

/// `min_w Σ_x π_x ℓ(w,x)`.
pub fn prior_uncertainty<T: Scalar>(loss: &LossFunction<T>, prior: &[T]) -> Result<T> {
    validate_prior(prior, loss.x_labels().len())?;
    let t = loss.table();
    Ok(min_tol((0..t.rows()).map(|w| expected(t.row(w), prior.iter().cloned())).collect::<Vec<_>>().iter())
        .expect("losses have at least one action"))
}

/// `Σ_y min_w Σ_x π_x C[x,y] ℓ(w,x)`.
pub fn posterior_uncertainty<T: Scalar>(loss: &LossFunction<T>, prior: &[T], c: &Channel<T>) -> Result<T> {
    if loss.x_labels().len() != c.n_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "loss over {} secrets, channel over {}",
            loss.x_labels().len(),
            c.n_inputs()
        )));
    }
    validate_prior(prior, c.n_inputs())?;
    let t = loss.table();
    let mut total = T::zero();
    for y in 0..c.n_outputs() {
        let joint: Vec<T> = (0..c.n_inputs()).map(|x| prior[x].clone() * c.get(x, y).clone()).collect();
        let best = (0..t.rows()).map(|w| expected(t.row(w), joint.iter().cloned())).collect::<Vec<_>>();
        total = total + min_tol(best.iter()).expect("losses have at least one action");
    }
    Ok(total)
}

fn check_gain<T: Scalar>(gain: &Matrix<T>, n: usize) -> Result<()> {
    if gain.cols() != n || gain.rows() == 0 {
        return Err(Error::DimensionMismatch(format!("gain table is {}x{}, need k x {n}", gain.rows(), gain.cols())));
    }
    Ok(())
}

/// `max_w Σ_x π_x g(w,x)`.
pub fn prior_vulnerability<T: Scalar>(gain: &Matrix<T>, prior: &[T]) -> Result<T> {
    check_gain(gain, prior.len())?;
    validate_prior(prior, prior.len())?;
    let vals: Vec<T> = (0..gain.rows()).map(|w| expected(gain.row(w), prior.iter().cloned())).collect();
    Ok(max_tol(vals.iter()).expect("non-empty"))
}

/// `Σ_y max_w Σ_x π_x C[x,y] g(w,x)`.
pub fn posterior_vulnerability<T: Scalar>(gain: &Matrix<T>, prior: &[T], c: &Channel<T>) -> Result<T> {
    check_gain(gain, c.n_inputs())?;
    validate_prior(prior, c.n_inputs())?;
    let mut total = T::zero();
    for y in 0..c.n_outputs() {
        let joint: Vec<T> = (0..c.n_inputs()).map(|x| prior[x].clone() * c.get(x, y).clone()).collect();
        let vals: Vec<T> = (0..gain.rows()).map(|w| expected(gain.row(w), joint.iter().cloned())).collect();
        total = total + max_tol(vals.iter()).expect("non-empty");
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Refinement<T> {
    /// `B · witness = A`.
    Yes(Channel<T>),
    No,
}

impl<T> Refinement<T> {
    pub fn holds(&self) -> bool {
        matches!(self, Refinement::Yes(_))
    }
}

/// Decides whether `a` is a post-processing of `b`.
pub fn refines<T: Scalar>(b: &Channel<T>, a: &Channel<T>) -> Result<Refinement<T>> {
    if b.x_labels() != a.x_labels() {
        return Err(Error::InvalidInput("refinement compares channels over the same secrets".into()));
    }
    let (n, mb, ma) = (b.n_inputs(), b.n_outputs(), a.n_outputs());
    let var = |i: usize, j: usize| i * ma + j;
    let mut lp = LpProblem::new(Direction::Minimize, vec![T::zero(); mb * ma]);
    for x in 0..n {
        for j in 0..ma {
            let mut row = vec![T::zero(); mb * ma];
            for i in 0..mb {
                row[var(i, j)] = b.get(x, i).clone();
            }
            lp.add_eq(row, a.get(x, j).clone())?;
        }
    }
    for i in 0..mb {
        let mut row = vec![T::zero(); mb * ma];
        for j in 0..ma {
            row[var(i, j)] = T::one();
        }
        lp.add_eq(row, T::one())?;
    }
    match lp_optimize(&lp)? {
        LpOutcome::Optimal { point, .. } => {
            let p = Channel::new(
                b.y_labels().to_vec(),
                a.y_labels().to_vec(),
                Matrix::from_fn(mb, ma, |i, j| point[var(i, j)].clone()),
            )?;
            let product = b.compose(&p)?;
            let exact = (0..n).all(|x| (0..ma).all(|j| product.get(x, j).eq_tol(a.get(x, j))));
            if !exact {
                return Err(Error::Internal("refinement witness failed verification".into()));
            }
            Ok(Refinement::Yes(p))
        }
        LpOutcome::Infeasible => Ok(Refinement::No),
        LpOutcome::Unbounded => Err(Error::Internal("feasibility problem reported unbounded".into())),
    }
}

/// `Σ_y max_x C[x,y]`.
pub fn mult_capacity_channel<T: Scalar>(c: &Channel<T>) -> T {
    (0..c.n_outputs()).fold(T::zero(), |acc, y| acc + max_tol(c.column(y).iter()).expect("non-empty"))
}

/// `1 - Σ_y min_x C[x,y]`.
pub fn add_capacity_channel<T: Scalar>(c: &Channel<T>) -> T {
    (0..c.n_outputs()).fold(T::one(), |acc, y| acc - min_tol(c.column(y).iter()).expect("non-empty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMode {
    Multiplicative,
    Additive,
}

impl std::str::FromStr for CapacityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mult" | "multiplicative" => Ok(CapacityMode::Multiplicative),
            "add" | "additive" => Ok(CapacityMode::Additive),
            other => Err(Error::Parse(format!("unknown capacity mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMethod {
    Lp,
    ClosedForm,
    PerChannel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub mode: CapacityMode,
    #[serde(with = "serde_rational")]
    pub value: Rational,
    pub method: CapacityMethod,
    pub witness: Channel<Rational>,
    /// Significant digits of rounded stretch factors, when any were rounded.
    pub precision_digits: Option<usize>,
}

pub fn channel_capacity(c: &Channel<Rational>, mode: CapacityMode) -> CapacityReport {
    let value = match mode {
        CapacityMode::Multiplicative => mult_capacity_channel(c),
        CapacityMode::Additive => add_capacity_channel(c),
    };
    CapacityReport { mode, value, method: CapacityMethod::PerChannel, witness: c.clone(), precision_digits: None }
}

/// Builds the capacity program over an `n x n` channel `m` whose column `j`
/// attains its extreme at row `j`: rows sum to one and, for each ordered tight
/// pair `(i, k)`, `m[i][j] <= s(i,k)·m[k][j]`. The remaining pairs follow from
/// the tight ones by the multiplicative triangle inequality.
pub fn capacity_program(space: &MetricSpace, mode: CapacityMode) -> Result<LpProblem<Rational>> {
    let n = space.len();
    let var = |i: usize, j: usize| i * n + j;
    let mut objective = vec![Rational::from_integer(0.into()); n * n];
    for j in 0..n {
        objective[var(j, j)] = Rational::from_integer(1.into());
    }
    let direction = match mode {
        CapacityMode::Multiplicative => Direction::Maximize,
        CapacityMode::Additive => Direction::Minimize,
    };
    let mut lp = LpProblem::new(direction, objective);
    for i in 0..n {
        let mut row = vec![Rational::from_integer(0.into()); n * n];
        for j in 0..n {
            row[var(i, j)] = Rational::from_integer(1.into());
        }
        lp.add_eq(row, Rational::from_integer(1.into()))?;
    }
    for &(a, b) in space.tight_pairs() {
        let s = space.stretch_at(a, b);
        for (i, k) in [(a, b), (b, a)] {
            for j in 0..n {
                let mut row = vec![Rational::from_integer(0.into()); n * n];
                row[var(i, j)] = Rational::from_integer(1.into());
                row[var(k, j)] = -s.clone();
                lp.add_le(row, Rational::from_integer(0.into()))?;
            }
        }
    }
    Ok(lp)
}

/// The largest capacity over all mechanisms of the type, by linear programming.
pub fn type_capacity_lp(space: &MetricSpace, mode: CapacityMode) -> Result<CapacityReport> {
    let n = space.len();
    let lp = capacity_program(space, mode)?;
    let LpOutcome::Optimal { value, point } = lp_optimize(&lp)? else {
        return Err(Error::Internal("capacity program has no optimum".into()));
    };
    let m = Matrix::from_fn(n, n, |i, j| point[i * n + j].clone());
    let witness = Channel::new(space.labels().to_vec(), default_y_labels(n), m)?.drop_zero_columns();
    let value = match mode {
        CapacityMode::Multiplicative => value,
        CapacityMode::Additive => Rational::from_integer(1.into()) - value,
    };
    Ok(CapacityReport { mode, value, method: CapacityMethod::Lp, witness, precision_digits: space.precision_digits() })
}

/// Closed forms for the line and discrete types, each with a witness attaining it.
pub fn type_capacity_closed_form(kind: &MetricKind, base: &Rational, mode: CapacityMode) -> Result<CapacityReport> {
    if base <= &Rational::from_integer(1.into()) {
        return Err(Error::InvalidInput("base must exceed 1".into()));
    }
    let alpha = Rational::from_integer(1.into()) / base.clone();
    let one = Rational::from_integer(1.into());
    let (value, witness) = match (kind, mode) {
        (MetricKind::Line { n }, CapacityMode::Multiplicative) => {
            let nn = Rational::from_integer((*n).into());
            let v = (nn * (one.clone() - alpha.clone()) + alpha.clone() * Rational::from_integer(2.into()))
                / (one + alpha.clone());
            let w = geometric_truncated(*n, &alpha)?;
            (if *n == 1 { Rational::from_integer(1.into()) } else { v }, w)
        }
        (MetricKind::Line { n }, CapacityMode::Additive) => {
            let w = geometric_truncated(*n, &alpha)?;
            (add_capacity_channel(&w), w)
        }
        (MetricKind::Discrete { n }, CapacityMode::Multiplicative) => {
            let k = one + Rational::from_integer((*n - 1).into()) * alpha.clone();
            (Rational::from_integer((*n).into()) / k, random_response(*n, &alpha)?)
        }
        (MetricKind::Discrete { n }, CapacityMode::Additive) => {
            let m = one.clone() + Rational::from_integer((*n - 1).into()) * base.clone();
            (one - Rational::from_integer((*n).into()) / m, rr_dual(*n, &alpha)?)
        }
        _ => return Err(Error::InvalidInput("closed forms exist only for line and discrete types".into())),
    };
    Ok(CapacityReport { mode, value, method: CapacityMethod::ClosedForm, witness, precision_digits: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{binary_optimal_with_stretch, external_choice, trivial_channel, uniform_prior};
    use crate::metrics::make_metric;
    use crate::scalar::{int, rat};

    fn fig1() -> Channel<Rational> {
        geometric_truncated(3, &rat(1, 2)).unwrap()
    }

    #[test]
    fn uncertainties() {
        let u3: Vec<Rational> = uniform_prior(3);
        assert_eq!(prior_uncertainty(&LossFunction::bin(3).unwrap(), &u3).unwrap(), rat(2, 3));
        assert_eq!(prior_uncertainty(&LossFunction::nib(3).unwrap(), &u3).unwrap(), rat(1, 3));
        let flat = LossFunction::from_table(vec![vec![int(1), int(2), int(3)], vec![int(1), int(2), int(3)]]).unwrap();
        let p = vec![rat(1, 2), rat(1, 4), rat(1, 4)];
        assert_eq!(prior_uncertainty(&flat, &p).unwrap(), rat(7, 4));
        assert_eq!(posterior_uncertainty(&LossFunction::bin(3).unwrap(), &u3, &fig1()).unwrap(), rat(4, 9));
        let t = trivial_channel(3).unwrap();
        assert_eq!(posterior_uncertainty(&flat, &p, &t).unwrap(), rat(7, 4));
        let k = crate::mechanisms::from_hyper(
            &crate::mechanisms::Hyper::new(
                vec![rat(4, 9), rat(5, 9)],
                vec![vec![rat(1, 4), rat(1, 4), rat(1, 2)], vec![rat(2, 5), rat(2, 5), rat(1, 5)]],
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(posterior_uncertainty(&LossFunction::bin(3).unwrap(), &u3, &k).unwrap(), rat(5, 9));
    }

    #[test]
    fn refinement_decisions() {
        let t = binary_optimal_with_stretch(&int(2)).unwrap();
        let triv = trivial_channel(2).unwrap();
        match refines(&t, &triv).unwrap() {
            Refinement::Yes(p) => assert!(p.matrix().to_rows().iter().all(|r| r == &vec![int(1)])),
            Refinement::No => panic!("everything refines the trivial channel"),
        }
        assert_eq!(refines(&triv, &t).unwrap(), Refinement::No);
        let g = fig1();
        let e = external_choice(&g, &trivial_channel(3).unwrap(), &rat(1, 2)).unwrap();
        assert!(refines(&g, &e).unwrap().holds());
        assert!(!refines(&e, &g).unwrap().holds());
    }

    #[test]
    fn per_channel_capacities() {
        assert_eq!(mult_capacity_channel(&fig1()), rat(5, 3));
        assert_eq!(add_capacity_channel(&fig1()), rat(1, 2));
        let t = trivial_channel::<Rational>(4).unwrap();
        assert_eq!((mult_capacity_channel(&t), add_capacity_channel(&t)), (int(1), int(0)));
        assert_eq!(add_capacity_channel(&rr_dual(3, &rat(1, 2)).unwrap()), rat(2, 5));
    }

    #[test]
    fn capacity_programs() {
        let line4 = make_metric(&MetricKind::Line { n: 4 }, &int(2), 30).unwrap();
        assert_eq!(type_capacity_lp(&line4, CapacityMode::Multiplicative).unwrap().value, int(2));
        assert_eq!(type_capacity_lp(&line4, CapacityMode::Additive).unwrap().value, rat(2, 3));
        let d3 = make_metric(&MetricKind::Discrete { n: 3 }, &int(2), 30).unwrap();
        let add = type_capacity_lp(&d3, CapacityMode::Additive).unwrap();
        assert_eq!(add.value, rat(2, 5));
        assert!(crate::mechanisms::check_dx_private(&add.witness, &d3).unwrap().is_ok());
        let line3 = make_metric(&MetricKind::Line { n: 3 }, &int(2), 30).unwrap();
        let mult = type_capacity_lp(&line3, CapacityMode::Multiplicative).unwrap();
        assert_eq!(mult.value, rat(5, 3));
        assert_eq!(mult_capacity_channel(&mult.witness), rat(5, 3));
    }

    #[test]
    fn closed_forms() {
        let cf = |k, m| type_capacity_closed_form(&k, &int(2), m).unwrap().value;
        assert_eq!(cf(MetricKind::Line { n: 3 }, CapacityMode::Multiplicative), rat(5, 3));
        assert_eq!(cf(MetricKind::Line { n: 3 }, CapacityMode::Additive), rat(1, 2));
        assert_eq!(cf(MetricKind::Discrete { n: 4 }, CapacityMode::Multiplicative), rat(8, 5));
        assert_eq!(cf(MetricKind::Discrete { n: 4 }, CapacityMode::Additive), rat(3, 7));
        assert_eq!(cf(MetricKind::Discrete { n: 2 }, CapacityMode::Multiplicative), rat(4, 3));
        assert_eq!(cf(MetricKind::Discrete { n: 2 }, CapacityMode::Additive), rat(1, 3));
        assert!(type_capacity_closed_form(&MetricKind::Hamming { bits: 2 }, &int(2), CapacityMode::Additive).is_err());
        let r = type_capacity_closed_form(&MetricKind::Discrete { n: 5 }, &int(2), CapacityMode::Additive).unwrap();
        assert_eq!(add_capacity_channel(&r.witness), r.value);
    }

    #[test]
    fn vulnerabilities() {
        let g = Matrix::from_rows(vec![
            vec![int(1), int(0), int(0)],
            vec![int(0), int(1), int(0)],
            vec![int(0), int(0), int(1)],
        ])
        .unwrap();
        let u3: Vec<Rational> = uniform_prior(3);
        assert_eq!(prior_vulnerability(&g, &u3).unwrap(), rat(1, 3));
        assert_eq!(posterior_vulnerability(&g, &u3, &fig1()).unwrap(), rat(5, 9));
    }

    #[test]
    fn report_json() {
        let d3 = make_metric(&MetricKind::Discrete { n: 3 }, &int(2), 30).unwrap();
        let r = type_capacity_lp(&d3, CapacityMode::Multiplicative).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["value"], "3/2");
        assert_eq!(v["method"], "lp");
        assert_eq!(v["mode"], "multiplicative");
        assert!(v["precision_digits"].is_null());
    }
}
