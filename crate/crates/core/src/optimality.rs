//! Universal ℓ-optimality against the kernel mechanisms of a type.
//!
//! Every mechanism of a type is refined by a convex sum of kernels, and the
//! expected loss of a convex sum is the matching combination of the parts,
//! so the least expected loss over the whole type at any prior is attained
//! by some kernel. `M` is therefore optimal iff
//! `U(π, M) <= U(π, K)` for every kernel `K` and every prior `π`.
//!
//! `U(π, K) = min_s f_s(π)` over strategies `s: Y_K → W`, each `f_s` linear,
//! so `max_π U(π, M) - U(π, K) = max_s max_π U(π, M) - f_s(π)`, and for a
//! fixed `s` that inner maximum is a linear program in `π` with one epigraph
//! variable per column of `M`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::analysis::posterior_uncertainty;
use crate::error::{Error, Result};
use crate::geometry::{build_constraints, enumerate_kernels, enumerate_vertices, KernelMechanism};
use crate::loss::LossFunction;
use crate::lp::{lp_optimize, Direction, LpOutcome, LpProblem};
use crate::mechanisms::{default_x_labels, from_hyper, uniform_prior, Channel, Hyper};
use crate::metrics::MetricSpace;
use crate::scalar::{format_rational, Rational, Scalar};

pub const DEFAULT_STRATEGY_BUDGET: u64 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Exact { budget: u64 },
    Sampled { count: usize, seed: u64 },
}

impl CheckMode {
    pub fn exact() -> Self {
        CheckMode::Exact { budget: DEFAULT_STRATEGY_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptimalityVerdict<T> {
    Optimal,
    /// `U(prior, M) - U(prior, rival) = margin > 0`, recomputed before return.
    Counterexample {
        prior: Vec<T>,
        rival_index: usize,
        rival: KernelMechanism<T>,
        margin: T,
    },
    Unknown {
        samples: usize,
        reason: String,
    },
}

impl<T> OptimalityVerdict<T> {
    pub fn is_optimal(&self) -> bool {
        matches!(self, OptimalityVerdict::Optimal)
    }

    pub fn is_counterexample(&self) -> bool {
        matches!(self, OptimalityVerdict::Counterexample { .. })
    }
}

impl Serialize for OptimalityVerdict<Rational> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            OptimalityVerdict::Optimal => {
                let mut st = s.serialize_struct("OptimalityVerdict", 1)?;
                st.serialize_field("verdict", "optimal")?;
                st.end()
            }
            OptimalityVerdict::Counterexample { prior, rival_index, rival, margin } => {
                let mut st = s.serialize_struct("OptimalityVerdict", 5)?;
                st.serialize_field("verdict", "counterexample")?;
                st.serialize_field("prior", &prior.iter().map(format_rational).collect::<Vec<_>>())?;
                st.serialize_field("rival_index", rival_index)?;
                st.serialize_field("rival", &rival.hyper)?;
                st.serialize_field("margin", &format_rational(margin))?;
                st.end()
            }
            OptimalityVerdict::Unknown { samples, reason } => {
                let mut st = s.serialize_struct("OptimalityVerdict", 3)?;
                st.serialize_field("verdict", "unknown")?;
                st.serialize_field("samples", samples)?;
                st.serialize_field("reason", reason)?;
                st.end()
            }
        }
    }
}

/// Per column `y`, the actions not dominated on the weighted losses `C[x,y]·ℓ(w,x)`.
fn undominated_actions<T: Scalar>(c: &Channel<T>, loss: &LossFunction<T>) -> Vec<Vec<usize>> {
    let (n, k) = (c.n_inputs(), loss.n_actions());
    (0..c.n_outputs())
        .map(|y| {
            let weighted = |w: usize, x: usize| c.get(x, y).clone() * loss.get(w, x).clone();
            let no_worse = |a: usize, b: usize| (0..n).all(|x| weighted(a, x).cmp_tol(&weighted(b, x)).is_le());
            (0..k).filter(|&w| !(0..k).any(|v| v != w && no_worse(v, w) && (v < w || !no_worse(w, v)))).collect()
        })
        .collect()
}

fn strategy_count(actions: &[Vec<usize>]) -> u64 {
    actions.iter().fold(1u64, |acc, a| acc.saturating_mul(a.len() as u64))
}

/// Coefficients of `f_s(π) = Σ_x π_x Σ_y C[x,y] ℓ(s(y), x)`.
fn strategy_loss<T: Scalar>(c: &Channel<T>, loss: &LossFunction<T>, strategy: &[usize]) -> Vec<T> {
    (0..c.n_inputs())
        .map(|x| {
            strategy
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (y, &w)| acc + c.get(x, y).clone() * loss.get(w, x).clone())
        })
        .collect()
}

/// `max_π U(π, M) - f(π)`, with the maximising prior.
fn worst_prior<T: Scalar>(m: &Channel<T>, loss: &LossFunction<T>, f: &[T]) -> Result<(T, Vec<T>)> {
    let (n, ym) = (m.n_inputs(), m.n_outputs());
    // variables: π_0..π_{n-1}, then u_0..u_{ym-1} (free)
    let mut objective: Vec<T> = f.iter().map(|v| -v.clone()).collect();
    objective.extend(std::iter::repeat_n(T::one(), ym));
    let mut lp = LpProblem::new(Direction::Maximize, objective);
    for y in 0..ym {
        lp.set_lower_bound(n + y, None)?;
    }
    let mut simplex = vec![T::one(); n];
    simplex.extend(std::iter::repeat_n(T::zero(), ym));
    lp.add_eq(simplex, T::one())?;
    for y in 0..ym {
        for w in 0..loss.n_actions() {
            let mut row: Vec<T> = (0..n).map(|x| -(m.get(x, y).clone() * loss.get(w, x).clone())).collect();
            row.extend((0..ym).map(|j| if j == y { T::one() } else { T::zero() }));
            lp.add_le(row, T::zero())?;
        }
    }
    match lp_optimize(&lp)? {
        LpOutcome::Optimal { value, point } => Ok((value, point[..n].to_vec())),
        _ => Err(Error::Internal("prior program over the simplex has no optimum".into())),
    }
}

fn kernel_channels<T: Scalar>(kernels: &[KernelMechanism<T>]) -> Result<Vec<Channel<T>>> {
    kernels.iter().map(|k| k.channel()).collect()
}

fn check_dims<T: Scalar>(m: &Channel<T>, loss: &LossFunction<T>, kernels: &[KernelMechanism<T>]) -> Result<()> {
    let n = m.n_inputs();
    if loss.x_labels().len() != n || kernels.iter().any(|k| k.hyper.dim() != n) {
        return Err(Error::DimensionMismatch("mechanism, loss, and kernels must share the secret set".into()));
    }
    if loss.x_labels() != m.x_labels() {
        return Err(Error::InvalidInput("mechanism and loss label the secrets differently".into()));
    }
    Ok(())
}

/// Decides whether `m` minimises expected loss `ℓ` at every prior among all
/// mechanisms whose kernels are `kernels`.
pub fn check_universal_l_optimal<T: Scalar>(
    m: &Channel<T>,
    loss: &LossFunction<T>,
    kernels: &[KernelMechanism<T>],
    mode: CheckMode,
) -> Result<OptimalityVerdict<T>> {
    check_dims(m, loss, kernels)?;
    let channels = kernel_channels(kernels)?;
    match mode {
        CheckMode::Exact { budget } => exact_check(m, loss, kernels, &channels, budget),
        CheckMode::Sampled { count, seed } => sampled_check(m, loss, kernels, &channels, count, seed),
    }
}

fn exact_check<T: Scalar>(
    m: &Channel<T>,
    loss: &LossFunction<T>,
    kernels: &[KernelMechanism<T>],
    channels: &[Channel<T>],
    budget: u64,
) -> Result<OptimalityVerdict<T>> {
    let actions: Vec<Vec<Vec<usize>>> = channels.iter().map(|k| undominated_actions(k, loss)).collect();
    let total = actions.iter().fold(0u64, |acc, a| acc.saturating_add(strategy_count(a)));
    if total > budget {
        return Ok(OptimalityVerdict::Unknown {
            samples: 0,
            reason: format!("{total} strategies exceed the budget of {budget}"),
        });
    }
    let found: Option<Result<(usize, Vec<T>)>> = (0..kernels.len())
        .into_par_iter()
        .find_map_first(|i| first_violation(m, loss, &channels[i], &actions[i]).transpose().map(|r| r.map(|p| (i, p))));
    match found {
        None => Ok(OptimalityVerdict::Optimal),
        Some(Err(e)) => Err(e),
        Some(Ok((i, prior))) => certify(m, loss, kernels, channels, i, prior),
    }
}

/// The prior of the first strategy (in lexicographic order) with a positive optimum.
fn first_violation<T: Scalar>(
    m: &Channel<T>,
    loss: &LossFunction<T>,
    k: &Channel<T>,
    actions: &[Vec<usize>],
) -> Result<Option<Vec<T>>> {
    let mut digits = vec![0usize; actions.len()];
    loop {
        let strategy: Vec<usize> = digits.iter().zip(actions).map(|(&d, a)| a[d]).collect();
        let (t, prior) = worst_prior(m, loss, &strategy_loss(k, loss, &strategy))?;
        if t.is_positive_tol() {
            return Ok(Some(prior));
        }
        let mut pos = actions.len();
        loop {
            if pos == 0 {
                return Ok(None);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < actions[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

fn certify<T: Scalar>(
    m: &Channel<T>,
    loss: &LossFunction<T>,
    kernels: &[KernelMechanism<T>],
    channels: &[Channel<T>],
    i: usize,
    prior: Vec<T>,
) -> Result<OptimalityVerdict<T>> {
    let margin = posterior_uncertainty(loss, &prior, m)? - posterior_uncertainty(loss, &prior, &channels[i])?;
    if !margin.is_positive_tol() {
        return Err(Error::Internal("counterexample failed re-verification".into()));
    }
    Ok(OptimalityVerdict::Counterexample { prior, rival_index: i, rival: kernels[i].clone(), margin })
}

/// Seeded positive rational priors with denominators up to `1000·n`.
pub fn random_priors<T: Scalar>(n: usize, count: usize, seed: u64) -> Vec<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=1000)).collect();
            let total: i64 = raw.iter().sum();
            raw.into_iter().map(|v| T::from_ratio(v, total)).collect()
        })
        .collect()
}

fn sampled_check<T: Scalar>(
    m: &Channel<T>,
    loss: &LossFunction<T>,
    kernels: &[KernelMechanism<T>],
    channels: &[Channel<T>],
    count: usize,
    seed: u64,
) -> Result<OptimalityVerdict<T>> {
    let n = m.n_inputs();
    let mut priors: Vec<Vec<T>> =
        (0..n).map(|x| (0..n).map(|i| if i == x { T::one() } else { T::zero() }).collect()).collect();
    priors.push(uniform_prior(n));
    priors.extend(random_priors(n, count, seed));
    for prior in &priors {
        let um = posterior_uncertainty(loss, prior, m)?;
        for (i, k) in channels.iter().enumerate() {
            if (um.clone() - posterior_uncertainty(loss, prior, k)?).is_positive_tol() {
                return certify(m, loss, kernels, channels, i, prior.clone());
            }
        }
    }
    Ok(OptimalityVerdict::Unknown {
        samples: priors.len(),
        reason: "no counterexample among sampled priors; sampling cannot prove optimality".into(),
    })
}

/// The verdict for each kernel of `space`, in kernel order.
pub fn impossibility_sweep(
    space: &MetricSpace,
    loss: &LossFunction<Rational>,
    mode: CheckMode,
) -> Result<Vec<OptimalityVerdict<Rational>>> {
    let vertices = enumerate_vertices(&build_constraints(space))?;
    let kernels = enumerate_kernels(&vertices, space.len())?;
    let loss = loss.clone().with_x_labels(default_x_labels(space.len()))?;
    sweep_kernels(&loss, &kernels, mode)
}

/// The verdict for each kernel used as the mechanism.
pub fn sweep_kernels<T: Scalar>(
    loss: &LossFunction<T>,
    kernels: &[KernelMechanism<T>],
    mode: CheckMode,
) -> Result<Vec<OptimalityVerdict<T>>> {
    kernels.iter().map(|k| check_universal_l_optimal(&k.channel()?, loss, kernels, mode)).collect()
}

/// A two-posterior mechanism and a non-trivial monotone loss for which it is
/// universally optimal. With `(a, b)` a closest pair and `α = 1/s(a,b)`, the
/// posteriors are `(1 at a, α elsewhere)/k` and `(α at a, 1 elsewhere)/j`,
/// `k = 1 + (n-1)α`, `j = α + n - 1`, weighted `k/(k+j)` and `j/(k+j)`; they
/// average to uniform. The loss is 0-1 guessing between `a` and `b`, with zero
/// loss at every other secret.
pub fn existence_construction(space: &MetricSpace) -> Result<(Channel<Rational>, LossFunction<Rational>)> {
    let n = space.len();
    let Some((a, b)) = space.closest_pair() else {
        return Err(Error::InvalidInput("need at least two secrets".into()));
    };
    let one = Rational::from_integer(1.into());
    let alpha = one.clone() / space.stretch_at(a, b).clone();
    let rest = Rational::from_integer(((n - 1) as i64).into());
    let k = one.clone() + rest.clone() * alpha.clone();
    let j = alpha.clone() + rest;
    let first: Vec<Rational> =
        (0..n).map(|x| if x == a { one.clone() / k.clone() } else { alpha.clone() / k.clone() }).collect();
    let second: Vec<Rational> =
        (0..n).map(|x| if x == a { alpha.clone() / j.clone() } else { one.clone() / j.clone() }).collect();
    let total = k.clone() + j.clone();
    let hyper = Hyper::new(vec![k / total.clone(), j / total], vec![first, second])?;
    let channel = from_hyper(&hyper)?.with_x_labels(space.labels().to_vec())?;
    let pair = [space.labels()[a].clone(), space.labels()[b].clone()];
    let guess = LossFunction::<Rational>::bin(2)?.with_x_labels(pair.to_vec())?.extend(space.labels())?;
    Ok((channel, guess))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{binary_optimal, check_dx_private, geometric_truncated, random_response};
    use crate::metrics::{make_metric, MetricKind};
    use crate::scalar::{int, rat};

    fn kernels_of(s: &MetricSpace) -> Vec<KernelMechanism<Rational>> {
        enumerate_kernels(&enumerate_vertices(&build_constraints(s)).unwrap(), s.len()).unwrap()
    }

    fn space(kind: MetricKind) -> MetricSpace {
        make_metric(&kind, &int(2), 30).unwrap()
    }

    /// Lifting a restricted optimum always works, but the sub-type on `{0, 3}`
    /// has a stretch-8 kernel that no line(4) mechanism restricts to.
    #[test]
    fn restriction_law_only_lifts() {
        let s = space(MetricKind::Line { n: 4 });
        let ks = kernels_of(&s);
        let m = Channel::from_rows(
            [
                [(1, 12), (1, 12), (1, 6), (2, 3)],
                [(1, 6), (1, 6), (1, 3), (1, 3)],
                [(1, 3), (1, 3), (1, 6), (1, 6)],
                [(2, 3), (1, 6), (1, 12), (1, 12)],
            ]
            .iter()
            .map(|row| row.iter().map(|&(a, b)| rat(a, b)).collect())
            .collect(),
        )
        .unwrap()
        .with_x_labels(s.labels().to_vec())
        .unwrap();
        let sub = vec![s.labels()[0].clone(), s.labels()[3].clone()];
        let sub_kernels = kernels_of(&s.restrict(&sub).unwrap());
        let small = LossFunction::from_table(vec![vec![int(9), int(2)], vec![int(2), int(8)]])
            .unwrap()
            .with_x_labels(sub.clone())
            .unwrap();
        let restricted = m.restrict(&sub).unwrap().with_x_labels(crate::mechanisms::default_x_labels(2)).unwrap();
        let here = check_universal_l_optimal(
            &restricted,
            &small.clone().with_x_labels(crate::mechanisms::default_x_labels(2)).unwrap(),
            &sub_kernels,
            CheckMode::exact(),
        )
        .unwrap();
        let there = check_universal_l_optimal(&m, &small.extend(s.labels()).unwrap(), &ks, CheckMode::exact()).unwrap();
        match here {
            OptimalityVerdict::Counterexample { rival, .. } => {
                let stretch_8 = binary_optimal(&s.restrict(&sub).unwrap()).unwrap();
                assert_eq!(rival.channel().unwrap().to_hyper_uniform(), stretch_8.to_hyper_uniform());
            }
            other => panic!("expected a counterexample, got {other:?}"),
        }
        assert!(there.is_optimal());
    }

    #[test]
    fn binary_mechanism_is_optimal() {
        let s = space(MetricKind::Line { n: 2 });
        let ks = kernels_of(&s);
        let t = binary_optimal(&s).unwrap().with_x_labels(crate::mechanisms::default_x_labels(2)).unwrap();
        for loss in [
            LossFunction::<Rational>::bin(2).unwrap(),
            LossFunction::nib(2).unwrap(),
            LossFunction::from_table(vec![vec![int(3), int(0)], vec![int(1), int(2)], vec![int(2), int(2)]]).unwrap(),
        ] {
            assert!(check_universal_l_optimal(&t, &loss, &ks, CheckMode::exact()).unwrap().is_optimal());
        }
    }

    #[test]
    fn geometric_is_optimal_on_the_line() {
        let ks = kernels_of(&space(MetricKind::Line { n: 3 }));
        let g = geometric_truncated(3, &rat(1, 2)).unwrap();
        let bin = LossFunction::bin(3).unwrap();
        assert!(check_universal_l_optimal(&g, &bin, &ks, CheckMode::exact()).unwrap().is_optimal());
        let sweep = impossibility_sweep(&space(MetricKind::Line { n: 3 }), &bin, CheckMode::exact()).unwrap();
        assert_eq!(sweep.iter().filter(|v| v.is_optimal()).count(), 1);
        assert_eq!(sweep.iter().filter(|v| v.is_counterexample()).count(), 1);
    }

    #[test]
    fn random_response_is_not_optimal() {
        let ks = kernels_of(&space(MetricKind::Discrete { n: 3 }));
        let rr = random_response(3, &rat(1, 2)).unwrap();
        let bin = LossFunction::bin(3).unwrap();
        match check_universal_l_optimal(&rr, &bin, &ks, CheckMode::exact()).unwrap() {
            OptimalityVerdict::Counterexample { prior, rival, margin, .. } => {
                assert!(margin > int(0));
                let diff = posterior_uncertainty(&bin, &prior, &rr).unwrap()
                    - posterior_uncertainty(&bin, &prior, &rival.channel().unwrap()).unwrap();
                assert_eq!(diff, margin);
            }
            other => panic!("{other:?}"),
        }
        let sweep = sweep_kernels(&bin, &ks, CheckMode::exact()).unwrap();
        assert_eq!(sweep.len(), 5);
        assert!(sweep.iter().all(|v| v.is_counterexample()));
        let sampled = check_universal_l_optimal(&rr, &bin, &ks, CheckMode::Sampled { count: 50, seed: 7 }).unwrap();
        assert!(sampled.is_counterexample());
    }

    #[test]
    fn trivial_losses_make_everything_optimal() {
        let ks = kernels_of(&space(MetricKind::Discrete { n: 3 }));
        let flat = LossFunction::from_table(vec![vec![int(1), int(2), int(0)]]).unwrap();
        assert!(sweep_kernels(&flat, &ks, CheckMode::exact()).unwrap().iter().all(|v| v.is_optimal()));
        let sampled =
            check_universal_l_optimal(&ks[0].channel().unwrap(), &flat, &ks, CheckMode::Sampled { count: 5, seed: 1 })
                .unwrap();
        assert!(matches!(sampled, OptimalityVerdict::Unknown { .. }));
    }

    #[test]
    fn budget_refusal() {
        let ks = kernels_of(&space(MetricKind::Line { n: 3 }));
        let g = geometric_truncated(3, &rat(1, 2)).unwrap();
        let v =
            check_universal_l_optimal(&g, &LossFunction::bin(3).unwrap(), &ks, CheckMode::Exact { budget: 3 }).unwrap();
        assert!(matches!(v, OptimalityVerdict::Unknown { .. }));
    }

    #[test]
    fn existence_construction_is_private_and_optimal() {
        for kind in [MetricKind::Line { n: 4 }, MetricKind::Discrete { n: 4 }, MetricKind::Hamming { bits: 2 }] {
            let s = space(kind);
            let (m, loss) = existence_construction(&s).unwrap();
            assert!(check_dx_private(&m, &s).unwrap().is_ok());
            assert!(!loss.is_trivial());
            let ks = kernels_of(&s);
            let m = m.with_x_labels(crate::mechanisms::default_x_labels(s.len())).unwrap();
            let loss = loss.with_x_labels(crate::mechanisms::default_x_labels(s.len())).unwrap();
            assert!(check_universal_l_optimal(&m, &loss, &ks, CheckMode::exact()).unwrap().is_optimal());
        }
    }

    #[test]
    fn verdict_json() {
        let v: OptimalityVerdict<Rational> = OptimalityVerdict::Optimal;
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"verdict":"optimal"}"#);
    }

    #[test]
    fn priors_are_seeded() {
        let a: Vec<Vec<Rational>> = random_priors(3, 4, 9);
        assert_eq!(a, random_priors(3, 4, 9));
        assert!(a.iter().all(|p| p.iter().sum::<Rational>() == int(1)));
    }
}
