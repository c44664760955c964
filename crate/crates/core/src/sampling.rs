//! Seeded random instances: priors, losses, gains, and dx-private channels.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::Matrix;
use crate::loss::LossFunction;
use crate::mechanisms::{from_hyper, Channel, Hyper};
use crate::metrics::MetricSpace;
use crate::scalar::{int, rat, Rational};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normalize(v: Vec<Rational>) -> Vec<Rational> {
    let total: Rational = v.iter().sum();
    v.into_iter().map(|x| x / total.clone()).collect()
}

/// Full-support prior with integer weights in `1..=1000`.
pub fn random_prior<R: Rng>(rng: &mut R, n: usize) -> Vec<Rational> {
    normalize((0..n).map(|_| int(rng.gen_range(1..=1000))).collect())
}

/// A prior that is sometimes degenerate: a point mass, a two-point prior, or full support.
pub fn random_prior_any<R: Rng>(rng: &mut R, n: usize) -> Vec<Rational> {
    match rng.gen_range(0..4) {
        0 => {
            let x = rng.gen_range(0..n);
            (0..n).map(|i| int((i == x) as i64)).collect()
        }
        1 if n > 1 => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(rng);
            let mut v = vec![int(0); n];
            v[idx[0]] = int(rng.gen_range(1..=9));
            v[idx[1]] = int(rng.gen_range(1..=9));
            normalize(v)
        }
        _ => random_prior(rng, n),
    }
}

/// A table of `rows × n` integers in `0..=max`.
pub fn random_table<R: Rng>(rng: &mut R, rows: usize, n: usize, max: i64) -> Matrix<Rational> {
    Matrix::from_fn(rows, n, |_, _| int(rng.gen_range(0..=max)))
}

/// A loss with between one and `max_actions` actions and entries in `0..=10`.
pub fn random_loss<R: Rng>(rng: &mut R, n: usize, max_actions: usize) -> Result<LossFunction<Rational>> {
    let k = rng.gen_range(1..=max_actions.max(1));
    LossFunction::from_table(random_table(rng, k, n, 10).to_rows())
}

/// A non-negative gain table with entries in `[0, 1]`.
pub fn random_gain<R: Rng>(rng: &mut R, n: usize, max_actions: usize) -> Matrix<Rational> {
    let k = rng.gen_range(1..=max_actions.max(1));
    Matrix::from_fn(k, n, |_, _| rat(rng.gen_range(0..=20), 20))
}

/// `ℓ(w, x) = m(d(x, α(w)))` for a random injection `α` and random
/// non-decreasing (or increasing, when `strict`) `m` over the attained distances.
pub fn random_monotone_loss<R: Rng>(rng: &mut R, space: &MetricSpace, strict: bool) -> Result<LossFunction<Rational>> {
    let n = space.len();
    let mut distances: Vec<Rational> =
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| space.sq_distance(i, j).clone()).collect();
    distances.sort();
    distances.dedup();
    let mut level = int(rng.gen_range(0..=3));
    let mut m = Vec::with_capacity(distances.len());
    for _ in &distances {
        m.push(level.clone());
        let step = if strict { rng.gen_range(1..=4) } else { rng.gen_range(0..=3) };
        level += int(step);
    }
    let mut alpha: Vec<usize> = (0..n).collect();
    alpha.shuffle(rng);
    alpha.truncate(rng.gen_range(2.min(n)..=n));
    let table = Matrix::from_fn(alpha.len(), n, |w, x| {
        let q = space.sq_distance(x, alpha[w]);
        m[distances.binary_search(q).expect("attained distance")].clone()
    });
    let w_labels = alpha.iter().map(|&a| space.labels()[a].clone()).collect();
    LossFunction::new(w_labels, space.labels().to_vec(), table)
}

/// A uniform-prior posterior: the min-plus closure of random weights under
/// the stretch factors, normalised.
fn random_inner<R: Rng>(rng: &mut R, space: &MetricSpace) -> Vec<Rational> {
    let n = space.len();
    let raw: Vec<Rational> =
        (0..n).map(|_| if rng.gen_bool(0.3) { int(1_000_000) } else { int(rng.gen_range(1..=1000)) }).collect();
    let closed = (0..n)
        .map(|x| (0..n).map(|z| space.stretch_at(x, z).clone() * raw[z].clone()).min().expect("non-empty"))
        .collect();
    normalize(closed)
}

fn respects_stretch(space: &MetricSpace, v: &[Rational]) -> bool {
    v.iter().all(|x| *x >= int(0))
        && space.tight_pairs().iter().all(|&(a, b)| {
            v[a] <= space.stretch_at(a, b).clone() * v[b].clone()
                && v[b] <= space.stretch_at(b, a).clone() * v[a].clone()
        })
}

/// A random dx-private channel for `space`. Its posteriors at the uniform prior
/// are random points of the constraint polytope plus one balancing posterior
/// near uniform that makes them average to uniform.
pub fn random_private_channel<R: Rng>(rng: &mut R, space: &MetricSpace) -> Result<Channel<Rational>> {
    let n = space.len();
    let k = rng.gen_range(1..=n + 1);
    let inners: Vec<Vec<Rational>> = (0..k).map(|_| random_inner(rng, space)).collect();
    let weights = normalize((0..k).map(|_| int(rng.gen_range(1..=100))).collect());
    let mean: Vec<Rational> =
        (0..n).map(|x| inners.iter().zip(&weights).map(|(v, w)| v[x].clone() * w.clone()).sum()).collect();
    let u = rat(1, n as i64);
    let mut rest = rat(1, 2);
    let balance = loop {
        let a0 = int(1) - rest.clone();
        let shift = rest.clone() / a0.clone();
        let candidate: Vec<Rational> =
            mean.iter().map(|m| u.clone() + shift.clone() * (u.clone() - m.clone())).collect();
        if respects_stretch(space, &candidate) {
            break candidate;
        }
        rest /= int(2);
    };
    let mut outers = vec![int(1) - rest.clone()];
    outers.extend(weights.into_iter().map(|w| w * rest.clone()));
    let mut all = vec![balance];
    all.extend(inners);
    from_hyper(&Hyper::new(outers, all)?)?.with_x_labels(space.labels().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{check_dx_private_full, uniform_prior};
    use crate::metrics::{make_metric, MetricKind};

    #[test]
    fn channels_are_private_and_seeded() {
        for kind in [MetricKind::Line { n: 4 }, MetricKind::Discrete { n: 3 }, MetricKind::Hamming { bits: 2 }] {
            let space = make_metric(&kind, &int(2), 30).unwrap();
            let mut r = rng(11);
            for _ in 0..20 {
                let c = random_private_channel(&mut r, &space).unwrap();
                assert!(check_dx_private_full(&c, &space).unwrap().is_ok());
                assert_eq!(
                    c.to_hyper(&uniform_prior(space.len())).unwrap().prior(),
                    uniform_prior::<Rational>(space.len())
                );
            }
            assert_eq!(
                random_private_channel(&mut rng(5), &space).unwrap(),
                random_private_channel(&mut rng(5), &space).unwrap()
            );
        }
    }

    #[test]
    fn monotone_losses_classify() {
        use crate::loss::{classify_monotone, MonotoneClass};
        let space = make_metric(&MetricKind::Discrete { n: 3 }, &int(2), 30).unwrap();
        let mut r = rng(3);
        for _ in 0..20 {
            let l = random_monotone_loss(&mut r, &space, true).unwrap();
            assert_eq!(classify_monotone(&l, &space).unwrap(), MonotoneClass::StrictlyMonotone);
        }
    }

    #[test]
    fn priors_sum_to_one() {
        let mut r = rng(1);
        for _ in 0..50 {
            let p = random_prior_any(&mut r, 4);
            assert_eq!(p.iter().sum::<Rational>(), int(1));
        }
    }
}
