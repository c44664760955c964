use mdp_core::analysis::{
    add_capacity_channel, channel_capacity, mult_capacity_channel, posterior_uncertainty, posterior_vulnerability,
    prior_uncertainty, prior_vulnerability, refines, type_capacity_lp, CapacityMode,
};
use mdp_core::geometry::{build_constraints, enumerate_vertices, enumerate_vertices_by_subsets, is_vertex_mechanism};
use mdp_core::mechanisms::{check_dx_private_full, from_hyper, Channel};
use mdp_core::sampling::{random_gain, random_loss, random_prior_any, random_private_channel, rng};
use mdp_core::scalar::{format_rational, int, parse_rational, rat};
use mdp_core::{make_metric, MetricKind, MetricSpace, Rational};
use proptest::prelude::*;
use rand::Rng;

fn space_for(i: usize) -> MetricSpace {
    let kind = match i % 5 {
        0 => MetricKind::Line { n: 3 },
        1 => MetricKind::Line { n: 4 },
        2 => MetricKind::Discrete { n: 3 },
        3 => MetricKind::Discrete { n: 4 },
        _ => MetricKind::Hamming { bits: 2 },
    };
    make_metric(&kind, &int(2), 30).unwrap()
}

fn random_stochastic(r: &mut impl Rng, n: usize, m: usize) -> Channel<Rational> {
    let rows = (0..n)
        .map(|_| {
            let w: Vec<i64> = (0..m).map(|_| r.gen_range(0..=6)).collect();
            let total: i64 = w.iter().sum();
            if total == 0 {
                let mut row = vec![int(0); m];
                row[0] = int(1);
                row
            } else {
                w.into_iter().map(|v| rat(v, total)).collect()
            }
        })
        .collect();
    Channel::from_rows(rows).unwrap()
}

/// A finite metric on `n` points: shortest paths over random integer edge weights.
#[allow(clippy::needless_range_loop)]
fn random_custom_metric(r: &mut impl Rng, n: usize) -> Vec<Vec<Rational>> {
    let mut d = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = r.gen_range(1..=3);
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    d.into_iter().map(|row| row.into_iter().map(int).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn rationals_round_trip(num in -10_000i64..10_000, den in 1i64..10_000) {
        let q = rat(num, den);
        prop_assert_eq!(parse_rational(&format_rational(&q)).unwrap(), q);
    }

    #[test]
    fn leakage_is_bounded_by_capacities(seed in any::<u64>(), which in 0usize..5) {
        let s = space_for(which);
        let mut r = rng(seed);
        let c = random_private_channel(&mut r, &s).unwrap();
        let g = random_gain(&mut r, s.len(), 3);
        let pi = random_prior_any(&mut r, s.len());
        let before = prior_vulnerability(&g, &pi).unwrap();
        let after = posterior_vulnerability(&g, &pi, &c).unwrap();
        prop_assert!(after >= before);
        prop_assert!(after <= before.clone() * mult_capacity_channel(&c));
        prop_assert!(after - before <= add_capacity_channel(&c));
    }

    #[test]
    fn private_channels_stay_below_type_capacity(seed in any::<u64>(), which in 0usize..4) {
        let s = space_for(which);
        let c = random_private_channel(&mut rng(seed), &s).unwrap();
        prop_assert!(check_dx_private_full(&c, &s).unwrap().is_ok());
        for mode in [CapacityMode::Multiplicative, CapacityMode::Additive] {
            let bound = type_capacity_lp(&s, mode).unwrap().value;
            prop_assert!(channel_capacity(&c, mode).value <= bound);
        }
    }

    #[test]
    fn post_processing_refines_and_never_helps(seed in any::<u64>(), n in 2usize..5, m in 1usize..4, k in 1usize..4) {
        let mut r = rng(seed);
        let b = random_stochastic(&mut r, n, m);
        let post = random_stochastic(&mut r, m, k);
        let a = b.compose(&post).unwrap();
        let witness = refines(&b, &a).unwrap();
        prop_assert!(witness.holds());
        let l = random_loss(&mut r, n, 3).unwrap();
        let pi = random_prior_any(&mut r, n);
        let fine = posterior_uncertainty(&l, &pi, &b).unwrap();
        let coarse = posterior_uncertainty(&l, &pi, &a).unwrap();
        prop_assert!(fine <= coarse);
        prop_assert!(coarse <= prior_uncertainty(&l, &pi).unwrap());
    }

    #[test]
    fn hyper_round_trip_is_identity(seed in any::<u64>(), n in 2usize..5, m in 1usize..5) {
        let mut r = rng(seed);
        let c = random_stochastic(&mut r, n, m);
        let pi = random_prior_any(&mut r, n);
        let h = c.to_hyper(&pi).unwrap();
        prop_assert_eq!(h.prior(), pi.clone());
        let support: Vec<usize> = (0..n).filter(|&x| pi[x] > int(0)).collect();
        if support.len() == n {
            let back = from_hyper(&c.to_hyper_uniform()).unwrap();
            prop_assert_eq!(back.to_hyper_uniform(), c.to_hyper_uniform());
            prop_assert_eq!(back.to_hyper(&pi).unwrap(), h);
        }
    }

    #[test]
    fn vertex_routes_agree_on_custom_metrics(seed in any::<u64>(), n in 2usize..5, base_idx in 0usize..3) {
        let mut r = rng(seed);
        let distances = random_custom_metric(&mut r, n);
        let base = [rat(3, 2), int(2), int(3)][base_idx].clone();
        let s = make_metric(&MetricKind::Custom { distances, labels: None }, &base, 30).unwrap();
        let cs = build_constraints(&s);
        let mut forest = enumerate_vertices(&cs).unwrap();
        let mut subsets = enumerate_vertices_by_subsets(&cs).unwrap();
        forest.sort();
        subsets.sort();
        prop_assert_eq!(&forest, &subsets);
        for v in &forest {
            prop_assert!(cs.is_vertex(v));
            prop_assert!(cs.contains(v));
        }
    }

    #[test]
    fn vertex_hyper_is_vertex_mechanism(seed in any::<u64>(), which in 0usize..5) {
        let s = space_for(which);
        let cs = build_constraints(&s);
        let vertices = enumerate_vertices(&cs).unwrap();
        let c = random_private_channel(&mut rng(seed), &s).unwrap();
        let h = mdp_core::geometry::anti_refine(&c, &vertices).unwrap();
        prop_assert!(is_vertex_mechanism(&h, &cs));
        let v = from_hyper(&h).unwrap().with_x_labels(s.labels().to_vec()).unwrap();
        prop_assert!(refines(&v, &c).unwrap().holds());
    }
}
