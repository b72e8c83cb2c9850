use corners_lab::densities::{
    log_kernel_wishart, logdens_jacobi, logdens_mvb_joint, transform_ho_to_jacobi,
    transform_jacobi_to_ho,
};
use corners_lab::ensembles::{
    decimal17, sample_jacobi_multilevel, sample_wishart_multilevel, JacobiParams, MultilevelSample,
    WishartParams,
};
use corners_lab::hyperfun::{bessel_b, hciz, HciZRoute, HyperParams, QuadSpec};
use corners_lab::qseries::{log_qpoch_inf, macdonald_p, Partition, QParams};
use corners_lab::rng::substream;
use corners_lab::{LogValue, Spectrum};
use proptest::prelude::*;

fn rates(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..3.0, n)
}

fn wishart() -> impl Strategy<Value = (WishartParams, usize)> {
    (1usize..=4, 1usize..=4, prop::bool::ANY).prop_flat_map(|(n, m, real)| {
        (rates(n), prop::collection::vec(0.0f64..2.0, m)).prop_map(move |(pi, pi_hat)| {
            (
                WishartParams::new(if real { 1 } else { 2 }, pi, pi_hat).unwrap(),
                m,
            )
        })
    })
}

fn jacobi() -> impl Strategy<Value = JacobiParams> {
    (1usize..=4, 0usize..=3, prop::bool::ANY)
        .prop_flat_map(|(n, extra, real)| (Just(n), Just(extra), Just(real), 1..=n))
        .prop_map(|(n, extra, real, m)| {
            JacobiParams::new(if real { 1 } else { 2 }, n + extra, n, m).unwrap()
        })
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] >= w[1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wishart_draws_interlace((p, m) in wishart(), seed in any::<u64>()) {
        let s = sample_wishart_multilevel(&p, m, &mut substream(seed, 0)).unwrap();
        prop_assert_eq!(s.depth(), m);
        for l in 1..=m {
            prop_assert_eq!(s.level(l).len(), l.min(p.n()));
            prop_assert!(decreasing(s.level(l).values()));
            prop_assert!(s.level(l).values().iter().all(|&v| v >= 0.0 && v.is_finite()));
        }
        prop_assert!(s.is_interlacing());
    }

    #[test]
    fn jacobi_draws_interlace_inside_the_unit_interval(p in jacobi(), seed in any::<u64>()) {
        let s = sample_jacobi_multilevel(&p, &mut substream(seed, 1)).unwrap();
        prop_assert!(s.is_interlacing());
        for l in 1..=p.m_max {
            prop_assert!(s.level(l).values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn jacobi_transform_round_trips(p in jacobi(), seed in any::<u64>()) {
        let s = sample_jacobi_multilevel(&p, &mut substream(seed, 2)).unwrap();
        if s.levels.iter().all(|l| l.values().iter().all(|&v| v > 0.0 && v < 1.0)) {
            let (ho, jac) = transform_jacobi_to_ho(&s).unwrap();
            let (back, jac_back) = transform_ho_to_jacobi(&ho).unwrap();
            prop_assert!((jac + jac_back).abs() < 1e-9 * (1.0 + jac.abs()));
            for (a, b) in s.levels.iter().zip(&back.levels) {
                for (x, y) in a.values().iter().zip(b.values()) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn non_interlacing_points_have_zero_density(a in 0.1f64..2.0, gap in 0.01f64..1.0, b in 0.1f64..2.0) {
        // μ^1 = (a + gap) above μ^2_1 = a violates μ^2_1 ≥ μ^1_1
        let p = WishartParams::new(2, vec![1.0, 1.5], vec![0.3, 0.1]).unwrap();
        let s = MultilevelSample::new(vec![
            Spectrum::new(vec![a + gap]).unwrap(),
            Spectrum::new(vec![a, a.min(b) * 0.5]).unwrap(),
        ]);
        prop_assert!(logdens_mvb_joint(&s, &p, &QuadSpec::default()).unwrap().is_zero());
        prop_assert!(log_kernel_wishart(s.level(1), s.level(2), 2, &p, &HciZRoute::Determinant).unwrap().is_zero());
        let jp = JacobiParams::new(2, 4, 2, 2).unwrap();
        let t = MultilevelSample::new(vec![
            Spectrum::new(vec![0.9]).unwrap(),
            Spectrum::new(vec![0.8, 0.1]).unwrap(),
        ]);
        prop_assert!(logdens_jacobi(&t, &jp).unwrap().is_zero());
    }

    #[test]
    fn unsorted_input_is_sorted_decreasing(v in prop::collection::vec(-5.0f64..5.0, 0..6)) {
        let s = Spectrum::new(v.clone()).unwrap();
        prop_assert!(decreasing(s.values()));
        prop_assert_eq!(s.len(), v.len());
        prop_assert!(Spectrum::from_sorted(v.clone()).is_ok() == decreasing(&v));
    }

    #[test]
    fn decimal_output_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(decimal17(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn log_sum_matches_direct_sum(xs in prop::collection::vec(-30.0f64..30.0, 1..8)) {
        let direct: f64 = xs.iter().map(|x| x.exp()).sum();
        let s = LogValue::sum(xs.iter().map(|&x| LogValue::from_log(x)));
        prop_assert!((s.ln() - direct.ln()).abs() < 1e-12);
    }

    #[test]
    fn hciz_is_symmetric_in_its_arguments(a in rates(2), b in rates(2)) {
        prop_assume!((a[0] - a[1]).abs() > 1e-3 && (b[0] - b[1]).abs() > 1e-3);
        let q = QuadSpec::double_exponential(5, 1e-8);
        let ab = hciz(&a, &b, 2, &HciZRoute::Bessel(q)).unwrap().log_value;
        let ba = hciz(&b, &a, 2, &HciZRoute::Bessel(q)).unwrap().log_value;
        let det = hciz(&a, &b, 2, &HciZRoute::Determinant).unwrap().log_value;
        prop_assert!((ab - ba).abs() < 1e-8);
        prop_assert!((ab - det).abs() < 1e-7);
    }

    #[test]
    fn bessel_rescaling(l in rates(2), s in prop::collection::vec(-1.0f64..1.0, 2), c in 0.3f64..3.0, th in prop::sample::select(vec![0.5, 1.0, 2.0])) {
        let mut lam = l.clone();
        lam.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(lam[0] - lam[1] > 1e-3);
        let q = QuadSpec::double_exponential(6, 1e-9);
        let cs: Vec<f64> = s.iter().map(|v| c * v).collect();
        let cl: Vec<f64> = lam.iter().map(|v| c * v).collect();
        let left = bessel_b(&HyperParams::new(th, lam, cs).unwrap(), &q).unwrap().log_value;
        let right = bessel_b(&HyperParams::new(th, cl, s).unwrap(), &q).unwrap().log_value;
        prop_assert!((left - right).abs() < 1e-9);
    }

    #[test]
    fn qpoch_shift(a in -0.9f64..0.9, q in 0.05f64..0.95) {
        let lhs = log_qpoch_inf(a, q).unwrap();
        let rhs = (1.0 - a).ln() + log_qpoch_inf(a * q, q).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn macdonald_polynomials_are_symmetric_and_homogeneous(
        parts in prop::collection::vec(0u32..4, 1..3),
        x in prop::collection::vec(0.05f64..0.9, 2),
        q in 0.1f64..0.9,
        t in 0.1f64..0.9,
        c in 0.2f64..2.0,
    ) {
        let mut parts = parts;
        parts.sort_unstable_by(|a, b| b.cmp(a));
        let lambda = Partition::new(parts).unwrap();
        let qt = QParams::from_qt(q, t).unwrap();
        let p = macdonald_p(&lambda, &x, qt).unwrap();
        let swapped = macdonald_p(&lambda, &[x[1], x[0]], qt).unwrap();
        let scaled = macdonald_p(&lambda, &[c * x[0], c * x[1]], qt).unwrap();
        prop_assert!((p - swapped).abs() <= 1e-10 * p.abs().max(1e-300));
        prop_assert!((scaled - c.powi(lambda.size() as i32) * p).abs() <= 1e-10 * scaled.abs().max(1e-300));
    }
}
