use proptest::prelude::*;

use walshlab::khintchine::{ratio, scan_constants, SearchMode};
use walshlab::norms::{exp_integral, localize, lp_norm, norm, orlicz_norm};
use walshlab::projection::{
    averaging, operator_norm_estimate, rademacher_projection, sign_flip, OperatorMatrix,
};
use walshlab::walsh::{rademacher, theta_matrix, walsh, walsh_product_index};
use walshlab::{DyadicSet, DyadicStep, NormSpec, PaleyIndex};

fn step(max_order: u32, bound: f64) -> impl Strategy<Value = DyadicStep> {
    (0..=max_order).prop_flat_map(move |n| {
        prop::collection::vec(-bound..bound, 1usize << n)
            .prop_map(move |v| DyadicStep::new(n, v).unwrap())
    })
}

fn nonzero_step(max_order: u32) -> impl Strategy<Value = DyadicStep> {
    step(max_order, 1e3).prop_filter("nonzero", |f| f.max_abs() > 0.0)
}

fn dyadic_set() -> impl Strategy<Value = DyadicSet> {
    (1..=4u32).prop_flat_map(|s| {
        prop::collection::vec(any::<bool>(), 1usize << s)
            .prop_filter("nonempty", |m| m.iter().any(|&b| b))
            .prop_map(move |m| DyadicSet::new(s, m).unwrap())
    })
}

fn base_spec() -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        (0.25..6.0f64).prop_map(|p| NormSpec::lp(p).unwrap()),
        Just(NormSpec::lp(1.0).unwrap()),
        Just(NormSpec::lp(2.0).unwrap()),
        Just(NormSpec::l_inf()),
        (0.5..4.0f64).prop_map(|p| NormSpec::orlicz_exp(p).unwrap()),
        Just(NormSpec::orlicz_exp(2.0).unwrap()),
    ]
}

fn any_spec() -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        3 => base_spec(),
        1 => (dyadic_set(), base_spec()).prop_map(|(e, s)| NormSpec::local(e, s).unwrap()),
    ]
}

fn within_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinement_keeps_distribution(f in step(8, 1e3), extra in 0..=4u32) {
        let fine = f.refine(f.order() + extra).unwrap();
        prop_assert_eq!(fine.distribution(), f.distribution());
        prop_assert_eq!(fine.integral(), f.integral());
    }

    #[test]
    fn distribution_measures_sum_to_one(f in step(10, 5.0)) {
        prop_assert_eq!(f.distribution().total_measure(), 1.0);
    }

    #[test]
    fn integral_is_linear(f in step(8, 1e3), g in step(8, 1e3)) {
        let sum = (&f + &g).integral();
        prop_assert!((sum - (f.integral() + g.integral())).abs() <= 1e-12);
    }

    #[test]
    fn rearrangement_keeps_distribution(f in step(10, 1e3)) {
        let r = f.decreasing_rearrangement();
        prop_assert_eq!(r.distribution(), f.distribution());
        prop_assert!(r.values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn step_serde_round_trip(f in step(6, 1e6)) {
        let json = serde_json::to_string(&f).unwrap();
        prop_assert_eq!(serde_json::from_str::<DyadicStep>(&json).unwrap(), f);
    }

    #[test]
    fn norms_are_rearrangement_invariant(f in step(10, 1e3), spec in base_spec()) {
        let a = norm(&f, &spec).unwrap();
        let b = norm(&f.decreasing_rearrangement(), &spec).unwrap();
        prop_assert!(within_rel(a, b, 1e-12), "{} vs {}", a, b);
    }

    #[test]
    fn luxemburg_solves_unit_integral(f in nonzero_step(8), p in 0.5..4.0f64) {
        let full = DyadicSet::full();
        let lambda = orlicz_norm(&f, p, &full).unwrap();
        let value = exp_integral(&f, lambda, &full, p).unwrap();
        prop_assert!((value - 1.0).abs() <= 1e-9, "∫Φ = {}", value);
    }

    #[test]
    fn norms_respect_the_lattice(
        f in step(8, 1e3),
        factors in prop::collection::vec(1.0..3.0f64, 1usize << 8),
        spec in any_spec(),
    ) {
        let g = DyadicStep::from_fn(f.order(), |j| f.value(j) * factors[j]).unwrap();
        let (nf, ng) = (norm(&f, &spec).unwrap(), norm(&g, &spec).unwrap());
        prop_assert!(nf <= ng * (1.0 + 1e-12) + 1e-12, "{} > {}", nf, ng);
    }

    #[test]
    fn lp_norms_increase_with_p(f in step(10, 1e3)) {
        let norms: Vec<f64> = [0.5, 1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&p| lp_norm(&f, p).unwrap())
            .collect();
        for w in norms.windows(2) {
            prop_assert!(w[0] <= w[1] * (1.0 + 1e-12), "{:?}", norms);
        }
    }

    #[test]
    fn localizing_to_the_whole_interval_is_identity(f in step(10, 1e3)) {
        let local = localize(&f, &DyadicSet::full()).unwrap();
        prop_assert_eq!(local.values(), f.values());
    }

    #[test]
    fn parseval_ratio(
        indices in prop::collection::hash_set(1u64..=4096, 1..=10),
        seed_coeffs in prop::collection::vec(-10.0..10.0f64, 10),
    ) {
        let indices: Vec<u64> = indices.into_iter().collect();
        let coeffs = &seed_coeffs[..indices.len()];
        prop_assume!(coeffs.iter().any(|&a| a != 0.0));
        let r = ratio(coeffs, &indices, &NormSpec::lp(2.0).unwrap()).unwrap();
        prop_assert!((r - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sign_flips_are_isometries(f in step(8, 1e3), j in any::<u64>(), spec in any_spec()) {
        let j = j % f.len() as u64;
        let flipped = sign_flip(&f, j).unwrap();
        let (a, b) = (norm(&f, &spec).unwrap(), norm(&flipped, &spec).unwrap());
        if matches!(spec, NormSpec::Local { .. }) {
            // a local space only sees E; T_j moves values across E's boundary
            prop_assert_eq!(flipped.distribution(), f.distribution());
        } else {
            prop_assert!(within_rel(a, b, 1e-12), "{} vs {}", a, b);
        }
    }

    #[test]
    fn averaging_composes(f in step(10, 1e3), s in 0..=10u32, t in 0..=10u32) {
        let n = f.order();
        let (s, t) = (s.min(n), t.min(n));
        let lhs = averaging(&averaging(&f, t).unwrap(), s).unwrap();
        prop_assert_eq!(lhs, averaging(&f, s.min(t)).unwrap());
    }

    #[test]
    fn projection_is_self_adjoint(
        n in 1..=8u32,
        picks in prop::collection::hash_set(0u64..256, 1..8),
        a in prop::collection::vec(-5.0..5.0f64, 256),
        b in prop::collection::vec(-5.0..5.0f64, 256),
    ) {
        let dim = 1usize << n;
        let selected: Vec<u64> = picks.into_iter().map(|k| k % dim as u64).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let f = DyadicStep::new(n, a[..dim].to_vec()).unwrap();
        let g = DyadicStep::new(n, b[..dim].to_vec()).unwrap();
        let lhs = (&rademacher_projection(&f, &selected).unwrap() * &g).integral();
        let rhs = (&f * &rademacher_projection(&g, &selected).unwrap()).integral();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{} vs {}", lhs, rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn projection_norm_is_one(n in 1..=6u32, picks in prop::collection::btree_set(0u64..64, 1..6), seed in any::<u64>()) {
        let dim = 1u64 << n;
        let selected: Vec<u64> = picks.into_iter().map(|k| k % dim).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let p = OperatorMatrix::projection(n, &selected).unwrap();
        let est = operator_norm_estimate(&p, &NormSpec::lp(2.0).unwrap(), 30, seed).unwrap();
        prop_assert!((est - 1.0).abs() <= 1e-9, "{}", est);
    }

    #[test]
    fn scans_are_monotone_in_samples(seed in any::<u64>(), q in 1.2..3.5f64, p in 1.0..6.0f64) {
        let spec = NormSpec::lp(p).unwrap();
        let small = scan_constants(&spec, q, 3, 40, seed, SearchMode::Random).unwrap();
        let large = scan_constants(&spec, q, 3, 120, seed, SearchMode::Random).unwrap();
        prop_assert!(large.b_hat >= small.b_hat);
        prop_assert!(large.a_hat <= small.a_hat);
        prop_assert!(0.0 < large.a_hat && large.a_hat <= large.b_hat);
        prop_assert!(large.witnesses_reproduce().unwrap());
    }
}

#[test]
fn scans_do_not_depend_on_thread_count() {
    let spec = NormSpec::lp(5.0).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| scan_constants(&spec, 1.7, 4, 500, 99, SearchMode::Ascent).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

#[test]
fn walsh_index_group_law() {
    for i in 0..256u64 {
        for j in 0..256u64 {
            let (a, b) = (PaleyIndex(i), PaleyIndex(j));
            assert_eq!(walsh_product_index(a, b), walsh_product_index(b, a));
            assert_eq!(walsh_product_index(walsh_product_index(a, b), b), a);
            let c = PaleyIndex((i * 31 + j * 17) % 256);
            assert_eq!(
                walsh_product_index(walsh_product_index(a, b), c),
                walsh_product_index(a, walsh_product_index(b, c))
            );
        }
    }
}

#[test]
fn walsh_matches_rademacher_products() {
    let n = 10;
    let rad: Vec<DyadicStep> = (1..=n).map(|k| rademacher(k, n).unwrap()).collect();
    for k in 0..1u64 << n {
        // w_k = Π r_{i+1} over the set bits i of k
        let mut product = DyadicStep::constant(n, 1.0).unwrap();
        for (i, r) in rad.iter().enumerate() {
            if k >> i & 1 == 1 {
                product = &product * r;
            }
        }
        assert_eq!(walsh(k, n).unwrap(), product, "k = {k}");
    }
}

#[test]
fn walsh_system_is_orthonormal() {
    let n = 8;
    let fns: Vec<DyadicStep> = (0..256u64).map(|k| walsh(k, n).unwrap()).collect();
    for i in 0..256 {
        for j in 0..256 {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert_eq!((&fns[i] * &fns[j]).integral(), expected, "i={i} j={j}");
        }
    }
}

#[test]
fn theta_normalised_gram_is_identity() {
    for n in 1..=10 {
        let theta = theta_matrix(n).unwrap();
        let dim = theta.dim() as i64;
        let gram = theta.gram();
        for (idx, &g) in gram.iter().enumerate() {
            let diag = idx / theta.dim() == idx % theta.dim();
            assert_eq!(g, if diag { dim } else { 0 }, "n={n}");
        }
    }
}
