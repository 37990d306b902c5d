use std::sync::OnceLock;

use proptest::prelude::*;

use attacklab::attack::{indicator, AgentSet, AttackScenario, AttackStrategy, CostModel};
use attacklab::convergence::{build_influence_cache, conv_error, InfluenceCache, SpectralForm};
use attacklab::graph::{spectral_decompose, Graph};
use attacklab::presets::{reference_scenario, two_dim_k};
use attacklab::report::fmt_g17;
use attacklab::selection::{brute_force_with, degree_baseline_with, fdi_assa_with, ifdi_assa_with, random_baseline_with};

fn reference() -> &'static (AttackScenario, InfluenceCache) {
    static CELL: OnceLock<(AttackScenario, InfluenceCache)> = OnceLock::new();
    CELL.get_or_init(|| {
        let s = reference_scenario(AttackStrategy::Constant { k: two_dim_k() }, 30.0);
        let cache = build_influence_cache(&s).unwrap();
        (s, cache)
    })
}

fn mask6() -> impl Strategy<Value = AgentSet> {
    (0u64..64).prop_map(AgentSet::from_mask)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mask_and_indicator_round_trip(mask in 0u64..(1 << 12)) {
        let set = AgentSet::from_mask(mask);
        prop_assert_eq!(set.to_mask(), mask);
        prop_assert_eq!(indicator(&set, 12).unwrap().to_set(), set.clone());
        let parsed: AgentSet = set.to_string().parse().unwrap();
        prop_assert_eq!(parsed, set);
    }

    #[test]
    fn cost_is_additive(a in mask6(), b in mask6(), values in prop::collection::vec(0.1f64..5.0, 6)) {
        let (s, _) = reference();
        let s = s.with_costs(CostModel::Explicit { values });
        let b = b.difference(&a);
        let joint = s.cost_of(&a.union(&b)).unwrap();
        prop_assert!((joint - s.cost_of(&a).unwrap() - s.cost_of(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn response_is_linear_in_the_set(a in mask6(), b in mask6()) {
        let (_, cache) = reference();
        let b = b.difference(&a);
        let joint = cache.aggregate(&a.union(&b)).unwrap();
        let split = cache.aggregate(&a).unwrap() + cache.aggregate(&b).unwrap();
        prop_assert!((joint - split).amax() < 1e-12);
    }

    #[test]
    fn h_of_a_set_with_itself_is_f_squared(a in mask6()) {
        let (s, cache) = reference();
        let form = SpectralForm::new(s).unwrap();
        let f = conv_error(cache, &a).unwrap();
        prop_assert!((form.h(&a, &a).unwrap() - f * f).abs() <= 1e-10 * (1.0 + f * f));
    }

    #[test]
    fn h_ignores_eigenvector_signs(a in mask6(), b in mask6(), flips in prop::collection::vec(any::<bool>(), 6)) {
        let (s, _) = reference();
        let spectral = spectral_decompose(&s.graph.laplacian()).unwrap();
        let mut flipped = spectral.clone();
        for (k, flip) in flips.iter().enumerate() {
            if *flip {
                flipped.eigvecs.column_mut(k).neg_mut();
            }
        }
        let h0 = SpectralForm::with_spectral(s, &spectral).unwrap().h(&a, &b).unwrap();
        let h1 = SpectralForm::with_spectral(s, &flipped).unwrap().h(&a, &b).unwrap();
        prop_assert!((h0 - h1).abs() <= 1e-12 * (1.0 + h0.abs()));
    }

    #[test]
    fn every_algorithm_stays_within_budget(
        budget in 0.0f64..8.0,
        values in prop::collection::vec(0.2f64..4.0, 6),
        seed in any::<u64>(),
    ) {
        let (s, cache) = reference();
        let s = s.with_costs(CostModel::Explicit { values }).with_budget(budget);
        let best = brute_force_with(&s, cache).unwrap();
        for r in [
            fdi_assa_with(&s, cache).unwrap(),
            ifdi_assa_with(&s, cache).unwrap(),
            best.clone(),
            random_baseline_with(&s, cache, seed).unwrap(),
            degree_baseline_with(&s, cache).unwrap(),
        ] {
            prop_assert!(r.cost <= budget + 1e-12, "{} cost {} > {}", r.algorithm, r.cost, budget);
            prop_assert!(r.f_value <= best.f_value * (1.0 + 1e-12) + 1e-15, "{} beats brute force", r.algorithm);
        }
    }

    #[test]
    fn greedy_meets_its_bound(budget in 1.0f64..6.0, values in prop::collection::vec(0.5f64..3.0, 6)) {
        let (s, cache) = reference();
        let s = s.with_costs(CostModel::Explicit { values }).with_budget(budget);
        let greedy = fdi_assa_with(&s, cache).unwrap();
        let best = brute_force_with(&s, cache).unwrap();
        prop_assert!(greedy.f_value >= greedy.bound * best.f_value - 1e-9);
    }

    #[test]
    fn laplacian_rows_sum_to_zero(n in 2usize..12, extra in prop::collection::vec((1usize..12, 1usize..12), 0..10)) {
        let mut edges: Vec<(usize, usize)> = (2..=n).map(|i| (i - 1, i)).collect();
        for (i, j) in extra {
            let e = (i.min(j), i.max(j));
            if i != j && j <= n && i <= n && !edges.contains(&e) {
                edges.push(e);
            }
        }
        let g = Graph::explicit(n, &edges).unwrap();
        let l = g.laplacian();
        for r in 0..n {
            prop_assert!(l.row(r).sum().abs() < 1e-12);
        }
        let spectral = spectral_decompose(&l).unwrap();
        prop_assert!(spectral.eigenvalues[0].abs() < 1e-9);
        prop_assert!((spectral.reconstruct() - l).amax() < 1e-9);
    }

    #[test]
    fn g17_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
    }
}
