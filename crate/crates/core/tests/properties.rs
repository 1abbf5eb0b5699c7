//! Invariants of the scoring engine, checked on random decision matrices.

mod support;

use crosswash::{normalize_matrix, score_run, weighted_sum, Criterion, CriterionId, DecisionMatrix, Direction};
use proptest::prelude::*;

use support::{activities_from, code, criteria_from, oracle, weights_from};

const TOL: f64 = 1e-9;

/// Raw matrices of 1..=6 alternatives by 1..=4 criteria, plus weights and
/// directions.
fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<bool>)> {
    (1usize..=6, 1usize..=4).prop_flat_map(|(rows, cols)| {
        (
            prop::collection::vec(prop::collection::vec(-1000.0f64..1000.0, cols), rows),
            prop::collection::vec(0.0f64..1.0, cols)
                .prop_filter("needs a positive weight", |w| w.iter().any(|x| *x > 1e-6)),
            prop::collection::vec(any::<bool>(), cols),
        )
    })
}

/// Like [`instance`] but with small integer levels, so ties are common.
fn level_instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<bool>)> {
    (1usize..=6, 1usize..=4).prop_flat_map(|(rows, cols)| {
        (
            prop::collection::vec(prop::collection::vec((0u8..=5).prop_map(f64::from), cols), rows),
            prop::collection::vec(prop::sample::select(vec![0.0, 0.1, 0.2, 0.3, 0.5]), cols)
                .prop_filter("needs a positive weight", |w| w.iter().any(|x| *x > 0.0)),
            prop::collection::vec(any::<bool>(), cols),
        )
    })
}

fn matrix(raw: &[Vec<f64>], benefit: &[bool]) -> DecisionMatrix {
    DecisionMatrix::new((0..raw.len()).map(code).collect(), criteria_from(benefit), raw.to_vec()).unwrap()
}

fn check_against_oracle(raw: &[Vec<f64>], weights: &[f64], benefit: &[bool]) -> Result<(), TestCaseError> {
    let expected = oracle(raw, weights, benefit);
    let table = score_run(&activities_from(raw), &criteria_from(benefit), &weights_from(weights)).unwrap();
    prop_assert_eq!(table.rows.len(), raw.len());
    for (i, (s, p)) in expected.sums.iter().zip(&expected.percents).enumerate() {
        let row = table.row(&code(i)).unwrap();
        prop_assert!((row.weighted_sum - s).abs() <= TOL, "sum {} vs {}", row.weighted_sum, s);
        prop_assert!(
            (row.normalized_percent - p).abs() <= TOL,
            "percent {} vs {}",
            row.normalized_percent,
            p
        );
    }
    prop_assert!((table.average_percent - expected.average).abs() <= TOL);
    prop_assert!((table.deterioration_percent - (100.0 - expected.average)).abs() <= TOL);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_brute_force_oracle((raw, weights, benefit) in instance()) {
        check_against_oracle(&raw, &weights, &benefit)?;
    }

    #[test]
    fn matches_brute_force_oracle_on_levels((raw, weights, benefit) in level_instance()) {
        check_against_oracle(&raw, &weights, &benefit)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn normalized_entries_in_unit_interval((raw, _w, benefit) in instance()) {
        let n = normalize_matrix(&matrix(&raw, &benefit));
        for i in 0..n.n_alternatives() {
            for &v in n.row(i) {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn normalization_is_idempotent((raw, _w, benefit) in instance()) {
        let benefit_only = vec![true; benefit.len()];
        let once = normalize_matrix(&matrix(&raw, &benefit_only));
        let twice = normalize_matrix(&once);
        for i in 0..once.n_alternatives() {
            for (a, b) in once.row(i).iter().zip(twice.row(i)) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn normalization_is_affine_invariant(
        (raw, _w, _b) in instance(),
        scale in 0.01f64..100.0,
        shift in -1000.0f64..1000.0,
        negate in any::<bool>(),
    ) {
        let cols = raw[0].len();
        let a = if negate { -scale } else { scale };
        let moved: Vec<Vec<f64>> = raw.iter().map(|r| r.iter().map(|v| a * v + shift).collect()).collect();
        let base = normalize_matrix(&matrix(&raw, &vec![true; cols]));
        // a negative scale turns a benefit column into its cost mirror
        let got = normalize_matrix(&matrix(&moved, &vec![!negate; cols]));
        for i in 0..base.n_alternatives() {
            for (x, y) in base.row(i).iter().zip(got.row(i)) {
                prop_assert!((x - y).abs() <= TOL, "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn percents_and_ranking_ignore_weight_scale(
        (raw, weights, benefit) in instance(),
        factor in 0.01f64..100.0,
    ) {
        let acts = activities_from(&raw);
        let criteria = criteria_from(&benefit);
        let w = weights_from(&weights);
        let base = score_run(&acts, &criteria, &w).unwrap();
        let scaled = score_run(&acts, &criteria, &w.scaled(factor).unwrap()).unwrap();
        for (a, b) in base.rows.iter().zip(&scaled.rows) {
            prop_assert_eq!(&a.code, &b.code);
            prop_assert_eq!(a.rank, b.rank);
            prop_assert!((a.normalized_percent - b.normalized_percent).abs() <= TOL);
            prop_assert!((b.weighted_sum - factor * a.weighted_sum).abs() <= 1e-9 * factor.max(1.0));
        }
    }

    #[test]
    fn percent_range_and_endpoints((raw, weights, benefit) in instance()) {
        let table = score_run(&activities_from(&raw), &criteria_from(&benefit), &weights_from(&weights)).unwrap();
        for r in &table.rows {
            prop_assert!((0.0..=100.0).contains(&r.normalized_percent));
        }
        let mut sums: Vec<f64> = table.rows.iter().map(|r| r.weighted_sum).collect();
        sums.sort_by(f64::total_cmp);
        let distinct = sums.windows(2).all(|w| w[1] - w[0] > 1e-9);
        if distinct && sums.len() > 1 {
            prop_assert_eq!(table.rows.iter().filter(|r| r.normalized_percent == 100.0).count(), 1);
            prop_assert_eq!(table.rows.iter().filter(|r| r.normalized_percent == 0.0).count(), 1);
        }
    }

    #[test]
    fn raising_a_benefit_value_never_lowers_that_sum(
        (raw, weights, _b) in instance(),
        pick in any::<prop::sample::Index>(),
        column in any::<prop::sample::Index>(),
        bump in 0.0f64..500.0,
    ) {
        let cols = raw[0].len();
        let benefit = vec![true; cols];
        let i = pick.index(raw.len());
        let j = column.index(cols);
        let mut raised = raw.clone();
        raised[i][j] += bump;
        let w = weights_from(&weights);
        let before = weighted_sum(&normalize_matrix(&matrix(&raw, &benefit)), &w).unwrap();
        let after = weighted_sum(&normalize_matrix(&matrix(&raised, &benefit)), &w).unwrap();
        prop_assert!(after[i].1 >= before[i].1 - 1e-12, "{} < {}", after[i].1, before[i].1);
    }

    #[test]
    fn input_order_does_not_matter(
        (raw, weights, benefit) in instance(),
        seed in any::<u64>(),
    ) {
        let acts = activities_from(&raw);
        let mut shuffled = acts.clone();
        // deterministic Fisher-Yates from the seed
        let mut state = seed | 1;
        for k in (1..shuffled.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(k, (state % (k as u64 + 1)) as usize);
        }
        let criteria = criteria_from(&benefit);
        let w = weights_from(&weights);
        let a = score_run(&acts, &criteria, &w).unwrap();
        let b = score_run(&shuffled, &criteria, &w).unwrap();
        prop_assert_eq!(a.rows.len(), b.rows.len());
        for (x, y) in a.rows.iter().zip(&b.rows) {
            prop_assert_eq!(&x.code, &y.code);
            prop_assert!((x.normalized_percent - y.normalized_percent).abs() <= TOL);
        }
        prop_assert!((a.average_percent - b.average_percent).abs() <= TOL);
    }
}

#[test]
fn cost_and_benefit_mirror_each_other() {
    let raw = vec![vec![3.0], vec![7.0], vec![5.0]];
    let benefit = normalize_matrix(&matrix(&raw, &[true]));
    let cost = normalize_matrix(&matrix(&raw, &[false]));
    for i in 0..3 {
        assert!((benefit.value(i, 0) + cost.value(i, 0) - 1.0).abs() < 1e-12);
    }
    let _ = Criterion::cost(CriterionId::Capex);
    assert_eq!(Direction::default(), Direction::Benefit);
}
