use olps_core::backtest::{day_factor, down_day_probe};
use olps_core::market_data::split_indices;
use olps_core::numerics::{dot, project_simplex, sma};
use olps_core::strategies::{pamr_update, price_adjusted, smar_portfolio, smr_portfolio};
use olps_core::{
    describe, load_prices, load_relatives, run, synth_market, to_relatives, CostModel,
    MarketScenario, Portfolio, PredictedRelative, PriceMatrix, RelativeMatrix, StrategyKind,
    StrategySpec,
};
use proptest::prelude::*;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn on_simplex(w: &[f64]) -> bool {
    w.iter().all(|&v| v >= -1e-12) && (w.iter().sum::<f64>() - 1.0).abs() <= 1e-9
}

fn simplex_point(m: usize) -> impl Strategy<Value = Portfolio> {
    prop::collection::vec(0.01f64..1.0, m).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let rest: f64 = w[1..].iter().sum();
        w[0] = 1.0 - rest;
        Portfolio::new(w).unwrap()
    })
}

fn relatives(days: usize, m: usize) -> impl Strategy<Value = RelativeMatrix> {
    prop::collection::vec(prop::collection::vec(0.7f64..1.4, m), days)
        .prop_map(|rows| RelativeMatrix::from_unlabelled_rows(&rows).unwrap())
}

fn kind() -> impl Strategy<Value = StrategyKind> {
    prop::sample::select(StrategyKind::ALL.to_vec())
}

proptest! {
    #[test]
    fn projection_lands_on_simplex_and_is_nearest(
        v in prop::collection::vec(-5.0f64..5.0, 1..8),
        probe in prop::collection::vec(0.0f64..1.0, 8),
    ) {
        let p = project_simplex(&v).unwrap();
        prop_assert!(on_simplex(&p));
        // any other simplex point is no closer to v
        let q: Vec<f64> = probe[..v.len()].iter().map(|x| x + 1e-3).collect();
        let total: f64 = q.iter().sum();
        let q: Vec<f64> = q.iter().map(|x| x / total).collect();
        prop_assert!(sq_dist(&p, &v) <= sq_dist(&q, &v) + 1e-12);
        let again = project_simplex(&p).unwrap();
        for (a, b) in again.iter().zip(p.iter()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn projection_commutes_with_shift(v in prop::collection::vec(-5.0f64..5.0, 2..6), c in -3.0f64..3.0) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let a = project_simplex(&v).unwrap();
        let b = project_simplex(&shifted).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn sma_of_constant_rows_is_the_constant(row in prop::collection::vec(0.1f64..10.0, 1..5), n in 1usize..9, w in 1usize..9) {
        let rows = vec![row.clone(); n];
        let avg = sma(&rows, w).unwrap();
        for (a, r) in avg.iter().zip(&row) {
            prop_assert!((a - r).abs() <= 1e-12 * r);
        }
    }

    #[test]
    fn price_adjusted_stays_on_simplex(b in simplex_point(4), x in prop::collection::vec(0.2f64..3.0, 4)) {
        let adjusted = price_adjusted(&b, &x).unwrap();
        prop_assert!(on_simplex(&adjusted));
        // flat day leaves the holdings unchanged
        let same = price_adjusted(&b, &[1.0; 4]).unwrap();
        for (a, w) in same.iter().zip(b.iter()) {
            prop_assert!((a - w).abs() <= 1e-15);
        }
    }

    #[test]
    fn smr_and_smar_pick_extremes(x in prop::collection::vec(0.5f64..1.5, 2..7)) {
        let worst = x.iter().copied().fold(f64::INFINITY, f64::min);
        let smr = smr_portfolio(&x).unwrap();
        prop_assert!(on_simplex(&smr));
        for (w, r) in smr.iter().zip(&x) {
            prop_assert!(*w == 0.0 || *r == worst);
        }
        let best = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let smar = smar_portfolio(&PredictedRelative::new(x.clone()).unwrap()).unwrap();
        for (w, r) in smar.iter().zip(&x) {
            prop_assert!(*w == 0.0 || *r == best);
        }
    }

    #[test]
    fn pamr_is_passive_when_satisfied(b in simplex_point(3), x in prop::collection::vec(0.5f64..1.5, 3)) {
        let eps = dot(&b, &x) + 0.01;
        prop_assert_eq!(pamr_update(&b, &x, eps).unwrap(), b);
    }

    #[test]
    fn net_never_exceeds_gross(
        b in simplex_point(3),
        prev in simplex_point(3),
        x in prop::collection::vec(0.5f64..1.5, 3),
        gamma in 0.0f64..0.05,
    ) {
        let f = day_factor(&b, &x, &prev, gamma).unwrap();
        prop_assert!(f.net_return <= dot(&b, &x));
        prop_assert!((0.0..=2.0 + 1e-12).contains(&f.turnover));
    }

    #[test]
    fn split_partitions_the_universe(m in 1usize..120, k in 1usize..15) {
        prop_assume!(k <= m);
        let names: Vec<String> = (0..m).map(|j| format!("T{:03}", (j * 37) % 1000)).collect();
        let groups = split_indices(&names, k).unwrap();
        prop_assert_eq!(groups.len(), k);
        let mut seen: Vec<usize> = groups.concat();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..m).collect::<Vec<_>>());
        let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
        prop_assert!(sizes.windows(2).all(|p| p[0] >= p[1] && p[0] - p[1] <= 1));
        let flat: Vec<&String> = groups.iter().flatten().map(|&j| &names[j]).collect();
        prop_assert!(flat.windows(2).all(|p| p[0] <= p[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_strategy_emits_valid_portfolios(data in relatives(40, 4), kind in kind(), gamma in 0.0f64..0.01) {
        let r = run(&data, &StrategySpec::new(kind), CostModel::new(gamma).unwrap()).unwrap();
        prop_assert_eq!(r.records.len(), 40);
        for d in &r.records {
            prop_assert!(on_simplex(&d.target));
            prop_assert!(d.wealth >= 0.0);
        }
    }

    #[test]
    fn targets_ignore_future_days(data in relatives(30, 3), kind in kind(), cut in 1usize..30, bump in 1.05f64..1.5) {
        let full = run(&data, &StrategySpec::new(kind), CostModel::free()).unwrap();
        // rewrite everything after `cut`
        let mut rows: Vec<Vec<f64>> = data.rows().map(<[f64]>::to_vec).collect();
        for row in &mut rows[cut..] {
            for v in row.iter_mut() {
                *v *= bump;
            }
        }
        let altered = RelativeMatrix::from_unlabelled_rows(&rows).unwrap();
        let other = run(&altered, &StrategySpec::new(kind), CostModel::free()).unwrap();
        // the target for day cut + 1 is decided before that day is revealed
        for t in 0..=cut.min(29) {
            prop_assert_eq!(&full.records[t].target, &other.records[t].target);
        }
    }

    #[test]
    fn costs_only_lower_wealth_for_cost_blind_strategies(data in relatives(40, 3), kind in kind(), gamma in 0.0001f64..0.02) {
        prop_assume!(!kind.is_cost_aware());
        let spec = StrategySpec::new(kind);
        let free = run(&data, &spec, CostModel::free()).unwrap();
        let paid = run(&data, &spec, CostModel::new(gamma).unwrap()).unwrap();
        prop_assert!(paid.final_wealth <= free.final_wealth);
        let more = run(&data, &spec, CostModel::new(2.0 * gamma).unwrap()).unwrap();
        prop_assert!(more.final_wealth <= paid.final_wealth);
    }

    #[test]
    fn price_scale_does_not_matter(seed in 0u64..1000, kind in kind(), scale in 0.01f64..100.0) {
        let prices = synth_market(&MarketScenario::random_walk(60, 3, 0.0, 0.03), seed).unwrap();
        let base = run(&to_relatives(&prices).unwrap(), &StrategySpec::new(kind), CostModel::free()).unwrap();
        let scaled = run(
            &to_relatives(&prices.scaled(scale).unwrap()).unwrap(),
            &StrategySpec::new(kind),
            CostModel::free(),
        )
        .unwrap();
        let rel = (base.final_wealth - scaled.final_wealth).abs() / base.final_wealth;
        prop_assert!(rel <= 1e-9, "{} vs {}", base.final_wealth, scaled.final_wealth);
    }

    #[test]
    fn single_asset_wealth_tracks_the_price(prices in prop::collection::vec(0.5f64..50.0, 2..60), kind in kind()) {
        let rows: Vec<Vec<f64>> = prices.iter().map(|p| vec![*p]).collect();
        let dates: Vec<String> = (0..rows.len()).map(|t| format!("{t:04}")).collect();
        let matrix = PriceMatrix::from_rows(vec!["A".into()], dates, &rows).unwrap();
        let data = to_relatives(&matrix).unwrap();
        let r = run(&data, &StrategySpec::new(kind), CostModel::free()).unwrap();
        let expected = prices[prices.len() - 1] / prices[0];
        prop_assert!((r.final_wealth - expected).abs() <= 1e-9 * expected);
        prop_assert!(down_day_probe(&data).unwrap() > 0.0);
    }

    #[test]
    fn frictionless_wealth_is_product_of_gross_returns(data in relatives(50, 4), kind in kind()) {
        let r = run(&data, &StrategySpec::new(kind), CostModel::free()).unwrap();
        let product: f64 = r
            .records
            .iter()
            .zip(data.rows())
            .map(|(d, x)| dot(&d.target, x))
            .product();
        prop_assert!((r.final_wealth - product).abs() <= 1e-9 * product);
    }

    #[test]
    fn csv_round_trip_is_exact(seed in 0u64..1000, days in 2usize..30, assets in 1usize..6) {
        let prices = synth_market(&MarketScenario::random_walk(days, assets, 0.001, 0.05), seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prices.csv");
        prices.save(&path).unwrap();
        prop_assert_eq!(&load_prices(&path).unwrap(), &prices);

        let rel = to_relatives(&prices).unwrap();
        let rel_path = dir.path().join("relatives.csv");
        rel.save(&rel_path).unwrap();
        let loaded = load_relatives(&rel_path).unwrap();
        prop_assert_eq!(&loaded, &rel);
        let summary = describe(&loaded, "s");
        prop_assert_eq!(summary.days, days - 1);
        prop_assert!(summary.min_relative <= summary.max_relative);
    }
}
