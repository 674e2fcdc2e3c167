//! Backtesting under the proportional commission model.
//!
//! Each day the strategy's target `b_t` is compared with the holdings carried
//! over from the previous close (the previous target after one day of price
//! drift, or all cash on the first day). The L1 distance between the two is
//! the day's turnover and the day's net return is
//! `(b_t . x_t) * (1 - gamma * turnover)`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::market_data::{to_relatives, PriceMatrix, RelativeMatrix, TableFormat};
use crate::numerics::{dot, l1_distance, Portfolio};
use crate::strategies::{StrategyKind, StrategySpec, StrategyState};

/// Proportional cost rate charged on every unit bought or sold.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostModel {
    gamma: f64,
}

impl CostModel {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!(
                "cost rate must lie in [0, 1], got {gamma}"
            )));
        }
        Ok(CostModel { gamma })
    }

    pub fn free() -> Self {
        CostModel { gamma: 0.0 }
    }

    pub fn gamma(self) -> f64 {
        self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayFactor {
    pub net_return: f64,
    pub turnover: f64,
}

/// Net return and turnover of holding `target` through a day with relatives
/// `x`, having entered the day with `holdings` (all zeros for cash).
pub fn day_factor(target: &[f64], x: &[f64], holdings: &[f64], gamma: f64) -> Result<DayFactor> {
    if target.len() != x.len() {
        return Err(Error::LengthMismatch {
            left: target.len(),
            right: x.len(),
        });
    }
    let turnover = l1_distance(target, holdings)?;
    Ok(DayFactor {
        net_return: dot(target, x) * (1.0 - gamma * turnover),
        turnover,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayRecord {
    /// 1-based trading day.
    pub day: usize,
    pub target: Portfolio,
    pub gross_return: f64,
    pub turnover: f64,
    pub net_return: f64,
    pub wealth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub strategy: StrategySpec,
    pub dataset: String,
    pub gamma: f64,
    pub records: Vec<DayRecord>,
    pub final_wealth: f64,
    /// A day's net return was non-positive and wealth was clamped to zero.
    pub ruined: bool,
}

impl BacktestResult {
    pub fn named(mut self, dataset: impl Into<String>) -> Self {
        self.dataset = dataset.into();
        self
    }

    pub fn wealth_path(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.wealth).collect()
    }

    /// One row per day: `day,gross_return,turnover,net_return,wealth`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "day,gross_return,turnover,net_return,wealth")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.day, r.gross_return, r.turnover, r.net_return, r.wealth
            )?;
        }
        Ok(())
    }
}

/// Runs `spec` over every day of `data`.
///
/// Day 1 holds the uniform portfolio bought from cash. From then on the
/// target for day `t` is produced from relatives up to day `t - 1` only.
pub fn run(data: &RelativeMatrix, spec: &StrategySpec, cost: CostModel) -> Result<BacktestResult> {
    let m = data.n_assets();
    let gamma = cost.gamma();
    let mut state = StrategyState::new(spec.clone(), m, gamma)?;
    let mut holdings = vec![0.0; m];
    let mut wealth = 1.0;
    let mut ruined = false;
    let mut records = Vec::with_capacity(data.n_days());

    for (t, x) in data.rows().enumerate() {
        let target = state.portfolio().clone();
        let factor = day_factor(&target, x, &holdings, gamma)?;
        if ruined || factor.net_return <= 0.0 {
            ruined = true;
            wealth = 0.0;
        } else {
            wealth *= factor.net_return;
        }
        records.push(DayRecord {
            day: t + 1,
            gross_return: dot(&target, x),
            target,
            turnover: factor.turnover,
            net_return: factor.net_return,
            wealth,
        });
        state.advance(x)?;
        holdings.clear();
        holdings.extend_from_slice(state.adjusted_portfolio());
    }

    Ok(BacktestResult {
        strategy: spec.clone(),
        dataset: String::new(),
        gamma,
        final_wealth: wealth,
        records,
        ruined,
    })
}

/// Holds a single asset only on days following a down day, cash otherwise
/// (cash on day 1), without costs. Returns the compounded wealth.
pub fn single_asset_down_day_probe(prices: &PriceMatrix) -> Result<f64> {
    down_day_probe(&to_relatives(prices)?)
}

/// [`single_asset_down_day_probe`] on relatives.
pub fn down_day_probe(data: &RelativeMatrix) -> Result<f64> {
    if data.n_assets() != 1 {
        return Err(Error::InvalidParameter(format!(
            "down-day probe needs exactly one asset, got {}",
            data.n_assets()
        )));
    }
    let x: Vec<f64> = data.rows().map(|r| r[0]).collect();
    Ok(x.windows(2)
        .filter(|pair| pair[0] < 1.0)
        .map(|pair| pair[1])
        .product())
}

/// Final wealth per dataset (rows) and strategy (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub datasets: Vec<String>,
    pub strategies: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

/// Arranges results into a dataset-by-strategy matrix, in order of first
/// appearance.
pub fn summarize(results: &[BacktestResult]) -> Result<SummaryTable> {
    if results.is_empty() {
        return Err(Error::InvalidParameter("nothing to summarize".into()));
    }
    let mut datasets: Vec<String> = Vec::new();
    let mut strategies: Vec<String> = Vec::new();
    for r in results {
        let label = r.strategy.kind.name().to_owned();
        if !datasets.contains(&r.dataset) {
            datasets.push(r.dataset.clone());
        }
        if !strategies.contains(&label) {
            strategies.push(label);
        }
    }
    let mut values = vec![vec![None; strategies.len()]; datasets.len()];
    for r in results {
        let i = datasets
            .iter()
            .position(|d| *d == r.dataset)
            .expect("collected");
        let j = strategies
            .iter()
            .position(|s| s == r.strategy.kind.name())
            .expect("collected");
        values[i][j] = Some(r.final_wealth);
    }
    Ok(SummaryTable {
        datasets,
        strategies,
        values,
    })
}

impl SummaryTable {
    /// Column indices of the two largest wealths in `row`; ties go to the
    /// leftmost column.
    pub fn top_two(&self, row: usize) -> Vec<usize> {
        let mut ranked: Vec<(usize, f64)> = self.values[row]
            .iter()
            .enumerate()
            .filter_map(|(j, v)| v.map(|v| (j, v)))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut top: Vec<usize> = ranked.into_iter().take(2).map(|(j, _)| j).collect();
        top.sort_unstable();
        top
    }

    pub fn render(&self, format: TableFormat) -> String {
        match format {
            TableFormat::Csv => self.render_csv(),
            TableFormat::Markdown => self.render_markdown(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = format!("Data,{},Top two\n", self.strategies.join(","));
        for (i, name) in self.datasets.iter().enumerate() {
            let cells: Vec<String> = self.values[i]
                .iter()
                .map(|v| v.map(format_wealth).unwrap_or_default())
                .collect();
            let top: Vec<&str> = self
                .top_two(i)
                .into_iter()
                .map(|j| self.strategies[j].as_str())
                .collect();
            out.push_str(&format!("{name},{},{}\n", cells.join(","), top.join(";")));
        }
        out
    }

    fn render_markdown(&self) -> String {
        let mut out = format!("| Data | {} |\n", self.strategies.join(" | "));
        out.push_str("|---|");
        out.push_str(&"---:|".repeat(self.strategies.len()));
        out.push('\n');
        for (i, name) in self.datasets.iter().enumerate() {
            let top = self.top_two(i);
            let cells: Vec<String> = self.values[i]
                .iter()
                .enumerate()
                .map(|(j, v)| match v {
                    Some(v) if top.contains(&j) => format!("**{}**", format_wealth(*v)),
                    Some(v) => format_wealth(*v),
                    None => String::new(),
                })
                .collect();
            out.push_str(&format!("| {name} | {} |\n", cells.join(" | ")));
        }
        out
    }
}

/// Two decimals for ordinary values; `d.dde+dd` at or above 1000 and below
/// 0.005. Exact zero prints as `0.00`.
pub fn format_wealth(value: f64) -> String {
    if value == 0.0 {
        return "0.00".to_owned();
    }
    if value.is_finite() && value.abs() < 1000.0 && value.abs() >= 0.005 {
        let fixed = format!("{value:.2}");
        if fixed
            .trim_start_matches('-')
            .parse::<f64>()
            .is_ok_and(|v| v < 1000.0)
        {
            return fixed;
        }
    }
    let sci = format!("{value:.2e}");
    match sci.split_once('e') {
        Some((mantissa, exponent)) => {
            let exp: i32 = exponent.parse().unwrap_or(0);
            let sign = if exp < 0 { '-' } else { '+' };
            format!("{mantissa}e{sign}{:02}", exp.abs())
        }
        None => sci,
    }
}

/// Convenience: every strategy at its default parameters.
pub fn default_specs() -> Vec<StrategySpec> {
    StrategyKind::ALL
        .into_iter()
        .map(StrategySpec::new)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{synth_market, MarketScenario};

    fn rel(rows: &[Vec<f64>]) -> RelativeMatrix {
        RelativeMatrix::from_unlabelled_rows(rows).unwrap()
    }

    #[test]
    fn cost_model_bounds() {
        assert!(CostModel::new(0.0).is_ok());
        assert!(CostModel::new(1.0).is_ok());
        assert!(CostModel::new(1.5).is_err());
        assert!(CostModel::new(-0.1).is_err());
        assert!(CostModel::new(f64::NAN).is_err());
    }

    #[test]
    fn day_factor_examples() {
        let f = day_factor(&[0.3, 0.7], &[1.2, 0.9], &[1.0, 0.0], 0.0).unwrap();
        assert_eq!(f.net_return, 0.3 * 1.2 + 0.7 * 0.9);
        let f = day_factor(&[0.3, 0.7], &[1.2, 0.9], &[0.3, 0.7], 0.01).unwrap();
        assert_eq!(f.turnover, 0.0);
        assert_eq!(f.net_return, 0.3 * 1.2 + 0.7 * 0.9);
        let f = day_factor(&[0.0, 1.0], &[1.0, 1.0], &[1.0, 0.0], 0.0025).unwrap();
        assert_eq!(f.turnover, 2.0);
        assert!((f.net_return - 0.995).abs() < 1e-15);
        // entry from cash
        let f = day_factor(&[0.5, 0.5], &[1.0, 1.0], &[0.0, 0.0], 0.0025).unwrap();
        assert_eq!(f.turnover, 1.0);
        assert_eq!(f.net_return, 0.9975);
    }

    #[test]
    fn one_flat_day() {
        let data = rel(&[vec![1.0, 1.0, 1.0]]);
        for spec in default_specs() {
            let r = run(&data, &spec, CostModel::free()).unwrap();
            assert_eq!(r.final_wealth, 1.0, "{}", spec.kind);
            assert_eq!(r.records.len(), 1);
        }
    }

    #[test]
    fn crp_on_alternating_market() {
        let prices = synth_market(&MarketScenario::alternating(21, 2), 0).unwrap();
        let data = to_relatives(&prices).unwrap();
        let r = run(
            &data,
            &StrategySpec::new(StrategyKind::CrpU),
            CostModel::free(),
        )
        .unwrap();
        let returns: Vec<f64> = r.records.iter().map(|d| d.net_return).collect();
        assert_eq!(&returns[..4], &[1.5, 0.75, 1.5, 0.75]);
        let expected = 1.125f64.powi(10);
        assert!((r.final_wealth - expected).abs() / expected < 1e-9);
        assert!((r.final_wealth - 3.2473).abs() < 1e-4);
    }

    #[test]
    fn bah_pays_only_entry_cost() {
        let prices = synth_market(&MarketScenario::random_walk(60, 4, 0.0, 0.02), 11).unwrap();
        let data = to_relatives(&prices).unwrap();
        let spec = StrategySpec::new(StrategyKind::BahU);
        let free = run(&data, &spec, CostModel::free()).unwrap();
        let paid = run(&data, &spec, CostModel::new(0.0025).unwrap()).unwrap();
        assert_eq!(paid.records[0].turnover, 1.0);
        assert!(paid.records[1..].iter().all(|d| d.turnover == 0.0));
        let ratio = paid.final_wealth / free.final_wealth;
        assert!((ratio - 0.9975).abs() < 1e-13, "{ratio}");
    }

    #[test]
    fn ruin_clamps_wealth() {
        let data = rel(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]]);
        let r = run(
            &data,
            &StrategySpec::new(StrategyKind::CrpU),
            CostModel::new(1.0).unwrap(),
        )
        .unwrap();
        assert!(r.ruined);
        assert_eq!(r.final_wealth, 0.0);
        assert!(r.records.iter().all(|d| d.wealth == 0.0));
    }

    #[test]
    fn final_wealth_matches_last_record() {
        let prices = synth_market(&MarketScenario::mean_reverting(80, 3, 0.2, 0.03), 5).unwrap();
        let data = to_relatives(&prices).unwrap();
        for spec in default_specs() {
            let r = run(&data, &spec, CostModel::new(0.001).unwrap()).unwrap();
            assert_eq!(r.final_wealth, r.records.last().unwrap().wealth);
            assert!(r.records.iter().all(|d| d.net_return <= d.gross_return));
        }
    }

    #[test]
    fn probe_examples() {
        let rising = rel(&[vec![1.01], vec![1.02], vec![1.03]]);
        assert_eq!(down_day_probe(&rising).unwrap(), 1.0);

        let alternating: Vec<Vec<f64>> = (0..9)
            .map(|t| vec![if t % 2 == 0 { 0.5 } else { 2.0 }])
            .collect();
        // drops on days 1, 3, 5, 7 are each followed by a 2.0 day
        assert_eq!(down_day_probe(&rel(&alternating)).unwrap(), 16.0);

        assert!(down_day_probe(&rel(&[vec![1.0, 1.0]])).is_err());
    }

    #[test]
    fn probe_from_prices() {
        let prices = PriceMatrix::from_rows(
            vec!["K".into()],
            (0..5).map(|d| d.to_string()).collect(),
            &[vec![10.0], vec![5.0], vec![10.0], vec![20.0], vec![10.0]],
        )
        .unwrap();
        assert_eq!(single_asset_down_day_probe(&prices).unwrap(), 2.0);
    }

    #[test]
    fn wealth_formatting() {
        assert_eq!(format_wealth(14.4951), "14.50");
        assert_eq!(format_wealth(4.3871e15), "4.39e+15");
        assert_eq!(format_wealth(1.44e3), "1.44e+03");
        assert_eq!(format_wealth(999.994), "999.99");
        assert_eq!(format_wealth(999.996), "1.00e+03");
        assert_eq!(format_wealth(0.0049), "4.90e-03");
        assert_eq!(format_wealth(0.005), "0.01");
        assert_eq!(format_wealth(0.0), "0.00");
        assert_eq!(format_wealth(9.999e15), "1.00e+16");
    }

    fn fake(dataset: &str, kind: StrategyKind, wealth: f64) -> BacktestResult {
        BacktestResult {
            strategy: StrategySpec::new(kind),
            dataset: dataset.into(),
            gamma: 0.0,
            records: Vec::new(),
            final_wealth: wealth,
            ruined: false,
        }
    }

    #[test]
    fn summary_layout_and_bolding() {
        let results = vec![
            fake("A", StrategyKind::BahU, 14.4951),
            fake("A", StrategyKind::CrpU, 27.08),
            fake("A", StrategyKind::Olmar, 3.68e16),
            fake("B", StrategyKind::BahU, 1.0),
            fake("B", StrategyKind::CrpU, 1.0),
            fake("B", StrategyKind::Olmar, 1.0),
        ];
        let table = summarize(&results).unwrap();
        assert_eq!(table.datasets, vec!["A", "B"]);
        assert_eq!(table.strategies, vec!["BAH_U", "CRP_U", "OLMAR"]);
        assert_eq!(table.top_two(0), vec![1, 2]);
        // full tie: leftmost two
        assert_eq!(table.top_two(1), vec![0, 1]);
        let md = table.render(TableFormat::Markdown);
        assert!(
            md.contains("| A | 14.50 | **27.08** | **3.68e+16** |"),
            "{md}"
        );
        let csv = table.render(TableFormat::Csv);
        assert!(csv.starts_with("Data,BAH_U,CRP_U,OLMAR,Top two\n"));
        assert!(csv.contains("A,14.50,27.08,3.68e+16,CRP_U;OLMAR\n"));
    }

    #[test]
    fn two_strategies_both_bold() {
        let table = summarize(&[
            fake("A", StrategyKind::BahU, 1.2),
            fake("A", StrategyKind::Smr, 0.4),
        ])
        .unwrap();
        assert_eq!(table.top_two(0), vec![0, 1]);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn run_csv_export() {
        let data = rel(&[vec![1.0, 2.0], vec![1.0, 0.5]]);
        let r = run(
            &data,
            &StrategySpec::new(StrategyKind::CrpU),
            CostModel::free(),
        )
        .unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "day,gross_return,turnover,net_return,wealth\n1,1.5,1,1.5,1.5\n2,0.75,0.3333333333333333,0.75,1.125\n"
        );
    }
}
